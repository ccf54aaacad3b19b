"""Quasi-stationary law of the anchored chain.

Two independent routes:

* an exact substochastic kernel on anchored configurations of depth
  ``< w`` whose Yaglom limit is found by power iteration from ``{0}``;
* rejection Monte Carlo of the anchored chain from ``{0}``, conditioned on
  survival, tabulated on cylinder patterns.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import rng, simulate
from .estimators import InsufficientDataError, to_distribution, wilson_ci
from .lattice import ContractError, SimParams, WindowOverflowError
from .tables import DistributionTable, EncodingMismatchError, tv_distance
from .view import DepthError, InitialCondition, pattern_key

MAX_WIDTH = 12
ROW_TOL = 1e-12
# rejection sampling of the conditioned chain is hopeless past this depth
MC_CONDITION_MAX_N = 40
MC_CONDITION_P = 0.45

__all__ = [
    "TruncatedStateSpace", "Kernel", "YaglomResult", "MCLaw", "ConvergenceRow",
    "ConvergenceResult", "build_kernel", "yaglom", "yaglom_sequence",
    "conditional_law_mc", "convergence_experiment", "tv_distance",
    "NonConvergenceError",
]


class NonConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class TruncatedStateSpace:
    """Anchored configurations inside ``{0, -2, ..., -2(w-1)}``.

    State ``s`` has bit ``t - 1`` set iff offset ``-2t`` is occupied;
    state 0 is ``{0}``.  ``EMPTY`` lives only in the absorption column.
    """

    w: int
    mode: str = "project"

    def __post_init__(self):
        if self.mode not in ("project", "kill"):
            raise ContractError(f"mode must be 'project' or 'kill', got {self.mode!r}")
        if not 1 <= self.w <= MAX_WIDTH:
            raise ContractError(f"w must lie in [1, {MAX_WIDTH}], got {self.w}")

    @property
    def size(self) -> int:
        return 1 << (self.w - 1)

    @property
    def encoding(self) -> str:
        return f"anchored:{self.w}"

    def key(self, s: int) -> str:
        return pattern_key(s, self.w - 1)

    def offsets(self, s: int) -> tuple[int, ...]:
        return (0,) + tuple(-2 * t for t in range(1, self.w) if (s >> (t - 1)) & 1)

    def index(self, offsets) -> int:
        s = 0
        for o in offsets:
            if o == 0:
                continue
            t = -o // 2
            if o % 2 or not 1 <= t < self.w:
                raise ContractError(f"offset {o} is outside the state space")
            s |= 1 << (t - 1)
        return s


@dataclass(frozen=True, eq=False)
class Kernel:
    """``matrix[a, b]`` = P(a -> b) among live states; ``absorption[a]`` = P(a -> EMPTY)."""

    p: float
    space: TruncatedStateSpace
    matrix: np.ndarray
    absorption: np.ndarray

    def __post_init__(self):
        rows = self.matrix.sum(axis=1) + self.absorption
        if (self.matrix < 0).any() or (self.absorption < 0).any():
            raise ValueError("negative transition probability")
        if np.abs(rows - 1.0).max() > ROW_TOL:
            raise ValueError(f"row sums deviate from 1 by {np.abs(rows - 1.0).max():.3g}")

    def row(self, offsets) -> dict:
        """Transition law out of ``offsets`` keyed by state key, plus ``None`` for EMPTY."""
        s = self.space.index(offsets)
        out = {self.space.key(b): float(v) for b, v in enumerate(self.matrix[s]) if v > 0}
        out[None] = float(self.absorption[s])
        return out


def _state_row(bits: int, w: int, p: float, kill: bool):
    # children sit at +1, -1, ..., -(2w-1); child c has parents c - 1 and c + 1
    parents = [0] + [t for t in range(1, w) if (bits >> (t - 1)) & 1]
    npar = np.zeros(w + 1, dtype=int)  # npar[i] counts parents of child +1 - 2i
    for t in parents:
        npar[t] += 1
        npar[t + 1] += 1
    q = 1.0 - (1.0 - p) ** npar
    row = np.zeros(1 << (w - 1))
    absorb = float(np.prod(1.0 - q))
    above = 1.0
    for i in range(w + 1):
        top = above * q[i]
        above *= 1.0 - q[i]
        if top == 0.0:
            continue
        vec = np.ones(1)
        for t in range(1, w):
            qi = q[i + t] if i + t <= w else 0.0
            vec = np.concatenate([vec * (1.0 - qi), vec * qi])
        if kill:
            stay = float(np.prod(1.0 - q[i + w:])) if i + w <= w else 1.0
            absorb += top * (1.0 - stay)
            top *= stay
        row += top * vec
    return row, absorb


def build_kernel(p: float, space: TruncatedStateSpace) -> Kernel:
    """Exact one-step law of the truncated anchored chain.

    Child sites receive disjoint bond pairs, so given the parent set they are
    independent; each row is the product-measure sum over the position of
    the rightmost child.
    """
    if not 0.0 <= p <= 1.0:
        raise ContractError(f"p must lie in [0, 1], got {p}")
    n = space.size
    matrix = np.zeros((n, n))
    absorption = np.zeros(n)
    kill = space.mode == "kill"
    for s in range(n):
        matrix[s], absorption[s] = _state_row(s, space.w, p, kill)
    return Kernel(p, space, matrix, absorption)


@dataclass(frozen=True)
class YaglomResult:
    nu: DistributionTable
    lam: float
    iterations: int
    residual: float

    def to_json(self, kernel: "Kernel") -> dict:
        space = kernel.space
        return {
            "p": kernel.p,
            "w": space.w,
            "mode": space.mode,
            "lambda": self.lam,
            "iterations": self.iterations,
            "residual": self.residual,
            "states": [
                {"offsets": list(space.offsets(s)), "prob": float(pr)}
                for s, pr in enumerate(self.nu.probs)
            ],
        }


def _tv(u, v) -> float:
    return 0.5 * float(np.abs(u - v).sum())


def _table(space: TruncatedStateSpace, v: np.ndarray) -> DistributionTable:
    keys = tuple(space.key(s) for s in range(space.size))
    return DistributionTable(keys, v / v.sum(), space.encoding)


def yaglom(kernel: Kernel, tol: float = 1e-12, max_iter: int = 100_000) -> YaglomResult:
    """Power iteration ``v <- normalize(v K)`` from the point mass on ``{0}``."""
    K = kernel.matrix
    v = np.zeros(kernel.space.size)
    v[0] = 1.0
    for it in range(1, max_iter + 1):
        u = v @ K
        mass = u.sum()
        if mass <= 0.0:
            raise NonConvergenceError("the chain is absorbed in one step from every state")
        u /= mass
        change = _tv(u, v)
        v = u
        if change < tol:
            nxt = v @ K
            lam = float(nxt.sum())
            residual = _tv(nxt / lam, v)
            return YaglomResult(_table(kernel.space, v), lam, it, residual)
    raise NonConvergenceError(f"no convergence to tol={tol} within {max_iter} iterations")


def yaglom_sequence(kernel: Kernel, n_max: int) -> list[DistributionTable]:
    """Truncated conditional laws of the chain at levels ``0..n_max`` from ``{0}``."""
    v = np.zeros(kernel.space.size)
    v[0] = 1.0
    out = [_table(kernel.space, v)]
    for _ in range(n_max):
        v = v @ kernel.matrix
        if v.sum() <= 0.0:
            break
        v /= v.sum()
        out.append(_table(kernel.space, v))
    return out


def _pattern_table(counts: Counter, r: int) -> DistributionTable:
    return to_distribution({pattern_key(c, r): k for c, k in counts.items()}, f"cylinder:{r}")


@dataclass(frozen=True)
class MCLaw:
    """Survivor tally of a conditioned run; ``table`` is ``None`` without survivors."""

    n: int
    r: int
    trials: int
    survivors: int
    counts: Counter = field(compare=False)

    @property
    def has_data(self) -> bool:
        return self.survivors > 0

    @property
    def table(self) -> DistributionTable | None:
        return _pattern_table(self.counts, self.r) if self.has_data else None

    def rows(self, z: float = 1.96) -> list[dict]:
        rows = []
        for code in sorted(self.counts, key=lambda c: pattern_key(c, self.r)):
            c = self.counts[code]
            lo, hi = wilson_ci(c, self.survivors, z)
            rows.append({
                "pattern": pattern_key(code, self.r), "count": c, "prob": c / self.survivors,
                "ci_low": lo, "ci_high": hi, "survivors": self.survivors, "trials": self.trials,
            })
        return rows


def _run_patterns(params: SimParams, init: InitialCondition, levels, r, trials, first_trial,
                  shallow: str = "error"):
    if shallow not in ("error", "drop"):
        raise ContractError(f"shallow must be 'error' or 'drop', got {shallow!r}")
    if trials < 1:
        raise ContractError("trials must be positive")
    start = init.level_config(params)
    keys = rng.trial_keys(rng.master_key(params.seed), first_trial, trials)
    codes, death, overflow = simulate.simulate_patterns(
        keys, params.p, start.occupancy.copy(), start.origin,
        init.kind == "full", params.n_max, np.asarray(levels, dtype=np.int64), r,
    )
    if overflow.any():
        raise WindowOverflowError(f"{int(overflow.sum())} trials left the window on the right")
    if shallow == "error" and (codes == simulate.TOO_SHALLOW).any():
        raise DepthError(f"radius {r} exceeds the reliable depth of the window")
    return codes, death


def conditional_law_mc(params: SimParams, n: int, trials: int, r: int = 3,
                       first_trial: int = 0) -> MCLaw:
    """Law of the radius-``r`` pattern of the chain from ``{0}`` at level ``n``
    among trials that survive past ``n``."""
    if n < 0 or r < 1:
        raise ContractError("need n >= 0 and r >= 1")
    if n > MC_CONDITION_MAX_N and params.p <= MC_CONDITION_P:
        raise ContractError(
            f"rejection sampling past n={MC_CONDITION_MAX_N} at p <= {MC_CONDITION_P} "
            "is not supported; use the exact kernel"
        )
    run = SimParams(params.p, max(n, 1), params.window_width, params.seed)
    codes, _ = _run_patterns(run, InitialCondition.origin(), [n], r, trials, first_trial)
    alive = codes[:, 0][codes[:, 0] >= 0]
    counts = Counter(dict(zip(*[a.tolist() for a in np.unique(alive, return_counts=True)])))
    return MCLaw(n, r, trials, int(alive.size), counts)


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    tv: float
    ci: float
    count: int
    unresolved: int = 0


@dataclass(frozen=True)
class ConvergenceResult:
    rows: list[ConvergenceRow]
    r: int
    trials: int

    @property
    def decreasing(self) -> bool:
        tvs = [row.tv for row in self.rows]
        return all(b < a for a, b in zip(tvs, tvs[1:]))

    @property
    def m_schedule(self) -> list[int]:
        """The diagnostic scale ``floor(n ** (1/3))`` at each checkpoint."""
        return [int(math.floor(row.n ** (1.0 / 3.0) + 1e-12)) for row in self.rows]


def convergence_experiment(params: SimParams, init: InitialCondition, n_list, r: int,
                           trials: int, oracle: DistributionTable, z: float = 1.96,
                           first_trial: int = 0, shallow: str = "error") -> ConvergenceResult:
    """Distance between the empirical radius-``r`` law of the chain at each
    ``n`` and the oracle law.

    ``FULL`` starts are unconditioned (the chain never dies); finite starts
    are conditioned on survival past ``n``.  ``ci`` is the half-sum of
    per-pattern normal half-widths, a conservative bound on the sampling
    error of the distance.

    With ``shallow="drop"`` trials whose window cannot resolve the pattern
    are left out and counted in ``unresolved`` instead of raising
    :class:`DepthError`.  The surviving sample is then biased toward deep
    configurations, so this is a diagnostic only.
    """
    n_list = sorted(set(int(n) for n in n_list))
    if not n_list or n_list[0] < 0:
        raise ContractError("n_list must hold nonnegative levels")
    if oracle.encoding != f"cylinder:{r}":
        try:
            oracle = oracle.project(r)
        except EncodingMismatchError as exc:
            raise ContractError(str(exc)) from exc
    run = SimParams(params.p, max(n_list[-1], 1), params.window_width, params.seed)
    codes, _ = _run_patterns(run, init, n_list, r, trials, first_trial, shallow)
    rows = []
    for i, n in enumerate(n_list):
        alive = codes[:, i][codes[:, i] >= 0]
        unresolved = int((codes[:, i] == simulate.TOO_SHALLOW).sum())
        if alive.size == 0:
            rows.append(ConvergenceRow(n, math.nan, math.nan, 0, unresolved))
            continue
        uniq, cnt = np.unique(alive, return_counts=True)
        emp = _pattern_table(Counter(dict(zip(uniq.tolist(), cnt.tolist()))), r)
        ph = cnt / alive.size
        ci = 0.5 * z * float(np.sqrt(ph * (1 - ph) / alive.size).sum())
        rows.append(ConvergenceRow(n, tv_distance(emp, oracle), ci, int(alive.size), unresolved))
    return ConvergenceResult(rows, r, trials)
