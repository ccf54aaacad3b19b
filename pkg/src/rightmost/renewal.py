"""Renewal construction of the rightmost reaching site, and its tails.

For a start set ``A`` and a horizon ``n``:

* ``X_0`` is the rightmost site of ``A`` with an open path to level ``n``
  and ``Y_0 = 0``;
* ``Y_{i+1}`` is the highest level ``k <= n`` at which some open path
  started from a site of level ``Y_i`` right of ``X_i`` enters the cone
  ``|v - X_i| <= k - Y_i`` (or ``Y_i`` if there is none);
* ``X_{i+1}`` is the rightmost occupied site of level ``Y_{i+1}`` with an
  open path to level ``n``.

``I`` is the first index with ``Y_I = Y_{I+1}``; both sequences are
constant from there on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng, simulate
from .estimators import MIN_COUNT, DecayFit, InsufficientDataError, fit_log_linear, wilson_ci
from .lattice import ContractError, Environment, SimParams, WindowOverflowError, forward_reach
from .view import InitialCondition


@dataclass(frozen=True)
class Cone:
    """Forward light cone of the space-time point ``(x, m)``."""

    x: int
    m: int

    def __contains__(self, point) -> bool:
        y, k = point
        return k >= self.m and abs(y - self.x) <= k - self.m


class _NotReaching:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NOT_REACHING"

    def __bool__(self):
        return False


NOT_REACHING = _NotReaching()


@dataclass(frozen=True)
class RenewalTrace:
    """Pairs ``(X_i, Y_i)`` up to and including the first repeat."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if len(self.pairs) < 2 or self.pairs[-1] != self.pairs[-2]:
            raise ValueError("a finished trace ends with a repeated pair")

    @property
    def I(self) -> int:
        return len(self.pairs) - 2

    @property
    def Y_I(self) -> int:
        return self.pairs[-1][1]

    @property
    def X_0(self) -> int:
        return self.pairs[0][0]

    def pair(self, i: int) -> tuple[int, int]:
        return self.pairs[min(i, len(self.pairs) - 1)]


def compute_trace(env: Environment, A: InitialCondition, n: int):
    """Renewal trace of one environment, or ``NOT_REACHING``."""
    if not 1 <= n <= env.n_max:
        raise ContractError(f"horizon n={n} must lie in [1, {env.n_max}]")
    start = A.level_config(env.params, env.origin)
    history = forward_reach(env, start, 0, n)
    occ = np.array([c.occupancy for c in history])
    xs, ys, count = simulate.renewal_trace(
        occ, np.array(env.left[:n]), np.array(env.right[:n]), env.origin, n, n + 2,
    )
    if count == 0:
        return NOT_REACHING
    return RenewalTrace(tuple((int(x), int(y)) for x, y in zip(xs[:count], ys[:count])))


@dataclass(frozen=True)
class BetaEstimate:
    """Decay rates from cone entry (``cone_fit``) and from survival of ``{0}``
    (``survival_fit``); either fit is ``None`` when the counts cannot support it."""

    p: float
    trials: int
    cone_fit: DecayFit | None
    survival_fit: DecayFit | None
    cone_counts: np.ndarray = field(repr=False)
    survival_counts: np.ndarray = field(repr=False)

    @property
    def degenerate(self) -> bool:
        return self.cone_fit is None

    @property
    def beta(self) -> float:
        if self.cone_fit is None:
            raise InsufficientDataError("cone-entry counts too small for a decay fit")
        return self.cone_fit.rate

    @property
    def beta_se(self) -> float:
        return self.cone_fit.slope_se if self.cone_fit else math.nan

    @property
    def survival_rate(self) -> float:
        if self.survival_fit is None:
            raise InsufficientDataError("survival counts too small for a decay fit")
        return self.survival_fit.rate

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "trials": self.trials,
            "beta_hat": None if self.cone_fit is None else self.cone_fit.rate,
            "beta_se": None if self.cone_fit is None else self.cone_fit.slope_se,
            "cone_fit": None if self.cone_fit is None else self.cone_fit.to_dict(),
            "survival_rate": None if self.survival_fit is None else self.survival_fit.rate,
            "survival_fit": None if self.survival_fit is None else self.survival_fit.to_dict(),
        }


def survival_counts(params: SimParams, init: InitialCondition, trials: int,
                    first_trial: int = 0) -> np.ndarray:
    """``out[n]`` = number of trials alive at level ``n`` for ``n = 0..n_max``."""
    if not init.is_finite:
        raise ContractError("survival curves need a finite start")
    if trials < 1:
        raise ContractError("trials must be positive")
    start = init.level_config(params)
    keys = rng.trial_keys(rng.master_key(params.seed), first_trial, trials)
    _, death, overflow = simulate.simulate_patterns(
        keys, params.p, start.occupancy.copy(), start.origin, False,
        params.n_max, np.zeros(0, dtype=np.int64), 0,
    )
    if overflow.any():
        raise WindowOverflowError("trials left the window on the right")
    hist = np.bincount(np.minimum(death, params.n_max + 1), minlength=params.n_max + 2)
    # alive at n  <=>  death > n
    return trials - np.cumsum(hist)[: params.n_max + 1]


def cone_entry_counts(params: SimParams, trials: int, m_max: int, first_trial: int = 0) -> np.ndarray:
    """``out[m]`` = trials where a path from the right of the origin enters
    its cone at some level ``>= m``, for ``m = 0..m_max``.

    Levels are searched up to ``2 * m_max``; later entries are ignored.
    """
    keys = rng.trial_keys(rng.master_key(params.seed), first_trial, trials)
    top = simulate.simulate_cone_entry(keys, params.p, 2 * m_max)
    hist = np.bincount(top, minlength=2 * m_max + 1)
    ge = np.cumsum(hist[::-1])[::-1]
    out = ge[: m_max + 1].copy()
    out[0] = trials
    return out


def estimate_beta(params: SimParams, trials: int, m_max: int,
                  survival_range: tuple[int, int] | None = None,
                  min_count: int = MIN_COUNT, first_trial: int = 0) -> BetaEstimate:
    """Fit both exponential decay rates.

    The survival fit uses levels in ``survival_range`` (default ``1..n_max``)
    with ``P(T > n)`` from ``{0}``; the cone fit uses ``m = 1..m_max``.
    """
    if trials < 1 or m_max < 3:
        raise ContractError("need trials >= 1 and m_max >= 3")
    lo, hi = survival_range or (1, params.n_max)
    surv_params = SimParams(params.p, max(hi, 1), max(params.window_width, hi + 2), params.seed)
    surv = survival_counts(surv_params, InitialCondition.origin(), trials, first_trial)
    cone = cone_entry_counts(params, trials, m_max, first_trial)

    def fit(xs, counts):
        pts = [(x, c / trials, c) for x, c in zip(xs, counts)]
        try:
            return fit_log_linear(pts, min_count)
        except InsufficientDataError:
            return None

    ns = range(lo, hi + 1)
    return BetaEstimate(
        params.p, trials,
        fit(range(1, m_max + 1), cone[1:]),
        fit(ns, surv[lo: hi + 1]),
        cone, surv,
    )


@dataclass(frozen=True)
class TailReport:
    """Empirical tails of ``I`` and ``Y_I`` over trials that reach level ``n``."""

    n: int
    trials: int
    reaching: int
    m: np.ndarray
    count_I_ge_m: np.ndarray
    count_YI_ge_m2: np.ndarray
    beta: BetaEstimate | None = None

    @property
    def not_reaching(self) -> int:
        return self.trials - self.reaching

    @property
    def p_I_ge_m(self) -> np.ndarray:
        return self.count_I_ge_m / self.reaching

    @property
    def p_YI_ge_m2(self) -> np.ndarray:
        return self.count_YI_ge_m2 / self.reaching

    def tail_fit(self, min_count: int = MIN_COUNT) -> DecayFit:
        """Log-linear fit of ``P(I >= m)`` over ``m >= 1`` bins with enough counts."""
        pts = [(m, ph, c) for m, ph, c in zip(self.m, self.p_I_ge_m, self.count_I_ge_m) if m >= 1]
        return fit_log_linear(pts, min_count)

    def envelope(self) -> np.ndarray | None:
        """``P(I >= m) + (m + 1) exp(-beta m)`` with the cone-entry rate."""
        if self.beta is None or self.beta.cone_fit is None:
            return None
        b = self.beta.beta
        return self.p_I_ge_m + (self.m + 1) * np.exp(-b * self.m)

    def rows(self) -> list[dict]:
        return [
            {"m": int(m), "count_I_ge_m": int(ci), "p_I_ge_m": float(pi),
             "count_YI_ge_m2": int(cy), "p_YI_ge_m2": float(py)}
            for m, ci, pi, cy, py in zip(self.m, self.count_I_ge_m, self.p_I_ge_m,
                                         self.count_YI_ge_m2, self.p_YI_ge_m2)
        ]

    def summary(self) -> dict:
        lo, hi = wilson_ci(self.not_reaching, self.trials)
        out = {
            "n": self.n,
            "trials": self.trials,
            "reaching": self.reaching,
            "not_reaching": self.not_reaching,
            "not_reaching_rate": self.not_reaching / self.trials,
            "not_reaching_ci": [lo, hi],
            "beta": None if self.beta is None else self.beta.to_dict(),
        }
        try:
            out["tail_fit"] = self.tail_fit().to_dict()
        except InsufficientDataError:
            out["tail_fit"] = None
        return out


def tail_statistics(params: SimParams, A: InitialCondition, n: int, trials: int,
                    beta: BetaEstimate | None = None, m_max: int | None = None,
                    beta_trials: int | None = None, first_trial: int = 0) -> TailReport:
    """Run ``trials`` renewal traces to horizon ``n`` and tabulate the tails.

    Trials where no start site reaches level ``n`` are counted in
    ``not_reaching`` and excluded from the tails.  Without an explicit
    ``beta`` the cone-entry rate is estimated from ``beta_trials`` (default
    ``trials``) fresh trials.
    """
    if trials < 1 or n < 1:
        raise ContractError("need trials >= 1 and n >= 1")
    run = SimParams(params.p, n, params.window_width, params.seed)
    start = A.level_config(run)
    keys = rng.trial_keys(rng.master_key(params.seed), first_trial, trials)
    I, Y, _, status = simulate.simulate_renewal(
        keys, params.p, start.occupancy.copy(), start.origin, A.kind == "full", n, n + 2,
    )
    if (status == -1).any():
        raise WindowOverflowError("trials left the window on the right")
    if (status == -2).any():
        raise RuntimeError("renewal trace did not stabilize")
    ok = status == 1
    reaching = int(ok.sum())
    if reaching == 0:
        raise InsufficientDataError("no trial reaches the horizon")
    I, Y = I[ok], Y[ok]
    if m_max is None:
        m_max = max(int(I.max()), math.isqrt(int(Y.max()))) + 1
    m = np.arange(m_max + 1)
    count_I = np.array([(I >= k).sum() for k in m])
    count_Y = np.array([(Y >= k * k).sum() for k in m])
    if beta is None:
        bt = beta_trials or trials
        try:
            beta = estimate_beta(params, bt, max(m_max, 3) * 2, first_trial=first_trial + trials)
        except ContractError:
            beta = None
    return TailReport(n, trials, reaching, m, count_I, count_Y, beta)
