"""Oriented bond percolation on a finite window of the space-time lattice.

Sites at level ``k`` have the parity of ``k``.  A window tracks
``window_width`` sites per level; index ``j`` at level ``k`` is the site
``origin + (k % 2) + 2 * j`` where ``origin`` is the (even) leftmost site at
level 0.  The window therefore alternates by one lattice unit and never
drifts:

* even ``k``: the bond to ``x + 1`` lands on index ``j``, the bond to
  ``x - 1`` on ``j - 1`` (lost at ``j = 0``);
* odd ``k``: the bond to ``x - 1`` lands on ``j``, the bond to ``x + 1`` on
  ``j + 1`` (a window overflow at ``j = W - 1``).

With the ``FULL_LEFT`` boundary, the off-window neighbour ``origin - 1`` of
an odd level is taken as occupied and its bond towards index 0 is drawn
from the same environment as any other bond.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import rng


class ContractError(ValueError):
    """Inputs violate an operation's preconditions."""


class WindowOverflowError(RuntimeError):
    """An occupied site left the tracked window on the right."""


class Boundary(enum.Enum):
    FREE = "free"
    FULL_LEFT = "full-left"


@dataclass(frozen=True)
class SimParams:
    """Parameters shared by every trial of a run.

    ``window_width`` counts sites, not lattice units.
    """

    p: float
    n_max: int
    window_width: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ContractError(f"p must lie in [0, 1], got {self.p}")
        if self.n_max < 1:
            raise ContractError(f"n_max must be >= 1, got {self.n_max}")
        if self.window_width < 2:
            raise ContractError(f"window_width must be >= 2, got {self.window_width}")
        if self.seed < 0:
            raise ContractError(f"seed must be nonnegative, got {self.seed}")
        if self.anchor_index < 0:
            raise ContractError(
                f"window_width={self.window_width} leaves no room for n_max={self.n_max} "
                f"levels of rightward growth; need at least {self.n_max // 2 + 1}"
            )

    @property
    def anchor_index(self) -> int:
        """Window index of site 0 at level 0 in the default placement."""
        return self.window_width - 1 - self.n_max // 2

    @property
    def default_origin(self) -> int:
        return -2 * self.anchor_index

    def with_p(self, p: float) -> "SimParams":
        return SimParams(p, self.n_max, self.window_width, self.seed)


def level_origin(origin: int, level: int) -> int:
    """Leftmost tracked site at ``level`` for a window whose level-0 origin is ``origin``."""
    return origin + (level & 1)


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LevelConfig:
    level: int
    origin: int
    occupancy: np.ndarray
    boundary: Boundary = Boundary.FREE

    def __post_init__(self):
        if self.level < 0:
            raise ContractError(f"level must be nonnegative, got {self.level}")
        if (self.origin + self.level) % 2:
            raise ContractError(
                f"origin {self.origin} has the wrong parity for level {self.level}"
            )
        occ = _frozen(self.occupancy, bool)
        if occ.ndim != 1:
            raise ContractError("occupancy must be one-dimensional")
        object.__setattr__(self, "occupancy", occ)

    @classmethod
    def from_sites(cls, level, origin, width, sites, boundary=Boundary.FREE):
        occ = np.zeros(width, dtype=bool)
        for x in sites:
            j, rem = divmod(x - origin, 2)
            if rem or not 0 <= j < width:
                raise ContractError(f"site {x} is not a tracked site of this window")
            occ[j] = True
        return cls(level, origin, occ, boundary)

    @property
    def width(self) -> int:
        return self.occupancy.size

    def sites(self) -> np.ndarray:
        return self.origin + 2 * np.flatnonzero(self.occupancy)

    def is_empty(self) -> bool:
        return not self.occupancy.any()

    def rightmost(self) -> int | None:
        idx = np.flatnonzero(self.occupancy)
        return None if idx.size == 0 else int(self.origin + 2 * idx[-1])

    def __eq__(self, other):
        if not isinstance(other, LevelConfig):
            return NotImplemented
        return (
            self.level == other.level
            and self.origin == other.origin
            and self.boundary == other.boundary
            and np.array_equal(self.occupancy, other.occupancy)
        )

    def __repr__(self):
        return f"LevelConfig(level={self.level}, sites={self.sites().tolist()}, {self.boundary.value})"


@dataclass(frozen=True, eq=False)
class BondLayer:
    """Bonds from ``level`` to ``level + 1`` for the tracked sites of ``level``."""

    level: int
    origin: int
    left_open: np.ndarray
    right_open: np.ndarray
    fringe_open: bool = False

    def __post_init__(self):
        left = _frozen(self.left_open, bool)
        right = _frozen(self.right_open, bool)
        if left.shape != right.shape or left.ndim != 1:
            raise ContractError("left_open and right_open must be equal-length vectors")
        object.__setattr__(self, "left_open", left)
        object.__setattr__(self, "right_open", right)


@dataclass(frozen=True, eq=False)
class LayerUniforms:
    """Per-bond uniforms of one level; thresholding at ``p`` gives a :class:`BondLayer`."""

    level: int
    origin: int
    left: np.ndarray
    right: np.ndarray
    fringe: float

    def threshold(self, p: float) -> BondLayer:
        return BondLayer(self.level, self.origin, self.left < p, self.right < p, bool(self.fringe < p))


@njit(cache=True)
def _fill_uniforms(key, n_max, width, origin):
    left = np.empty((n_max, width))
    right = np.empty((n_max, width))
    fringe = np.empty(n_max)
    for k in range(n_max):
        o = origin + (k & 1)
        for j in range(width):
            x = o + 2 * j
            left[k, j] = rng.bond_uniform(key, k, x, rng.LEFT)
            right[k, j] = rng.bond_uniform(key, k, x, rng.RIGHT)
        # right bond of the off-window site just left of index 0
        fringe[k] = rng.bond_uniform(key, k, o - 2, rng.RIGHT)
    return left, right, fringe


@dataclass(frozen=True, eq=False)
class UniformField:
    """All bond uniforms of one trial inside a window."""

    params: SimParams
    trial_index: int
    origin: int
    left: np.ndarray
    right: np.ndarray
    fringe: np.ndarray

    def layer(self, level: int) -> LayerUniforms:
        return LayerUniforms(
            level, level_origin(self.origin, level),
            self.left[level], self.right[level], float(self.fringe[level]),
        )

    def threshold(self, p: float) -> "Environment":
        return Environment(
            self.params.with_p(p), self.trial_index, self.origin,
            self.left < p, self.right < p, self.fringe < p,
        )


def sample_uniforms(params: SimParams, trial_index: int, origin: int | None = None) -> UniformField:
    if trial_index < 0:
        raise ContractError(f"trial_index must be nonnegative, got {trial_index}")
    if origin is None:
        origin = params.default_origin
    if origin % 2:
        raise ContractError("level-0 origin must be even")
    key = np.uint64(rng.trial_key(rng.master_key(params.seed), trial_index))
    left, right, fringe = _fill_uniforms(key, params.n_max, params.window_width, origin)
    for a in (left, right, fringe):
        a.setflags(write=False)
    return UniformField(params, trial_index, origin, left, right, fringe)


@dataclass(frozen=True, eq=False)
class Environment:
    """Materialized bonds of one trial: ``left[k, j]`` / ``right[k, j]`` is the
    bond from index ``j`` of level ``k`` to ``x - 1`` / ``x + 1``."""

    params: SimParams
    trial_index: int
    origin: int
    left: np.ndarray
    right: np.ndarray
    fringe: np.ndarray

    def __post_init__(self):
        shape = (self.params.n_max, self.params.window_width)
        for name in ("left", "right"):
            a = _frozen(getattr(self, name), bool)
            if a.shape != shape:
                raise ContractError(f"{name} must have shape {shape}, got {a.shape}")
            object.__setattr__(self, name, a)
        object.__setattr__(self, "fringe", _frozen(self.fringe, bool))

    @classmethod
    def constant(cls, params: SimParams, is_open: bool, origin: int | None = None) -> "Environment":
        """All bonds open (or all closed); handy for degenerate checks."""
        shape = (params.n_max, params.window_width)
        origin = params.default_origin if origin is None else origin
        fill = np.full(shape, is_open)
        return cls(params, 0, origin, fill, fill, np.full(params.n_max, is_open))

    @property
    def n_max(self) -> int:
        return self.params.n_max

    @property
    def width(self) -> int:
        return self.params.window_width

    def layer(self, level: int) -> BondLayer:
        return BondLayer(
            level, level_origin(self.origin, level),
            self.left[level], self.right[level], bool(self.fringe[level]),
        )

    @property
    def layers(self) -> list[BondLayer]:
        return [self.layer(k) for k in range(self.n_max)]

    def level_config(self, level: int, sites, boundary=Boundary.FREE) -> LevelConfig:
        return LevelConfig.from_sites(level, level_origin(self.origin, level), self.width, sites, boundary)


def sample_environment(params: SimParams, trial_index: int, origin: int | None = None) -> Environment:
    """Bond environment of trial ``trial_index``; deterministic in ``(seed, trial_index)``."""
    return sample_uniforms(params, trial_index, origin).threshold(params.p)


def step_forward(config: LevelConfig, layer: BondLayer) -> LevelConfig:
    if config.level != layer.level:
        raise ContractError(f"config is at level {config.level}, layer at {layer.level}")
    if config.origin != layer.origin or config.width != layer.left_open.size:
        raise ContractError("config and layer describe different windows")
    occ = config.occupancy
    new = np.zeros_like(occ)
    if config.level % 2 == 0:
        new |= occ & layer.right_open
        new[:-1] |= occ[1:] & layer.left_open[1:]
        next_origin = config.origin + 1
    else:
        if occ[-1] and layer.right_open[-1]:
            raise WindowOverflowError(
                f"site {config.origin + 2 * (config.width - 1)} at level {config.level} "
                "reaches past the right edge of the window"
            )
        new |= occ & layer.left_open
        new[1:] |= occ[:-1] & layer.right_open[:-1]
        if config.boundary is Boundary.FULL_LEFT and layer.fringe_open:
            new[0] = True
        next_origin = config.origin - 1
    return LevelConfig(config.level + 1, next_origin, new, config.boundary)


def forward_reach(env: Environment, initial: LevelConfig, from_level: int, to_level: int) -> list[LevelConfig]:
    """Configurations at levels ``from_level..to_level`` reachable from ``initial``."""
    if not 0 <= from_level <= to_level <= env.n_max:
        raise ContractError(f"levels must satisfy 0 <= {from_level} <= {to_level} <= {env.n_max}")
    if initial.level != from_level:
        raise ContractError(f"initial config is at level {initial.level}, expected {from_level}")
    out = [initial]
    for k in range(from_level, to_level):
        out.append(step_forward(out[-1], env.layer(k)))
    return out


def backward_reach(env: Environment, target_level: int) -> list[LevelConfig]:
    """For each level ``k <= target_level``, the tracked sites with an open path
    to level ``target_level`` that stays inside the window."""
    if not 0 <= target_level <= env.n_max:
        raise ContractError(f"target_level must lie in [0, {env.n_max}]")
    alive = np.ones(env.width, dtype=bool)
    out = [alive]
    for k in range(target_level - 1, -1, -1):
        L, R = env.left[k], env.right[k]
        prev = np.zeros_like(alive)
        if k % 2 == 0:
            prev |= R & alive
            prev[1:] |= L[1:] & alive[:-1]
        else:
            prev |= L & alive
            prev[:-1] |= R[:-1] & alive[1:]
        alive = prev
        out.append(alive)
    out.reverse()
    return [LevelConfig(k, level_origin(env.origin, k), a) for k, a in enumerate(out)]


def coupled_step(config, layer_uniforms: LayerUniforms, p_list) -> list[LevelConfig]:
    """Advance one level for every ``p`` in ``p_list`` using shared uniforms.

    ``config`` is either one configuration (used for every ``p``) or a
    sequence with one configuration per ``p``.  A bond is open at ``p`` iff
    its uniform is below ``p``, so occupancy is nested in ``p``.
    """
    p_list = list(p_list)
    if any(b <= a for a, b in zip(p_list, p_list[1:])):
        raise ContractError("p_list must be strictly increasing")
    configs = [config] * len(p_list) if isinstance(config, LevelConfig) else list(config)
    if len(configs) != len(p_list):
        raise ContractError("need one configuration per p")
    return [step_forward(c, layer_uniforms.threshold(p)) for c, p in zip(configs, p_list)]


def coupling_check(params: SimParams, p_list, trials: int, start: LevelConfig,
                   first_trial: int = 0) -> np.ndarray:
    """Per-trial flag: occupancy is nested in ``p`` at every level up to
    ``params.n_max`` when all values of ``p_list`` share the trial's uniforms."""
    from . import simulate

    p_arr = np.asarray(p_list, dtype=float)
    if p_arr.size < 2 or (np.diff(p_arr) <= 0).any():
        raise ContractError("p_list must hold at least two strictly increasing values")
    if trials < 1:
        raise ContractError("trials must be positive")
    keys = rng.trial_keys(rng.master_key(params.seed), first_trial, trials)
    nested, overflow = simulate.simulate_coupled(
        keys, p_arr, start.occupancy.copy(), start.origin,
        start.boundary is Boundary.FULL_LEFT, params.n_max,
    )
    if overflow.any():
        raise WindowOverflowError(f"{int(overflow.sum())} trials left the window on the right")
    return nested
