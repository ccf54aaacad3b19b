"""The process seen from its rightmost point.

An :class:`AnchoredConfig` is a level configuration translated so that its
rightmost site sits at 0.  Configurations coming from a ``FULL_LEFT``
window are truncated-infinite: offsets are exact down to ``-2 * depth`` and
everything further left is taken as occupied, so cylinder projections past
that depth are refused rather than guessed.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .lattice import (
    Boundary,
    ContractError,
    Environment,
    LevelConfig,
    SimParams,
    forward_reach,
)


class DepthError(ValueError):
    """A cylinder projection reaches past the reliable depth of a configuration."""


@dataclass(frozen=True)
class AnchoredConfig:
    offsets: tuple[int, ...]
    depth: int | None = None

    def __post_init__(self):
        offs = tuple(int(o) for o in self.offsets)
        object.__setattr__(self, "offsets", offs)
        if not offs:
            if self.depth is not None:
                raise ContractError("EMPTY carries no depth")
            return
        if offs[0] != 0:
            raise ContractError(f"anchored offsets must start at 0, got {offs}")
        if any(o % 2 for o in offs) or any(b >= a for a, b in zip(offs, offs[1:])):
            raise ContractError(f"offsets must be strictly decreasing even integers, got {offs}")
        if self.depth is not None and offs[-1] < -2 * self.depth:
            raise ContractError("offsets extend past the declared depth")

    @property
    def is_empty(self) -> bool:
        return not self.offsets

    @property
    def truncated(self) -> bool:
        return self.depth is not None

    def to_json(self):
        return None if self.is_empty else list(self.offsets)

    @classmethod
    def from_json(cls, value) -> "AnchoredConfig":
        if value is None:
            return EMPTY
        return cls(tuple(sorted(value, reverse=True)))

    def __repr__(self):
        if self.is_empty:
            return "EMPTY"
        tail = f", fringe below {-2 * self.depth}" if self.truncated else ""
        return f"AnchoredConfig({list(self.offsets)}{tail})"


EMPTY = AnchoredConfig(())


@dataclass(frozen=True)
class CylinderPattern:
    """Occupancy of coordinates ``-2, -4, ..., -2r``; ``bits[0]`` is coordinate -2."""

    r: int
    bits: tuple[int, ...]

    def __post_init__(self):
        if self.r < 1 or len(self.bits) != self.r:
            raise ContractError(f"pattern of radius {self.r} needs exactly {self.r} bits")
        if any(b not in (0, 1) for b in self.bits):
            raise ContractError("pattern bits must be 0 or 1")

    def __str__(self):
        return "".join(map(str, self.bits))

    @property
    def code(self) -> int:
        return sum(b << k for k, b in enumerate(self.bits))

    @classmethod
    def from_code(cls, r: int, code: int) -> "CylinderPattern":
        return cls(r, tuple((code >> k) & 1 for k in range(r)))

    @classmethod
    def from_string(cls, s: str) -> "CylinderPattern":
        return cls(len(s), tuple(int(c) for c in s))


def pattern_key(code: int, r: int) -> str:
    """Bit string of a pattern code, coordinate -2 first."""
    return "".join("1" if (code >> k) & 1 else "0" for k in range(r))


def anchor(config: LevelConfig) -> AnchoredConfig:
    sites = config.sites()
    if sites.size == 0:
        if config.boundary is Boundary.FULL_LEFT:
            # the off-window fringe is occupied; its first site is the rightmost
            return AnchoredConfig((0,), 0)
        return EMPTY
    top = int(sites[-1])
    offsets = tuple(int(x) - top for x in sites[::-1])
    depth = (top - config.origin) // 2 if config.boundary is Boundary.FULL_LEFT else None
    return AnchoredConfig(offsets, depth)


def project(cfg: AnchoredConfig, r: int) -> CylinderPattern:
    if cfg.is_empty:
        raise ContractError("EMPTY has no cylinder projection")
    if r < 1:
        raise ContractError(f"radius must be positive, got {r}")
    if cfg.truncated and r > cfg.depth:
        raise DepthError(f"radius {r} exceeds the reliable depth {cfg.depth}")
    occupied = set(cfg.offsets)
    return CylinderPattern(r, tuple(int(-2 * k in occupied) for k in range(1, r + 1)))


@dataclass(frozen=True)
class InitialCondition:
    kind: str
    offsets: tuple[int, ...] = (0,)

    def __post_init__(self):
        if self.kind not in ("origin", "finite", "full"):
            raise ContractError(f"unknown initial condition kind {self.kind!r}")
        offs = tuple(sorted({int(o) for o in self.offsets}, reverse=True))
        if self.kind == "origin" and offs != (0,):
            raise ContractError("the origin start is {0}")
        if not offs or offs[0] != 0 or any(o % 2 for o in offs):
            raise ContractError("a finite start must be even nonpositive sites containing 0")
        object.__setattr__(self, "offsets", offs)

    @classmethod
    def origin(cls):
        return cls("origin")

    @classmethod
    def finite(cls, offsets):
        return cls("finite", tuple(offsets))

    @classmethod
    def full(cls):
        return cls("full")

    @classmethod
    def parse(cls, text: str) -> "InitialCondition":
        """Parse ``origin``, ``full`` or ``finite:0,-2,-6``."""
        text = text.strip().lower()
        if text in ("origin", "full"):
            return cls(text)
        if text.startswith("finite:"):
            try:
                offs = [int(t) for t in text[len("finite:"):].split(",") if t.strip()]
            except ValueError as exc:
                raise ContractError(f"bad offsets in {text!r}") from exc
            return cls.finite(offs)
        raise ContractError(f"cannot parse initial condition {text!r}")

    def __str__(self):
        if self.kind == "finite":
            return "finite:" + ",".join(map(str, self.offsets))
        return self.kind

    @property
    def is_finite(self) -> bool:
        return self.kind != "full"

    @property
    def boundary(self) -> Boundary:
        return Boundary.FULL_LEFT if self.kind == "full" else Boundary.FREE

    def level_config(self, params: SimParams, origin: int | None = None) -> LevelConfig:
        """Level-0 configuration of this start inside the window of ``params``.

        Finite starts must leave room for the whole forward cone, so nothing
        is silently lost at the left edge.
        """
        width = params.window_width
        origin = params.default_origin if origin is None else origin
        if self.kind == "full":
            sites = range(origin, 1, 2)
        else:
            sites = self.offsets
            left_room = (sites[-1] - origin) // 2
            need = (params.n_max + 1) // 2
            if left_room < need:
                raise ContractError(
                    f"window too narrow: start reaches {sites[-1]} but {need} sites of left "
                    f"room are needed for {params.n_max} levels (have {left_room})"
                )
        if (0 - origin) // 2 + params.n_max // 2 > width - 1:
            raise ContractError("window leaves no room on the right for the forward cone")
        return LevelConfig.from_sites(0, origin, width, sites, self.boundary)


@dataclass(frozen=True)
class SurvivalRecord:
    """Absorption level ``T``; ``None`` means alive through ``n_max``."""

    T: int | None
    n_max: int

    def survived(self, n: int) -> bool:
        return self.T is None or self.T > n

    @property
    def T_or_inf(self) -> float:
        return math.inf if self.T is None else self.T


@dataclass(frozen=True)
class ZetaRun:
    states: list[AnchoredConfig]
    record: SurvivalRecord


def run_zeta_chain(env: Environment, init: InitialCondition) -> ZetaRun:
    """Anchored chain of one trial for levels ``0..n_max``."""
    start = init.level_config(env.params, env.origin)
    states = [anchor(c) for c in forward_reach(env, start, 0, env.n_max)]
    T = next((n for n, s in enumerate(states) if s.is_empty), None)
    return ZetaRun(states, SurvivalRecord(T, env.n_max))


def dumps_states(states) -> str:
    return json.dumps([s.to_json() for s in states])
