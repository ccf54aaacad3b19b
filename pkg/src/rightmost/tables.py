from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUM_TOL = 1e-12


class EncodingMismatchError(ValueError):
    """Two tables are keyed by different encodings."""


@dataclass(frozen=True, eq=False)
class DistributionTable:
    """Probability table over string keys.

    ``encoding`` names the key space: ``"cylinder:r"`` keys are bit strings of
    coordinates ``-2..-2r``; ``"anchored:w"`` keys are bit strings of
    coordinates ``-2..-2(w-1)`` (the empty string is the state ``{0}``).
    """

    keys: tuple
    probs: np.ndarray
    encoding: str = "raw"

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "keys", tuple(self.keys))
        if probs.shape != (len(self.keys),):
            raise ValueError("one probability per key")
        if len(set(self.keys)) != len(self.keys):
            raise ValueError("duplicate keys")
        if (probs < 0).any():
            raise ValueError("negative probability")
        if abs(probs.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")

    def as_dict(self) -> dict:
        return dict(zip(self.keys, self.probs.tolist()))

    def get(self, key, default=0.0) -> float:
        try:
            return float(self.probs[self.keys.index(key)])
        except ValueError:
            return default

    def __len__(self):
        return len(self.keys)

    @classmethod
    def point_mass(cls, key, encoding="raw") -> "DistributionTable":
        return cls((key,), np.ones(1), encoding)

    def project(self, r: int) -> "DistributionTable":
        """Marginal law of the first ``r`` coordinates of a bit-string keyed table."""
        kind, _, size = self.encoding.partition(":")
        depth = int(size) - 1 if kind == "anchored" else int(size) if kind == "cylinder" else None
        if depth is None or r > depth:
            raise EncodingMismatchError(f"cannot project {self.encoding} tables to radius {r}")
        out: dict[str, float] = {}
        for k, pr in zip(self.keys, self.probs):
            short = k[:r]
            out[short] = out.get(short, 0.0) + pr
        keys = sorted(out)
        probs = np.array([out[k] for k in keys])
        return DistributionTable(tuple(keys), probs / probs.sum(), f"cylinder:{r}")


def tv_distance(a: DistributionTable, b: DistributionTable) -> float:
    """Total variation distance ``sum |a - b| / 2`` over the union of supports."""
    if a.encoding != b.encoding:
        raise EncodingMismatchError(f"{a.encoding} vs {b.encoding}")
    da, db = a.as_dict(), b.as_dict()
    total = sum(abs(da.get(k, 0.0) - db.get(k, 0.0)) for k in set(da) | set(db))
    return min(1.0, 0.5 * total)
