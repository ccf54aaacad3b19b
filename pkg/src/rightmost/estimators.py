"""Counting, intervals and log-linear decay fits."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy import stats

from .tables import DistributionTable

MIN_COUNT = 30


class InsufficientDataError(ValueError):
    """Too few usable observations for the requested estimate."""


def merge_counters(counters: Iterable[Mapping]) -> Counter:
    out = Counter()
    for c in counters:
        out.update(c)
    return out


def to_distribution(counts: Mapping, encoding: str = "raw") -> DistributionTable:
    total = sum(counts.values())
    if total <= 0:
        raise InsufficientDataError("cannot normalize an empty counter")
    keys = sorted(counts)
    probs = np.array([counts[k] for k in keys], dtype=float) / total
    return DistributionTable(tuple(keys), probs, encoding)


def wilson_ci(count: int, total: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if total <= 0 or not 0 <= count <= total:
        raise ValueError(f"need 0 <= count <= total and total > 0, got {count}/{total}")
    phat = count / total
    z2 = z * z
    denom = 1.0 + z2 / total
    centre = (phat + z2 / (2 * total)) / denom
    half = z * math.sqrt(phat * (1 - phat) / total + z2 / (4 * total * total)) / denom
    low = 0.0 if count == 0 else max(0.0, centre - half)
    high = 1.0 if count == total else min(1.0, centre + half)
    return low, high


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r2: float
    slope_se: float
    x_range: tuple[float, float]
    n_points: int

    @property
    def rate(self) -> float:
        """Decay rate, i.e. minus the slope."""
        return -self.slope

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "slope_se": self.slope_se,
            "x_range": list(self.x_range),
            "n_points": self.n_points,
        }


def fit_log_linear(points, min_count: int = MIN_COUNT) -> DecayFit:
    """Least-squares line through ``(x, log p_hat)``.

    ``points`` holds ``(x, p_hat, count)`` triples; only those with
    ``count >= min_count`` and ``p_hat > 0`` enter the fit.
    """
    eligible = [(float(x), float(ph)) for x, ph, c in points if c >= min_count and ph > 0]
    if len(eligible) < 3:
        raise InsufficientDataError(
            f"need at least 3 points with count >= {min_count}, got {len(eligible)}"
        )
    x, ph = np.array(eligible).T
    y = np.log(ph)
    if np.ptp(y) == 0.0:
        # linregress reports nan correlation on a flat response
        return DecayFit(0.0, float(y[0]), 1.0, 0.0, (x.min(), x.max()), x.size)
    res = stats.linregress(x, y)
    return DecayFit(
        float(res.slope), float(res.intercept), float(res.rvalue ** 2),
        float(res.stderr), (float(x.min()), float(x.max())), int(x.size),
    )
