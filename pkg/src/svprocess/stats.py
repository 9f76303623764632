"""Estimators, confidence intervals and distributional tests shared by the
Monte Carlo modules.

Everything works on plain sample buffers.  Guard bands are 3 standard errors
throughout; there is no multiple-testing correction (suite-level flake budget
is 5% and all seeds are fixed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import kolmogorov

__all__ = [
    "EstimateCI",
    "mean_ci",
    "merge_ci",
    "ks_test",
    "BandPosition",
    "sign_test_with_guard",
]


@dataclass(frozen=True)
class EstimateCI:
    """Monte Carlo point estimate with its standard error and seed provenance."""

    mean: float
    se: float
    n: int
    seed: int = 0
    stream_lo: int = 0
    stream_hi: int = 0
    # running sums kept so that two halves of a stream merge exactly
    _sum: float = 0.0
    _sumsq: float = 0.0

    def half_width(self, k: float = 3.0) -> float:
        return k * self.se

    def contains(self, value: float, k: float = 3.0) -> bool:
        return abs(self.mean - value) <= self.half_width(k)

    def __str__(self):
        return f"{self.mean:.6g} +- {self.se:.2g} (n={self.n})"


def mean_ci(samples, seed: int = 0, stream_lo: int = 0, stream_hi: int = 0) -> EstimateCI:
    """Sample mean and standard error of i.i.d. replicas (n >= 2)."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two samples for a standard error")
    s = float(np.sum(x))
    ss = float(np.sum(x * x))
    mean = s / n
    var = max(0.0, (ss - n * mean * mean) / (n - 1))
    return EstimateCI(
        mean=mean,
        se=math.sqrt(var / n),
        n=n,
        seed=seed,
        stream_lo=stream_lo,
        stream_hi=stream_hi,
        _sum=s,
        _sumsq=ss,
    )


def merge_ci(a: EstimateCI, b: EstimateCI) -> EstimateCI:
    """Deterministic reduction of two disjoint-stream estimates into one.

    Combines the running sums, so merging the two halves of a stream gives the
    same estimate as a single pass over the concatenated buffer.
    """
    n = a.n + b.n
    s = a._sum + b._sum
    ss = a._sumsq + b._sumsq
    mean = s / n
    var = max(0.0, (ss - n * mean * mean) / (n - 1))
    return EstimateCI(
        mean=mean,
        se=math.sqrt(var / n),
        n=n,
        seed=a.seed,
        stream_lo=min(a.stream_lo, b.stream_lo),
        stream_hi=max(a.stream_hi, b.stream_hi),
        _sum=s,
        _sumsq=ss,
    )


def ks_test(samples, cdf) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov statistic and asymptotic p-value.

    cdf must be vectorized and monotone on the sample range; a non-monotone
    probe is rejected.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 2:
        raise ValueError("need at least two samples")
    f = np.asarray(cdf(x), dtype=float)
    if np.any(np.diff(f) < -1e-12):
        raise ValueError("cdf is not monotone on the sample range")
    grid = np.arange(1, n + 1, dtype=float) / n
    d_plus = float(np.max(grid - f))
    d_minus = float(np.max(f - (grid - 1.0 / n)))
    d = max(d_plus, d_minus)
    p = float(kolmogorov(math.sqrt(n) * d))
    return d, min(max(p, 0.0), 1.0)


class BandPosition(Enum):
    ABOVE = "above"
    BELOW = "below"
    CONTAINS = "contains"


def sign_test_with_guard(samples, null_value: float) -> BandPosition:
    """Classify the sample mean against null_value with a 3-SE guard band."""
    x = np.asarray(samples, dtype=float)
    if x.size < 30:
        raise ValueError("need at least 30 samples for the guard-band test")
    est = mean_ci(x)
    if est.mean - 3.0 * est.se > null_value:
        return BandPosition.ABOVE
    if est.mean + 3.0 * est.se < null_value:
        return BandPosition.BELOW
    return BandPosition.CONTAINS
