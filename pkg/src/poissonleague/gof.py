"""Goodness-of-fit checks for the Poisson-process view of goal scoring.

Goal counts per match are binned as 0, 1, 2, 3, 4+ and compared with a
Poisson law by Pearson's chi-square. Inter-goal gaps and normalized goal
minutes are compared with exponential and uniform laws by one-sample
Kolmogorov-Smirnov tests.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .dist import PoissonLike, _lam, chi_square_sf, kolmogorov_sf, poisson_pmf, poisson_tail

BIN_LABELS = ("0", "1", "2", "3", "4+")
TOP_BIN = len(BIN_LABELS) - 1


@dataclass(frozen=True)
class GoalBinning:
    observed: tuple[int, ...]
    probs: tuple[float, ...]
    expected: tuple[float, ...]
    bins: tuple[str, ...] = BIN_LABELS

    @property
    def n(self) -> int:
        return sum(self.observed)


@dataclass(frozen=True)
class GofResult:
    statistic: float
    df_or_n: int
    p_value: float


def bin_goals(goals: Iterable[int]) -> tuple[int, ...]:
    counts = [0] * len(BIN_LABELS)
    n = 0
    for g in goals:
        if g < 0:
            raise ValueError(f"negative goal count {g}")
        counts[min(int(g), TOP_BIN)] += 1
        n += 1
    if n == 0:
        raise ValueError("no matches to bin")
    return tuple(counts)


def bin_probabilities(lam: PoissonLike, decimals: int | None = None) -> tuple[float, ...]:
    """P(0), .., P(3) and P(4+) under Poisson(lam).

    With ``decimals`` the first four are rounded and the top bin takes the
    remainder, as when working from a printed probability table.
    """
    head = [poisson_pmf(k, lam) for k in range(TOP_BIN)]
    if decimals is None:
        return (*head, poisson_tail(TOP_BIN, lam))
    head = [round(p, decimals) for p in head]
    return (*head, round(1.0 - math.fsum(head), decimals))


def expected_bins(lam: PoissonLike, n: int, decimals: int | None = None) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Bin probabilities and expected counts ``n * p`` (not rounded)."""
    _lam(lam)
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    probs = bin_probabilities(lam, decimals)
    return probs, tuple(n * p for p in probs)


def poisson_binning(goals: Sequence[int], lam: PoissonLike | None = None, decimals: int | None = None) -> GoalBinning:
    """Observed bins for ``goals`` against Poisson(lam); lam defaults to the sample mean."""
    observed = bin_goals(goals)
    if lam is None:
        lam = float(np.mean(goals))
    probs, expected = expected_bins(lam, sum(observed), decimals)
    return GoalBinning(observed, probs, expected)


def chi_square_statistic(observed: Sequence[float], expected: Sequence[float]) -> float:
    if len(observed) != len(expected):
        raise ValueError("observed and expected must align")
    total = 0.0
    for i, (o, e) in enumerate(zip(observed, expected)):
        if e <= 0:
            raise ValueError(f"expected count in bin {i} is {e}; merge it with a neighbour")
        total += (o - e) ** 2 / e
    return total


def chi_square_gof(binning: GoalBinning) -> GofResult:
    """Pearson test with bins - 1 degrees of freedom (no reduction for the fitted rate)."""
    stat = chi_square_statistic(binning.observed, binning.expected)
    df = len(binning.observed) - 1
    return GofResult(stat, df, chi_square_sf(stat, df))


def ks_statistic(sample: Sequence[float], model_cdf: Callable[[float], float]) -> float:
    xs = sorted(sample)
    n = len(xs)
    if n == 0:
        raise ValueError("KS test needs a non-empty sample")
    d = 0.0
    for i, x in enumerate(xs, start=1):
        f = model_cdf(x)
        d = max(d, i / n - f, f - (i - 1) / n)
    return d


def ks_test(sample: Sequence[float], model_cdf: Callable[[float], float], stephens: bool = True) -> GofResult:
    d = ks_statistic(sample, model_cdf)
    n = len(sample)
    return GofResult(d, n, kolmogorov_sf(min(d, 1.0), n, stephens=stephens))


def empirical_cdf(sample: Sequence[float]) -> Callable[[float], float]:
    """Right-continuous step function F_n(x) = #{x_i <= x} / n."""
    xs = sorted(sample)
    n = len(xs)
    if n == 0:
        raise ValueError("empirical CDF needs a non-empty sample")
    return lambda x: bisect_right(xs, x) / n


def cdf_curves(sample: Sequence[float], model_cdf: Callable[[float], float]) -> list[tuple[float, float, float]]:
    """(x, empirical, model) at each distinct sample value, ascending."""
    ecdf = empirical_cdf(sample)
    return [(x, ecdf(x), model_cdf(x)) for x in sorted(set(sample))]


def describe(values: Sequence[float]) -> dict[str, float]:
    """min, quartiles (linear interpolation), max, mean, sample sd and n."""
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        raise ValueError("no values to describe")
    q1, med, q3 = np.quantile(a, [0.25, 0.5, 0.75])
    return {
        "min": float(a.min()),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "max": float(a.max()),
        "mean": float(a.mean()),
        "sd": float(a.std(ddof=1)) if a.size > 1 else float("nan"),
        "n": int(a.size),
    }
