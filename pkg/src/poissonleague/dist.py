"""Poisson, exponential and uniform distributions plus the tail functions
used for goodness-of-fit p-values.

Everything is plain 64-bit float arithmetic. The chi-square tail goes
through the regularized incomplete gamma function and the KS tail through
the asymptotic Kolmogorov series, both implemented here rather than pulled
from scipy so the test suite can use scipy as an independent oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


class DomainError(ValueError):
    """Argument outside the domain of a distribution function."""


@dataclass(frozen=True)
class PoissonParam:
    lam: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise DomainError(f"Poisson rate must be positive and finite, got {self.lam!r}")

    @property
    def mean(self) -> float:
        return self.lam

    @property
    def variance(self) -> float:
        return self.lam


@dataclass(frozen=True)
class ExponentialParam:
    """Exponential waiting time with ``rate`` events per unit time.

    ``beta`` is the mean waiting time, ``1 / rate``.
    """

    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise DomainError(f"exponential rate must be positive and finite, got {self.rate!r}")

    @classmethod
    def from_mean(cls, beta: float) -> "ExponentialParam":
        if not beta > 0:
            raise DomainError(f"exponential mean must be positive, got {beta!r}")
        return cls(1.0 / beta)

    @property
    def beta(self) -> float:
        return 1.0 / self.rate

    @property
    def mean(self) -> float:
        return self.beta

    @property
    def variance(self) -> float:
        return self.beta**2


@dataclass(frozen=True)
class UniformInterval:
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not self.a < self.b:
            raise DomainError(f"uniform interval needs a < b, got [{self.a}, {self.b}]")

    @property
    def mean(self) -> float:
        return (self.a + self.b) / 2

    @property
    def variance(self) -> float:
        return (self.b - self.a) ** 2 / 12


PoissonLike = Union[PoissonParam, float]
ExponentialLike = Union[ExponentialParam, float]


def _lam(p: PoissonLike) -> float:
    return p.lam if isinstance(p, PoissonParam) else PoissonParam(float(p)).lam


def _beta(p: ExponentialLike) -> float:
    """Floats are read as the mean waiting time."""
    return p.beta if isinstance(p, ExponentialParam) else ExponentialParam.from_mean(float(p)).beta


# Above this count the direct formula overflows x! / lam**x long before it
# loses accuracy in log space.
_LOG_PMF_THRESHOLD = 20


def poisson_pmf(x: int, p: PoissonLike) -> float:
    lam = _lam(p)
    if x < 0:
        return 0.0
    if x > _LOG_PMF_THRESHOLD:
        return math.exp(-lam + x * math.log(lam) - math.lgamma(x + 1))
    return math.exp(-lam) * lam**x / math.factorial(x)


def poisson_tail(x_min: int, p: PoissonLike) -> float:
    """P(X >= x_min)."""
    lam = _lam(p)
    if x_min <= 0:
        return 1.0
    head = math.fsum(poisson_pmf(k, lam) for k in range(x_min))
    return min(1.0, max(0.0, 1.0 - head))


def exponential_pdf(t: float, p: ExponentialLike) -> float:
    beta = _beta(p)
    if t < 0:
        return 0.0
    return math.exp(-t / beta) / beta


def exponential_cdf(t: float, p: ExponentialLike) -> float:
    beta = _beta(p)
    if t < 0:
        raise DomainError(f"waiting time must be non-negative, got {t!r}")
    return -math.expm1(-t / beta)


def uniform_pdf(x: float, iv: UniformInterval = UniformInterval()) -> float:
    return 1.0 / (iv.b - iv.a) if iv.a <= x <= iv.b else 0.0


def uniform_cdf(x: float, iv: UniformInterval = UniformInterval()) -> float:
    return min(1.0, max(0.0, (x - iv.a) / (iv.b - iv.a)))


# ---------------------------------------------------------------------------
# incomplete gamma
# ---------------------------------------------------------------------------

_EPS = 1e-16
_MAX_ITER = 10_000
_TINY = 1e-300


def _gamma_p_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_contfrac(a: float, x: float) -> float:
    # modified Lentz
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if a <= 0:
        raise DomainError(f"shape must be positive, got {a!r}")
    if x < 0:
        raise DomainError(f"x must be non-negative, got {x!r}")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_contfrac(a, x)


def chi_square_sf(x: float, df: int) -> float:
    """Upper tail probability P(X > x) of a chi-square variable."""
    if df < 1 or int(df) != df:
        raise DomainError(f"degrees of freedom must be a positive integer, got {df!r}")
    if not x >= 0:
        raise DomainError(f"chi-square statistic must be non-negative, got {x!r}")
    return min(1.0, max(0.0, regularized_gamma_q(df / 2.0, x / 2.0)))


# ---------------------------------------------------------------------------
# Kolmogorov distribution
# ---------------------------------------------------------------------------

_KS_TERM_TOL = 1e-12


def kolmogorov_q(t: float) -> float:
    """Asymptotic tail Q(t) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 t^2).

    For small ``t`` the alternating series cancels badly, so the equivalent
    theta-function form 1 - sqrt(2 pi)/t sum exp(-(2k-1)^2 pi^2 / (8 t^2))
    is used there instead.
    """
    if t < 0.1:
        # 1 - Q(t) < 1e-50 here
        return 1.0
    if t < 1.0:
        s = 0.0
        k = 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8 * t * t))
            s += term
            if term < _KS_TERM_TOL:
                break
            k += 1
        q = 1.0 - math.sqrt(2 * math.pi) / t * s
    else:
        q = 0.0
        k = 1
        while True:
            term = math.exp(-2.0 * k * k * t * t)
            q += term if k % 2 else -term
            if term < _KS_TERM_TOL:
                break
            k += 1
        q *= 2.0
    return min(1.0, max(0.0, q))


def kolmogorov_sf(d: float, n: int, stephens: bool = True) -> float:
    """P-value for a one-sample KS statistic ``d`` on ``n`` points.

    With ``stephens`` the argument is t = d (sqrt(n) + 0.12 + 0.11/sqrt(n)),
    otherwise the plain asymptotic t = d sqrt(n).
    """
    if not 0 <= d <= 1:
        raise DomainError(f"KS statistic must lie in [0, 1], got {d!r}")
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n!r}")
    rn = math.sqrt(n)
    t = d * (rn + 0.12 + 0.11 / rn) if stephens else d * rn
    return kolmogorov_q(t)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

KNUTH_MAX_RATE = 10.0


def sample_poisson(p: PoissonLike, rng: np.random.Generator) -> int:
    """Draw one Poisson variate from ``rng``.

    For rates up to ``KNUTH_MAX_RATE`` this is Knuth's product-of-uniforms
    method and consumes exactly ``k + 1`` uniforms for a result of ``k``.
    Above that it inverts the CDF with a single uniform.
    """
    lam = _lam(p)
    if lam <= KNUTH_MAX_RATE:
        limit = math.exp(-lam)
        k = 0
        prod = rng.random()
        while prod > limit:
            k += 1
            prod *= rng.random()
        return k
    return _invert_scalar(rng.random(), lam)


def _invert_scalar(u: float, lam: float) -> int:
    k = 0
    cdf = poisson_pmf(0, lam)
    while u > cdf:
        k += 1
        pk = poisson_pmf(k, lam)
        cdf += pk
        if pk == 0.0 and k > lam:
            break
    return k


def poisson_cdf_table(lam: PoissonLike, tail_tol: float = 1e-17) -> np.ndarray:
    """Cumulative probabilities P(X <= k) for k = 0..K.

    K is the first count past 2 * lam whose pmf is below ``tail_tol / 2``,
    which bounds the truncated tail mass by ``tail_tol``. The final entry is
    pinned to exactly 1.0 so every uniform in [0, 1) maps inside the table.
    """
    lam = _lam(lam)
    pmf = []
    k = 0
    while True:
        pk = poisson_pmf(k, lam)
        pmf.append(pk)
        if k >= 2 * lam and pk < tail_tol / 2:
            break
        k += 1
    cdf = np.cumsum(pmf)
    cdf[-1] = 1.0
    return cdf


def poisson_from_uniform(u: np.ndarray, cdf_table: np.ndarray) -> np.ndarray:
    """Vectorized inversion: smallest k with cdf_table[k] >= u."""
    return np.searchsorted(cdf_table, u, side="left")
