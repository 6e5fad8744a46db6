import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special, stats

from poissonleague.dist import (
    DomainError,
    ExponentialParam,
    PoissonParam,
    UniformInterval,
    chi_square_sf,
    exponential_cdf,
    kolmogorov_q,
    kolmogorov_sf,
    poisson_cdf_table,
    poisson_from_uniform,
    poisson_pmf,
    poisson_tail,
    sample_poisson,
    uniform_cdf,
)


@pytest.mark.parametrize("x, expected", [(0, 0.147), (1, 0.282), (2, 0.270), (3, 0.173)])
def test_pmf_matches_reference_values(x, expected):
    assert round(poisson_pmf(x, 1.916), 3) == expected


def test_pmf_at_zero_is_exp_minus_lambda():
    for lam in (0.1, 1.0, 2.5, 30.0):
        assert poisson_pmf(0, lam) == pytest.approx(math.exp(-lam), rel=1e-15)


@pytest.mark.parametrize("x", [0, 5, 20, 21, 40, 150])
@pytest.mark.parametrize("lam", [0.3, 1.916, 12.0, 90.0])
def test_pmf_against_scipy(x, lam):
    assert poisson_pmf(x, lam) == pytest.approx(stats.poisson.pmf(x, lam), rel=1e-12, abs=1e-300)


def test_pmf_rejects_bad_rate():
    with pytest.raises(DomainError):
        poisson_pmf(1, 0.0)
    with pytest.raises(DomainError):
        PoissonParam(-1)


def test_tail():
    assert round(poisson_tail(4, 1.916), 3) == 0.128
    assert poisson_tail(0, 2.0) == 1.0
    assert poisson_tail(1, 1.0) == pytest.approx(1 - math.exp(-1), abs=1e-15)


@pytest.mark.parametrize("lam", [0.2, 1.916, 3.0, 9.5])
def test_pmf_plus_tail_is_one(lam):
    for X in range(51):
        head = math.fsum(poisson_pmf(x, lam) for x in range(X + 1))
        assert head + poisson_tail(X + 1, lam) == pytest.approx(1.0, abs=1e-12)


def test_moments_of_parameter_types():
    assert PoissonParam(1.9).mean == PoissonParam(1.9).variance == 1.9
    e = ExponentialParam.from_mean(40.0)
    assert e.rate * e.beta == pytest.approx(1.0)
    assert e.variance == pytest.approx(1600.0)
    u = UniformInterval(2.0, 5.0)
    assert (u.mean, u.variance) == (3.5, 0.75)
    with pytest.raises(DomainError):
        UniformInterval(1.0, 1.0)


def test_exponential_cdf():
    beta = 37.0
    assert exponential_cdf(beta, beta) == pytest.approx(1 - math.exp(-1))
    assert exponential_cdf(0.0, beta) == 0.0
    assert exponential_cdf(2 * beta, ExponentialParam.from_mean(beta)) == pytest.approx(1 - math.exp(-2))
    with pytest.raises(DomainError):
        exponential_cdf(-1.0, beta)


def test_uniform_cdf():
    assert uniform_cdf(0.5) == 0.5
    assert uniform_cdf(-1.0) == 0.0
    assert uniform_cdf(0.25) == 0.25
    assert uniform_cdf(3.0) == 1.0


@given(st.floats(0, 500), st.floats(0, 500))
def test_cdfs_monotone(a, b):
    lo, hi = sorted((a, b))
    assert exponential_cdf(lo, 50.0) <= exponential_cdf(hi, 50.0)
    iv = UniformInterval(0.0, 250.0)
    assert uniform_cdf(lo, iv) <= uniform_cdf(hi, iv)


# chi-square ----------------------------------------------------------------


def test_chi_square_reference_value():
    # df = 4 has the closed form exp(-x/2) (1 + x/2)
    x = 0.3805
    closed = math.exp(-x / 2) * (1 + x / 2)
    assert chi_square_sf(x, 4) == pytest.approx(closed, abs=1e-12)
    assert round(chi_square_sf(x, 4), 3) == 0.984


def test_chi_square_boundaries():
    assert chi_square_sf(0.0, 3) == 1.0
    assert chi_square_sf(4.0, 2) == pytest.approx(math.exp(-2), abs=1e-12)
    with pytest.raises(DomainError):
        chi_square_sf(-1.0, 2)
    with pytest.raises(DomainError):
        chi_square_sf(1.0, 0)


@given(st.floats(0, 20))
def test_chi_square_df2_closed_form(x):
    assert abs(chi_square_sf(x, 2) - math.exp(-x / 2)) <= 1e-10


@pytest.mark.parametrize("df", [1, 3, 4, 7, 15, 40])
def test_chi_square_against_scipy(df):
    for x in np.linspace(0, 3 * df + 20, 61):
        assert chi_square_sf(x, df) == pytest.approx(stats.chi2.sf(x, df), abs=1e-10)


# Kolmogorov ----------------------------------------------------------------


@pytest.mark.parametrize("d, ref", [(0.0892, 0.6789), (0.0854, 0.7305)])
def test_kolmogorov_reference_values(d, ref):
    assert kolmogorov_sf(d, 65) == pytest.approx(ref, abs=0.02)
    assert kolmogorov_sf(d, 65, stephens=False) == pytest.approx(ref, abs=0.002)


def test_kolmogorov_extremes():
    assert kolmogorov_sf(1.0, 5000) < 1e-12
    assert kolmogorov_sf(0.0, 10) == 1.0
    with pytest.raises(DomainError):
        kolmogorov_sf(1.5, 10)
    with pytest.raises(DomainError):
        kolmogorov_sf(0.1, 0)


def test_kolmogorov_q_against_scipy():
    for t in np.linspace(0.02, 3.0, 150):
        assert kolmogorov_q(t) == pytest.approx(special.kolmogorov(t), abs=1e-12)


@given(st.floats(0, 1), st.floats(0, 1), st.integers(1, 500))
def test_kolmogorov_monotone_in_d(a, b, n):
    lo, hi = sorted((a, b))
    assert kolmogorov_sf(lo, n) >= kolmogorov_sf(hi, n)


# sampling ------------------------------------------------------------------


def test_sample_poisson_moments_and_pmf():
    rng = np.random.default_rng(20240601)
    lam = 1.916
    draws = np.array([sample_poisson(lam, rng) for _ in range(1_000_000)])
    assert abs(draws.mean() - lam) < 0.005
    assert abs(draws.var() - lam) < 0.01
    freq = np.bincount(draws) / draws.size
    assert max(abs(freq[k] - poisson_pmf(k, lam)) for k in range(len(freq))) < 0.002


def test_sample_poisson_deterministic():
    r1, r2 = np.random.default_rng(99), np.random.default_rng(99)
    s1 = [sample_poisson(1.5, r1) for _ in range(500)]
    s2 = [sample_poisson(1.5, r2) for _ in range(500)]
    assert s1 == s2


def test_knuth_uniform_consumption():
    # a draw of k uses k + 1 uniforms
    rng = np.random.default_rng(11)
    ref = np.random.default_rng(11)
    for _ in range(200):
        k = sample_poisson(2.0, rng)
        ref.random(k + 1)
    assert rng.random() == ref.random()


def test_large_rate_uses_inversion():
    rng = np.random.default_rng(1)
    draws = np.array([sample_poisson(40.0, rng) for _ in range(20000)])
    assert abs(draws.mean() - 40.0) < 0.3
    assert abs(draws.var() - 40.0) < 2.0


def test_cdf_table_inversion():
    lam = 1.832
    table = poisson_cdf_table(lam)
    assert table[-1] == 1.0
    assert np.all(np.diff(table) >= 0)
    u = np.random.default_rng(0).random(400_000)
    draws = poisson_from_uniform(u, table)
    freq = np.bincount(draws, minlength=10)[:10] / u.size
    assert np.max(np.abs(freq - stats.poisson.pmf(np.arange(10), lam))) < 0.003
    # boundary: u == cdf(k) maps to k
    assert poisson_from_uniform(table[2], table) == 2
    assert poisson_from_uniform(0.0, table) == 0
