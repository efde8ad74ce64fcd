import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracle_values import INTEGRAL_PHI_0_1, PDF_0, PHI_1, QUANTILE_055

from robust_treat.errors import DomainError, LinearAlgebraError
from robust_treat.gauss import (
    gauss_antiderivative,
    integrate,
    sample_gaussian,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)


def test_cdf_anchors():
    assert std_normal_cdf(0.0) == 0.5
    assert abs(std_normal_cdf(1.0) - PHI_1) <= 1e-12


def test_cdf_rejects_nonfinite():
    for bad in (np.inf, -np.inf, np.nan):
        with pytest.raises(DomainError):
            std_normal_cdf(bad)


@given(st.floats(-8, 8))
def test_cdf_reflection(x):
    assert abs(std_normal_cdf(-x) + std_normal_cdf(x) - 1.0) <= 1e-14


def test_cdf_monotone():
    x = np.linspace(-10, 10, 20001)
    assert np.all(np.diff(std_normal_cdf(x)) >= 0)


def test_pdf():
    assert abs(std_normal_pdf(0.0) - PDF_0) <= 1e-14
    assert std_normal_pdf(1.7) == std_normal_pdf(-1.7)
    h = 1e-4
    for x in (-2.0, 0.3, 1.0):
        fd = (std_normal_cdf(x + h) - std_normal_cdf(x - h)) / (2 * h)
        assert abs(fd - std_normal_pdf(x)) <= 1e-6
    with pytest.raises(DomainError):
        std_normal_pdf(np.nan)


def test_quantile_anchors():
    assert std_normal_quantile(0.5) == 0.0
    assert abs(std_normal_quantile(0.55) - QUANTILE_055) <= 1e-12


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, np.nan])
def test_quantile_domain(p):
    with pytest.raises(DomainError):
        std_normal_quantile(p)


@given(st.floats(1e-12, 1 - 1e-12))
def test_quantile_inverts_cdf(p):
    assert abs(std_normal_cdf(std_normal_quantile(p)) - p) <= 1e-12


def test_quantile_round_trip_grid():
    x = np.linspace(-6, 6, 2401)
    p = std_normal_cdf(x)
    err = np.abs(std_normal_quantile(p) - x)
    # Near p = 1 the spacing of doubles, not the inverse, limits the round trip:
    # one ulp of p moves x by ulp(p) / phi(x), about 1.8e-8 at x = 6.
    floor = 2 * np.spacing(p) / std_normal_pdf(x)
    assert np.all(err <= np.maximum(1e-9, floor))
    assert np.max(err[x <= 0]) <= 1e-9


def test_integrate_examples():
    assert abs(integrate(lambda x: x, 0.0, 1.0) - 0.5) <= 1e-15
    assert abs(integrate(std_normal_cdf, 0.0, 1.0) - INTEGRAL_PHI_0_1) <= 1e-12
    assert abs(integrate(std_normal_pdf, -8.0, 8.0) - 1.0) <= 1e-12
    # same number from the antiderivative
    assert abs(gauss_antiderivative(1.0) - gauss_antiderivative(0.0) - INTEGRAL_PHI_0_1) <= 1e-15


def test_integrate_polynomial_exactness():
    # one 20-point panel is exact through degree 39
    for deg in (0, 5, 17, 39):
        exact = (2.0 ** (deg + 1) - (-1.0) ** (deg + 1)) / (deg + 1)
        got = integrate(lambda x: x ** deg, -1.0, 2.0, panels=1)
        assert abs(got - exact) <= 1e-12 * max(1.0, abs(exact))


def test_integrate_panel_doubling():
    f = lambda x: np.exp(-x * x) * np.cos(3 * x)
    a = integrate(f, -4.0, 5.0, panels=16)
    b = integrate(f, -4.0, 5.0, panels=32)
    assert abs(a - b) < 1e-10


def test_integrate_errors():
    with pytest.raises(DomainError):
        integrate(lambda x: x, 1.0, 0.0)
    assert integrate(lambda x: x, 2.0, 2.0) == 0.0


def test_sampling_reproducible():
    a = sample_gaussian([0.0, 1.0], np.eye(2), 1000, seed=7)
    b = sample_gaussian([0.0, 1.0], np.eye(2), 1000, seed=7)
    c = sample_gaussian([0.0, 1.0], np.eye(2), 1000, seed=8)
    assert a.shape == (1000, 2)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sampling_moments():
    draws = sample_gaussian([0.0, 0.0], np.eye(2), 1_000_000, seed=1)
    assert np.all(np.abs(draws.mean(axis=0)) <= 4 / np.sqrt(1e6))
    draws = sample_gaussian([0.0], [[4.0]], 200_000, seed=2)
    assert abs(draws.var() / 4.0 - 1.0) < 0.05


def test_sampling_rejects_non_spd():
    with pytest.raises(LinearAlgebraError):
        sample_gaussian([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]], 10, seed=0)


@settings(max_examples=25)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_antiderivative_matches_quadrature(a, b):
    lo, hi = min(a, b), max(a, b)
    q = integrate(std_normal_cdf, lo, hi)
    assert abs(q - (gauss_antiderivative(hi) - gauss_antiderivative(lo))) <= 1e-12
