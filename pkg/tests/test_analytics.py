import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bomodel import analytics
from bomodel.analytics import (azuma_tail_bound, coeff_c, coeff_c2_c3, coeff_c_asymptotic, coeff_cX,
                               coefficients, concentration_window, cov_bound, cX_asymptotic,
                               cX_bounds, expected_R_main, log_beta, tail_sum_degree)
from bomodel.graph_model import ModelParams

P11 = ModelParams(1.0, 1)
SETTINGS = [ModelParams(1.0, 1), ModelParams(0.5, 2), ModelParams(2.0, 1), ModelParams(0.3, 3),
            ModelParams(4.0, 2)]


def test_log_beta_examples():
    assert log_beta(1, 2) == pytest.approx(math.log(0.5), abs=1e-15)
    assert log_beta(1, 1) == pytest.approx(0.0, abs=1e-15)
    assert log_beta(0.5, 0.5) == pytest.approx(math.log(math.pi), abs=1e-15)


@pytest.mark.parametrize("x,y", [(0, 1), (-1, 2), (1, -0.5)])
def test_log_beta_domain(x, y):
    with pytest.raises(ValueError):
        log_beta(x, y)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 1e5), st.floats(1e-3, 1e5))
def test_log_beta_against_mpmath(x, y):
    mpmath.mp.dps = 40
    ref = float(mpmath.log(mpmath.beta(x, y)))
    got = log_beta(x, y)
    assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))


def test_c_at_a1_k1_closed_form():
    # c(d) = 4 / (d (d+1) (d+2)) when a = k = 1
    d = np.arange(1, 400)
    assert np.allclose(coeff_c(d, P11), 4 / (d * (d + 1) * (d + 2)), rtol=1e-12, atol=0)
    assert coeff_c(1, P11) == pytest.approx(2 / 3, rel=1e-14)
    assert coeff_c(3, P11) == pytest.approx(1 / 15, rel=1e-14)


@pytest.mark.parametrize("params", SETTINGS)
def test_c_base_and_ratio(params):
    a, k = params.a, params.k
    assert coeff_c(k, params) == pytest.approx((a + 1) / (k * a + a + 1), rel=1e-13)
    assert coeff_c(k - 1, params) == 0
    for d in range(k + 1, k + 40):
        ratio = coeff_c(d - 1, params) / coeff_c(d, params)
        assert ratio == pytest.approx((d + 1 - k + k * a + a) / (d - 1 - k + k * a), rel=1e-12)


def test_c_ratio_example():
    assert coeff_c(4, P11) / coeff_c(5, P11) == pytest.approx(7 / 4, rel=1e-13)


@pytest.mark.parametrize("params", SETTINGS)
def test_c_is_a_distribution_with_mean_2k(params):
    a, k = params.a, params.k
    d = np.arange(k, 2 * 10 ** 6)
    c = coeff_c(d, params)
    A = coefficients(params).A
    D = d[-1]
    # tails of sum c(d) and sum d c(d) from c(d) ~ A d^(-2-a)
    assert c.sum() + A * D ** (-1 - a) / (1 + a) == pytest.approx(1.0, abs=1e-6)
    assert (d * c).sum() + A * D ** (-a) / a == pytest.approx(2 * k, rel=1e-4)


def test_tail_sum_degree():
    for params in SETTINGS:
        for tol in (1e-3, 1e-6):
            d_max = tail_sum_degree(params, tol)
            total = coeff_c(np.arange(params.k, d_max + 1), params).sum()
            assert 1 - total <= tol * (1 + 1e-9)
            assert 1 - total + coeff_c(d_max, params) > tol


@pytest.mark.parametrize("params", SETTINGS)
def test_tail_mass_exact(params):
    k = params.k
    assert analytics.tail_mass(k, params) == pytest.approx(1.0, rel=1e-14)
    for d0 in (k + 1, k + 7, k + 300):
        head = coeff_c(np.arange(k, d0), params).sum()
        assert head + analytics.tail_mass(d0, params) == pytest.approx(1.0, abs=1e-13)


def test_A_and_B_at_a1_k1():
    co = coefficients(P11)
    assert co.A == pytest.approx(4.0, rel=1e-14)
    assert co.B == pytest.approx(10 / 3, rel=1e-13)
    assert co.theta_lo == pytest.approx(-3.0)


@pytest.mark.parametrize("params", SETTINGS)
def test_A_independent(params):
    a, k = params.a, params.k
    A = (a + 1) * math.gamma(k * a + a + 1) / math.gamma(k * a)
    B = a * math.gamma(k * a + 1) * math.gamma(2 * k * a + a + 3) \
        / (math.gamma(2 * k * a + 2) * math.gamma(k * a + a + 2))
    co = coefficients(params)
    assert co.A == pytest.approx(A, rel=1e-12)
    assert co.B == pytest.approx(B, rel=1e-12)


@pytest.mark.parametrize("params", SETTINGS)
def test_asymptotic_c(params):
    assert coeff_c(10 ** 5, params) / coeff_c_asymptotic(10 ** 5, params) == pytest.approx(1, abs=1e-3)


def test_asymptotic_c_example():
    assert coeff_c_asymptotic(1000, P11) == pytest.approx(4e-9, rel=1e-12)
    assert coeff_c(1000, P11) / coeff_c_asymptotic(1000, P11) == pytest.approx(1, abs=5e-3)


def test_expected_R_main():
    assert expected_R_main(1, 300, P11) == pytest.approx(200)
    assert expected_R_main(1, 300, ModelParams(1.0, 2)) == 0


def test_concentration_window():
    assert concentration_window(2, 10 ** 4, 0, P11) == 0
    assert concentration_window(2, 10 ** 4, 10, P11) == pytest.approx((math.sqrt(1e4 / 8) + 0.5) * 10)
    w = [concentration_window(5, t, 1, P11) / t for t in (1e4, 4e4, 16e4)]
    assert w[0] / w[1] == pytest.approx(2, rel=0.05) and w[1] / w[2] == pytest.approx(2, rel=0.05)


def test_cov_bound():
    assert cov_bound(2, 2, 100, P11) == pytest.approx(25.25)
    assert cov_bound(3, 7, 50, P11, 2.0) == cov_bound(7, 3, 50, P11, 2.0)
    assert cov_bound(3, 7, 200, P11) - cov_bound(3, 7, 100, P11) == \
        pytest.approx(cov_bound(3, 7, 300, P11) - cov_bound(3, 7, 200, P11))


def test_cX_examples():
    assert coeff_cX(1, 1, P11) == 0
    assert coeff_cX(2, 1, P11) == pytest.approx(2 / 15, rel=1e-14)
    for params in SETTINGS:
        assert coeff_cX(params.k, params.k, params) == 0
    with pytest.raises(ValueError):
        coeff_cX(0, 3, P11)
    with pytest.raises(ValueError):
        coeff_cX(1, 3, ModelParams(1.0, 2))


def _cX_exact(d1, d2, a, k):
    # the defining recurrence in exact rationals
    a = Fraction(a)
    memo = {}

    def c(d):
        D = d - k + k * a
        num, den = Fraction(1), Fraction(1)
        # c(d) = c(k) * prod_{j=k+1}^{d} (j-1-k+ka) / (j+1-k+ka+a)
        for j in range(k + 1, d + 1):
            num *= j - 1 - k + k * a
            den *= j + 1 - k + k * a + a
        return (a + 1) / (k * a + a + 1) * num / den

    def cx(x, y):
        if (x, y) in memo:
            return memo[(x, y)]
        Dx, Dy = x - k + k * a, y - k + k * a
        if x == k and y == k:
            v = Fraction(0)
        elif y == k:
            v = (Dx - 1) * (cx(x - 1, k) + c(x - 1)) / (Dx + k * a + a + 1)
        elif x == k:
            v = (Dy - 1) * (cx(k, y - 1) + c(y - 1)) / (Dy + k * a + a + 1)
        else:
            v = ((Dx - 1) * cx(x - 1, y) + (Dy - 1) * cx(x, y - 1)) / (Dx + Dy + a + 1)
        memo[(x, y)] = v
        return v

    return cx(d1, d2)


@pytest.mark.parametrize("params", [ModelParams(1.0, 1), ModelParams(0.5, 2), ModelParams(2.0, 1)])
def test_cX_against_rational_recurrence(params):
    for d1 in range(params.k, params.k + 8):
        for d2 in range(params.k, params.k + 8):
            ref = float(_cX_exact(d1, d2, params.a, params.k))
            assert coeff_cX(d1, d2, params) == pytest.approx(ref, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("params", SETTINGS)
def test_cX_symmetric(params):
    d = np.arange(params.k, params.k + 50)
    grid = coeff_cX(d[:, None], d[None, :], params)
    assert np.array_equal(grid, grid.T)
    assert np.all(grid >= 0)


def test_c2_c3_examples():
    c2, c3 = coeff_c2_c3(1, 1, P11)
    assert c2 == pytest.approx(1 / 4, rel=1e-13)
    assert c3 == pytest.approx(1 / 12, rel=1e-13)
    for params in SETTINGS:
        c2, c3 = coeff_c2_c3(params.k, params.k, params)
        assert c2 / c3 == pytest.approx(4 - 2 / (params.k * params.a + 1), rel=1e-12)


@pytest.mark.parametrize("params", SETTINGS)
def test_c2_c3_interior_recurrence(params):
    a, k = params.a, params.k
    d = np.arange(k + 1, k + 60)
    d1, d2 = d[:, None], d[None, :]
    D1, D2 = d1 - k + k * a, d2 - k + k * a
    for idx in (0, 1):
        v = coeff_c2_c3(d1, d2, params)[idx]
        left = coeff_c2_c3(d1 - 1, d2, params)[idx]
        down = coeff_c2_c3(d1, d2 - 1, params)[idx]
        resid = np.abs(v * (D1 + D2 + a + 1) - (D1 - 1) * left - (D2 - 1) * down)
        assert np.all(resid < 1e-10 * v * (D1 + D2 + a + 1))


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 8.0), st.integers(1, 4))
def test_sandwich_holds(a, k):
    params = ModelParams(a, k)
    d = np.arange(k, k + 80)
    d1, d2 = d[:, None], d[None, :]
    cx = coeff_cX(d1, d2, params)
    lo, hi = cX_bounds(d1, d2, params)
    tol = 1e-12 * np.maximum(np.abs(hi), 1e-300)
    assert np.all(lo <= cx + tol)
    assert np.all(cx <= hi + tol)


def test_cX_asymptotic_along_parabola():
    # d2 = d1^2: the ratio approaches 1
    ratios = [coeff_cX(d, d * d, P11) / cX_asymptotic(d, d * d, P11) for d in (8, 16, 32, 60)]
    gaps = [abs(r - 1) for r in ratios]
    assert gaps == sorted(gaps, reverse=True)
    assert gaps[-1] < 0.1
    assert cX_asymptotic(3, 9, P11) == cX_asymptotic(9, 3, P11)


def test_cX_diagonal_within_theta_window():
    # on d1 = d2 the coefficient lies between the theta_lo and theta_hi versions of the closed form
    for params in SETTINGS:
        for d in (20, 50, 120):
            lo, hi = cX_bounds(d, d, params)
            assert lo <= coeff_cX(d, d, params) <= hi


def test_cx_table_grows_on_demand():
    params = ModelParams(0.9, 2)
    small = coeff_cX(5, 7, params)
    coeff_cX(300, 2, params)
    assert coeff_cX(5, 7, params) == small
    with pytest.raises(MemoryError):
        coeff_cX(10 ** 5, 2, params)


def test_azuma():
    assert azuma_tail_bound(1e-9) == pytest.approx(2.0)
    assert azuma_tail_bound(4) == pytest.approx(2 * math.exp(-2))
    assert azuma_tail_bound(6) == pytest.approx(0.0222, abs=1e-4)
    c = np.linspace(0.1, 10, 50)
    assert np.all(np.diff(azuma_tail_bound(c)) < 0)


def _hyp1_partial(alpha, beta, gamma, n):
    # partial sums of 2F1(alpha, beta; gamma; 1), positive terms by term ratio
    terms = np.empty(n)
    term = 1.0
    for j in range(n):
        terms[j] = term
        term *= (alpha + j) * (beta + j) / ((gamma + j) * (j + 1))
    return np.cumsum(terms)


@pytest.mark.parametrize("params", SETTINGS)
def test_truncated_series_below_closed_form(params):
    a, k = params.a, params.k
    ka = k * a
    # B = a 2F1(a+1, ka+1; 2ka+a+3; 1)
    B = coefficients(params).B
    partial = a * _hyp1_partial(a + 1, ka + 1, 2 * ka + a + 3, 20000)
    assert np.all(np.diff(partial) >= 0)
    assert partial[-1] <= B * (1 + 1e-12)
    assert partial[-1] == pytest.approx(B, rel=1e-3)
    # Gamma ratio = 2F1(a, ka; D+ka+a+2; 1) for D = d - k + ka
    for d in (k, k + 3, k + 40):
        D = d - k + ka
        closed = math.exp(math.lgamma(D + 2) + math.lgamma(D + ka + a + 2)
                          - math.lgamma(D + a + 2) - math.lgamma(D + ka + 2))
        partial = _hyp1_partial(a, ka, D + ka + a + 2, 20000)
        assert partial[-1] <= closed * (1 + 1e-12)
        assert partial[-1] == pytest.approx(closed, rel=1e-3)
