import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kppfront import constants as C
from kppfront.errors import CrossValidationFailure
from kppfront.spectral import SQRT_PI, default_basis, inner_product, phi, psi


def exact_term(k):
    return Fraction(math.factorial(2 * k + 1), 4 ** k * math.factorial(k) ** 2 * (2 * k - 1) ** 3)


def test_first_terms():
    t = C.binomial_series_terms(3)
    assert t[0] == -1.0
    assert t[1] == pytest.approx(1.5, abs=1e-15)


@given(st.integers(min_value=0, max_value=300))
def test_ratio_recurrence_matches_factorials(k):
    t = C.binomial_series_terms(k + 1)[k]
    assert t == pytest.approx(float(exact_term(k)), rel=1e-12)


def test_series_value():
    s, tail = C.sum_binomial_series(10**6)
    assert abs(s + tail - C.SERIES_EXACT) < 1e-8
    assert C.SERIES_EXACT == pytest.approx(0.60678976, abs=1e-8)


@pytest.mark.parametrize("N", [1000, 10**4, 10**5])
def test_tail_envelope(N):
    s, tail = C.sum_binomial_series(N)
    assert abs(s + tail - C.SERIES_EXACT) < 2 * tail
    assert tail == pytest.approx(N ** -1.5 / (6 * SQRT_PI), rel=5e-3)


def test_series_needs_ten_terms():
    with pytest.raises(ValueError):
        C.sum_binomial_series(5)


@pytest.mark.parametrize("k", range(11))
def test_claim_formula(k):
    q = inner_product(phi(0).derivative(), psi(k), default_basis())
    assert q == pytest.approx(C.claim_value(k), abs=1e-10)


def test_theta_coefficients_match_projection():
    from kppfront.spectral import dirichlet_solve

    b = default_basis()
    theta = dirichlet_solve(0.5, phi(0).derivative(), b)
    proj = theta.eigen_coefficients(b)
    assert np.max(np.abs(proj - C.theta_coefficients(b.K - 1))) < 1e-9


def test_theta_prime_psi1_routes():
    series, quad = C.theta_prime_psi1()
    assert series == pytest.approx(C.THETA_PSI1_EXACT, abs=1e-8)
    assert quad == pytest.approx(series, abs=1e-5)


def test_arcsin_and_log_cos():
    val = C.arcsin_over_y_integral()
    assert val == pytest.approx(0.5 * math.pi * math.log(2), abs=1e-10)
    from scipy.integrate import quad

    half, _ = quad(lambda y: math.asin(y) / y if y else 1.0, 0, 0.5)
    assert half < val
    assert C.log_cos_integral() == pytest.approx(-math.pi * math.log(2), abs=1e-9)


def test_mu_closed_form():
    assert C.MU_STAR == pytest.approx(0.9462565312, abs=1e-10)
    assert C.mu_from_theta(2 * math.log(2) - 1) == pytest.approx(C.MU_STAR, abs=1e-14)
    assert C.mu_from_theta(C.THETA_PSI1_EXACT + 0.01) - C.MU_STAR == pytest.approx(-27 / 800, abs=1e-12)


def test_compute_mu_routes():
    rep = C.compute_mu()
    assert abs(rep.mu_series - rep.mu_closed) < 1e-7
    assert abs(rep.mu_root - rep.mu_closed) < 1e-6
    assert max(rep.discrepancies().values()) < 1e-5
    assert all(r[-1] for r in rep.rows())


def test_compute_mu_flags_disagreement():
    # too few terms: the series route drifts beyond a tight tolerance
    with pytest.raises(CrossValidationFailure):
        C.compute_mu(N=20, tol=1e-9)
