import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kppfront.constants import MU_STAR
from kppfront.errors import DegenerateSlope, SolvabilityViolation
from kppfront.outer import (HALF, ExpansionLedger, balance_alpha1, balance_q3, build_v0_plus, build_v1_plus,
                            build_v2_plus, build_v3_plus, in_omega_minus, in_omega_plus, in_omega_sigma,
                            solvability_residual, solve_mu_root, v3bar_prime_at_zero, validate_omega)
from kppfront.spectral import SQRT_PI, default_basis, inner_product, phi, psi


@pytest.fixture(scope="module")
def basis():
    return default_basis()


@pytest.fixture(scope="module")
def v1(basis):
    return build_v1_plus(basis)


def test_v0_is_phi0():
    v0 = build_v0_plus()
    eta = np.linspace(0, 10, 11)
    assert np.array_equal(v0(eta), phi(0)(eta))
    assert v0.derivative_at_zero(3) == pytest.approx(-1.5, abs=1e-13)


def test_v1_boundary_data(v1, basis):
    assert abs(v1(0.0)) < 1e-8
    assert abs(v1.derivative_at_zero(1)) < 1e-4
    assert v1.derivative_at_zero(2) == pytest.approx(1.5, abs=1e-3)
    assert inner_product(v1.function, psi(1), basis) == pytest.approx(3 / SQRT_PI, abs=1e-6)


def test_v2_closed_form(basis):
    assert build_v2_plus(0.0)(np.linspace(0, 5, 6)).tolist() == [0.0] * 6
    v2 = build_v2_plus(1.0)
    assert abs(v2.derivative_at_zero(1)) < 1e-15
    assert inner_product(v2.function, psi(1), basis) == pytest.approx(-2 / 3, abs=1e-12)


def test_matching_taylor_data(v1):
    # the outer Taylor data reproduce x and -x^3/4 + 3x^2/4 of the inner tail
    v0 = build_v0_plus()
    assert v0.derivative_at_zero(1) == pytest.approx(1.0, abs=1e-13)
    assert v0.derivative_at_zero(2) == pytest.approx(0.0, abs=1e-13)
    assert v0.derivative_at_zero(3) / 6 == pytest.approx(-0.25, abs=1e-13)
    assert v1.derivative_at_zero(2) / 2 == pytest.approx(0.75, abs=1e-3)


def test_solvability_values(basis, v1):
    assert abs(solvability_residual(MU_STAR, basis, v1)) < 1e-5
    r0 = solvability_residual(0.0, basis, v1)
    assert r0 == pytest.approx(-2 / 3 * MU_STAR, abs=1e-6)
    assert solvability_residual(MU_STAR + 1.5, basis, v1) - solvability_residual(MU_STAR, basis, v1) \
        == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=10, deadline=None)
@given(st.floats(-10, 10))
def test_residual_affine(mu):
    b = default_basis()
    v = build_v1_plus(b)
    assert solvability_residual(mu, b, v) - solvability_residual(0.0, b, v) == pytest.approx(2 / 3 * mu, abs=1e-10)


def test_mu_root(basis, v1):
    assert solve_mu_root(basis, v1) == pytest.approx(MU_STAR, abs=1e-5)
    exact = solve_mu_root(basis, v1, phi0p_psi1=-1 / SQRT_PI)
    assert abs(exact - MU_STAR) <= abs(solve_mu_root(basis, v1) - MU_STAR) + 1e-12


def test_degenerate_slope(basis, v1, monkeypatch):
    import kppfront.outer as outer

    monkeypatch.setattr(outer, "inner_product", lambda f, g, b=None: 0.0)
    with pytest.raises(DegenerateSlope):
        outer.solve_mu_root(basis, v1)


def test_v3_construction(basis, v1):
    bar = v3bar_prime_at_zero(MU_STAR, basis, v1)
    assert bar == pytest.approx(14.46349578, abs=1e-6)
    v3 = build_v3_plus(MU_STAR, 1.0, 0.0, basis, v1)
    assert v3.derivative_at_zero() == pytest.approx(bar - 1.0, abs=1e-10)
    v3 = build_v3_plus(MU_STAR, 0.0, 1.0, basis, v1)
    assert v3.derivative_at_zero() == pytest.approx(bar - 1.5, abs=1e-10)
    assert abs(v3(0.0)) < 1e-8
    with pytest.raises(SolvabilityViolation):
        build_v3_plus(1.0, 0.0, 0.0, basis, v1)


def test_balance(basis, v1):
    led = ExpansionLedger(MU_STAR, C1_minus=9.7, v3bar_prime0=v3bar_prime_at_zero(MU_STAR, basis, v1))
    a = balance_alpha1(led, 9.7, 0.0)
    assert a == pytest.approx(led.v3bar_prime0 - 9.7)
    assert balance_alpha1(led, 10.7, 0.0) == pytest.approx(a - 1)
    assert balance_alpha1(led, 9.7, 2.0) == pytest.approx(a - 3)
    led.set(alpha1=a)
    assert abs(led.balance_residual()) < 1e-12
    assert balance_q3(led, 9.7, a - 3) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        balance_alpha1(ExpansionLedger(MU_STAR), 1.0, 0.0)


def test_omega_predicates():
    assert in_omega_sigma(1, 1)
    assert in_omega_sigma(0, 1)
    assert not in_omega_minus(HALF, 1)
    assert in_omega_plus(0, 0)
    assert in_omega_plus(HALF, 0)
    assert not in_omega_plus(Fraction(1, 3), 0)
    assert validate_omega(ExpansionLedger(MU_STAR)) == []


def test_omega_catches_bad_ledger():
    led = ExpansionLedger(MU_STAR)
    led.sigma[(Fraction(1, 2), 1)] = 0.0
    led.sigma[(-1, 0)] = 2.5
    bad = validate_omega(led)
    assert ("sigma", (Fraction(1, 2), 1)) in bad
    assert ("value", (-1, 0)) in bad


def test_shift_rate_matches_difference():
    led = ExpansionLedger(MU_STAR, alpha0=-0.5, alpha1=3.0)
    t = np.array([10.0, 100.0, 1000.0])
    h = 1e-4 * t
    fd = (led.shift(t + h) - led.shift(t - h)) / (2 * h)
    assert np.allclose(led.shift_rate(t), fd, rtol=1e-7)
    assert led.shift(100.0) == pytest.approx(200 - 1.5 * math.log(100) - 0.5 - 3 * SQRT_PI / 10
                                             + MU_STAR * math.log(100) / 100 + 0.03)
