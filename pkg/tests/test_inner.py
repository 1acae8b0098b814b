import math

import numpy as np
import pytest

from kppfront.errors import DomainError
from kppfront.inner import (fit_tail, psi_profile, psi_residual, shifted_inner, solve_inner,
                            solve_inner_shooting, tail_poly)


def test_residual_and_tail(inner):
    assert inner.residual(hi=45.0) < 1e-7
    p3, p2, p1, p0 = inner.tail
    assert p3 == pytest.approx(-0.25, abs=1e-6)
    assert p2 == pytest.approx(0.75, abs=1e-6)
    assert p1 == pytest.approx(inner.C1_minus, abs=1e-6)
    assert abs(p0) < 1e-5
    x = 25.0
    assert abs(inner(x) - (tail_poly(x) + inner.C1_minus * x)) < 1e-5


def test_left_decay(inner):
    x = np.array([-15.0, -20.0])
    assert np.all(np.abs(inner(x)) <= 50 * np.exp(x))


def test_c1_is_stable(inner, wave):
    for xh in (53.0, 57.0):
        assert solve_inner(wave, x_hi=xh).C1_minus == pytest.approx(inner.C1_minus, abs=1e-5)
    assert solve_inner(wave, h=0.005).C1_minus == pytest.approx(inner.C1_minus, abs=1e-5)


def test_shooting_oracle(inner, wave):
    c1, v1 = solve_inner_shooting(wave)
    assert c1 == pytest.approx(inner.C1_minus, abs=1e-4)
    x = np.linspace(-10, 20, 61)
    assert np.max(np.abs(v1(x) - inner(x))) < 1e-3


def test_homogeneous_solution(wave):
    x = np.linspace(-15, 30, 4501)
    h = x[1] - x[0]
    v = wave.v_ring(x)
    d2 = (v[2:] - 2 * v[1:-1] + v[:-2]) / h ** 2
    q = 2 * wave(x[1:-1] - wave.k)
    # second differences are only O(h^2) accurate; compare with that floor
    assert np.max(np.abs(-d2 + q * v[1:-1])) < 1e-5
    assert float(wave.v_ring(30.0)) == pytest.approx(1 - 30.0, abs=1e-6)


def test_gauge_renormalisation(inner, wave):
    # add c V_ring, then remove the constant tail term again
    c = 0.37
    v = inner.v + c * wave.v_ring(inner.x)
    p0 = fit_tail(inner.x, v)[3]
    back = v - p0 * wave.v_ring(inner.x)
    m = inner.x <= 40
    assert p0 == pytest.approx(c + inner.tail[3], abs=1e-8)
    scale = 1.0 + np.abs(inner.v[m])
    assert np.max(np.abs(back[m] - inner.v[m] + inner.tail[3] * wave.v_ring(inner.x[m])) / scale) < 1e-6


def test_psi_equation(inner, wave):
    assert psi_residual(inner, -10.0, 15.0) < 1e-6
    X, p, _ = psi_profile(inner, np.array([-15.0, 30.0]))
    assert abs(p[0]) < 1.0
    x = 30.0 + wave.k
    assert p[1] == pytest.approx((tail_poly(x) + inner.C1_minus * x) * math.exp(-30.0), rel=1e-6)
    assert abs(p[1]) < 1e-8


def test_shifted_inner(inner, wave):
    x = np.array([25.0])
    assert np.array_equal(shifted_inner(inner, 0.0, 100.0, x), wave.v0_minus(x) + inner(x) / 100.0)
    d = shifted_inner(inner, 0.01, 100.0, x) - shifted_inner(inner, 0.0, 100.0, x)
    # finite-difference slope oracle on the stored grid
    i = np.searchsorted(inner.x, 25.0)
    fd = (inner.v[i + 1] - inner.v[i - 1]) / (2 * inner.h)
    slope = 1 + fd / 100
    assert d[0] == pytest.approx(0.01 * slope, rel=1e-2)
    with pytest.raises(ValueError):
        shifted_inner(inner, 1.5, 100.0, x)
    with pytest.raises(DomainError):
        shifted_inner(inner, 0.5, 100.0, np.array([58.0]))


def test_interpolation_against_grid(inner):
    # a re-solve on the half-spacing grid has nodes at our midpoints; the
    # discretisation difference is smooth, so what remains is interpolation
    fine = solve_inner(inner.profile, h=0.005)
    i = np.arange(1000, 5000, 7)
    xm = inner.x[i] + 0.5 * inner.h
    d_mid = inner(xm) - fine(xm)
    d_nodes = 0.5 * ((inner.v[i] - fine(inner.x[i])) + (inner.v[i + 1] - fine(inner.x[i + 1])))
    assert np.max(np.abs(d_mid - d_nodes)) < 1e-8


def test_window_checks(wave):
    with pytest.raises(DomainError):
        solve_inner(wave, x_hi=70.0)
