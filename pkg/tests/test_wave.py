import math

import numpy as np
import pytest

from kppfront.errors import DomainError
from kppfront.wave import LAM, solve_wave


def test_ode_residual_and_shape(wave):
    assert wave.ode_residual() < 1e-8
    assert np.all((wave.phi > 0) & (wave.phi < 1))
    assert np.all(wave.dphi[1:-1] < 0)


def test_left_state(wave):
    assert abs(wave.phi[0] - 1.0) < 1e-6
    assert wave.left_decay_rate() == pytest.approx(math.sqrt(2) - 1, abs=1e-3)
    # 1 - phi ~ A e^{lambda X} on the far left
    X = wave.x[:200]
    assert np.allclose((1 - wave.phi[:200]) / np.exp(LAM * X), wave.A, rtol=1e-4)


def test_normalisation_in_matching_frame(wave):
    # V0-(x) = e^X phi(X) with x = X + k tends to x
    assert abs(wave.v0_minus(25.0) - 25.0) < 1e-6
    assert abs(wave.v0_minus(25.0, 1) - 1.0) < 1e-6
    X = 25.0 - wave.k
    assert math.exp(X) * wave(X) == pytest.approx(25.0, abs=1e-6)


def test_algebraic_tail_in_profile_frame(wave):
    X = np.array([20.0, 30.0, 40.0])
    assert np.allclose(wave(X) * np.exp(X), X + wave.k, atol=1e-6)
    assert wave.k == pytest.approx(-1.9524236, abs=1e-6)


def test_left_of_front_is_exponential(wave):
    # e^X phi(X) = e^X (1 + O(e^{lambda X}))
    X = -15.0
    ratio = float(wave.v0_minus(X + wave.k)) / math.exp(X)
    assert ratio == pytest.approx(1.0, abs=5e-3)
    # next term is O(A^2 e^{2 lambda X}), a few 1e-3 relative here
    assert 1 - ratio == pytest.approx(wave.A * math.exp(LAM * X), rel=5e-3)


def test_omega_in_unit_interval(wave):
    assert 0.0 < wave.omega < 1.0
    x = np.linspace(8, 20, 50)
    gap = np.abs(wave.v0_minus(x) - x)
    assert np.all(gap <= 2 * np.exp(-wave.omega * x) * gap[0] / math.exp(-wave.omega * 8))


def test_translation_well_posed(wave):
    other = solve_wave(x_lo=-35.0, x_hi=55.0, h=0.005, eps=1e-9)
    X = np.linspace(-30, 50, 161)
    assert np.max(np.abs(other(X) - wave(X))) < 1e-6
    assert other.k == pytest.approx(wave.k, abs=1e-6)


def test_inverse(wave):
    x5 = wave.inverse(0.5)
    assert float(wave(x5)) == pytest.approx(0.5, abs=1e-13)


def test_bad_arguments(wave):
    with pytest.raises(ValueError):
        solve_wave(x_lo=-10.0)
    with pytest.raises(ValueError):
        solve_wave(h=0.05)
    with pytest.raises(DomainError):
        wave(200.0)
