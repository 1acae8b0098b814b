import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kppfront.errors import LevelNotBracketed, StabilityBreach
from kppfront.solver import (PdeState, SimulationConfig, crossing, front_position, init_step, logistic_flow,
                             run, step)


def test_logistic_flow_closed_form():
    # u' = u(1-u) from 1/2: u(t) = e^t / (1 + e^t)
    assert logistic_flow(0.5, 0.1) == pytest.approx(math.exp(0.1) / (1 + math.exp(0.1)), abs=1e-15)
    assert logistic_flow(0.5, 0.1) == pytest.approx(0.52497919, abs=1e-8)
    assert logistic_flow(np.array([0.0, 1.0]), 3.0).tolist() == [0.0, 1.0]


def test_sharp_step():
    s = init_step()
    u = s.u
    assert np.max(np.abs(u[s.x < 0] - 1.0)) < 1e-15
    assert np.all(u[s.x > 0] == 0.0)
    assert s.t == 0.0 and s.frame_offset == 0.0


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_perturbed_step_accepted(a, b):
    s = init_step(1.0, lambda x: np.clip(a + b * np.cos(3 * x), 0, 1))
    assert s.u.min() >= 0 and s.u.max() <= 1 + 1e-15


def test_init_step_errors():
    with pytest.raises(ValueError):
        init_step(1.0, lambda x: 1.5 + 0 * x)
    with pytest.raises(ValueError):
        init_step(-1.0)
    with pytest.raises(ValueError):
        init_step(1.0)


@pytest.mark.parametrize("scheme", ["implicit", "strang"])
def test_equilibria_in_bulk(scheme):
    s = init_step(h=0.05, x_lo=-30, x_hi=30)
    for _ in range(20):
        s = step(s, 0.01, scheme)
    u, x = s.u, s.x
    assert np.max(np.abs(u[x < -15] - 1.0)) < 1e-12
    assert np.max(np.abs(u[x > 15])) < 1e-12


@pytest.mark.parametrize("scheme", ["implicit", "strang"])
def test_range_and_monotone(scheme):
    res = run(SimulationConfig(t_final=10.0, levels=(0.1, 0.5, 0.9), scheme=scheme))
    u = res.final.u
    assert u.min() >= -1e-12 and u.max() <= 1 + 1e-12
    assert res.monotone
    assert res.trace.check_invariants()


def test_stability_breach():
    s = PdeState.from_u(0.0, np.linspace(-1, 1, 5), np.array([1.0, 1.0, 2.0, 0.0, 0.0]))
    with pytest.raises(StabilityBreach):
        s.check_range()


def test_bad_dt_and_scheme():
    s = init_step()
    with pytest.raises(ValueError):
        step(s, 0.0)
    with pytest.raises(ValueError):
        step(s, 0.1, "euler")


def test_crossing_of_shifted_wave(wave):
    a = 0.3717
    x = np.arange(-20, 20, 0.05)
    u = wave(x - a)
    assert crossing(x, u, float(wave(0.0))) == pytest.approx(a, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(0.05, 0.3))
def test_rightmost_crossing(c, amp):
    x = np.linspace(-10, 10, 401)
    u = 0.5 * (1 - np.tanh(x)) + amp * np.exp(-(x - c) ** 2)
    u = np.clip(u, 0, 1)
    s = 0.5
    brute = x[np.nonzero((u[:-1] >= s) & (u[1:] < s))[0][-1]]
    r = crossing(x, u, s)
    assert brute <= r <= brute + (x[1] - x[0])
    assert np.all(u[x > r + 0.05] < s)


def test_unique_bracket_and_lab_frame():
    s = init_step()
    s = PdeState(5.0, s.x, s.v)
    assert front_position(s, 0.5) == pytest.approx(10.0, abs=1e-12)
    assert front_position(s, 0.5, lab=False) == pytest.approx(0.0, abs=1e-12)


def test_level_not_bracketed():
    x = np.linspace(0, 1, 11)
    with pytest.raises(LevelNotBracketed):
        crossing(x, np.full(11, 0.2), 0.5)


def test_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig(levels=(1.2,))
    with pytest.raises(ValueError):
        SimulationConfig(t_final=10.0, snapshots=(20.0,))
    with pytest.raises(ValueError):
        SimulationConfig(scheme="rk4")


def test_snapshots_are_taken_exactly():
    res = run(SimulationConfig(t_final=20.0, snapshots=(5.0, 20.0)))
    assert sorted(res.snapshots) == [5.0, 20.0]
    assert res.snapshots[5.0].t == pytest.approx(5.0, abs=1e-12)


def test_speed_near_100(run100):
    # sigma/t itself carries -3/2 log(t)/t, about 0.07 at t = 100
    tr = run100.trace
    assert (tr.at(0.5, 100.0) - tr.at(0.5, 50.0)) / 50.0 == pytest.approx(2.0, abs=0.05)
    assert 1.85 < tr.at(0.5, 100.0) / 100.0 < 2.0


@pytest.mark.slow
def test_window_widening_is_harmless():
    a = run(SimulationConfig(t_final=200.0)).trace.at(0.5, 200.0)
    b = run(SimulationConfig(t_final=200.0, right_pad=50.0)).trace.at(0.5, 200.0)
    assert abs(a - b) < 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("scheme", ["implicit", "strang"])
def test_self_convergence_order(scheme):
    base = SimulationConfig(t_final=20.0, h=0.1, dt=0.01, scheme=scheme, x_left=-40.0, right_pad=30.0)
    pos = np.array([[run(base.refined(r, r)).trace.at(0.5, t) for t in (1.0, 5.0, 20.0)] for r in (1, 2, 4)])
    order = np.log2(np.abs(pos[0] - pos[1]) / np.abs(pos[1] - pos[2]))
    assert np.all(order >= 1.9)
