"""Minimal-speed front phi'' + 2 phi' + phi - phi^2 = 0, phi(-inf) = 1, phi(+inf) = 0.

The right equilibrium is a degenerate node, so we shoot from the saddle at
phi = 1 and fix the translate afterwards.  Near the right end the variable
V = e^X phi (V'' = e^-X V^2) is integrated instead, which is well scaled.

Two coordinates appear.  The profile frame X is normalised so that
phi(X) = (X + k) e^-X + ..., i.e. the prefactor of the algebraic tail is one.
The matching frame is x = X + k; there V0-(x) = e^X phi(X) = x + o(1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from ._validation import check_real
from .errors import DomainError, NonConvergence

LAM = math.sqrt(2.0) - 1.0
_C2 = -1.0 / (4 * LAM * LAM + 4 * LAM - 1.0)
RAW_END = 220.0


def _deficit_rhs(x, y):
    # w = 1 - phi; written this way there is no cancellation near phi = 1
    return [y[1], -2.0 * y[1] + y[0] - y[0] * y[0]]


def _tail_rhs(x, y):
    return [y[1], math.exp(-x) * y[0] * y[0]]


def _switch_event(x, y):
    return y[0] - (1.0 - 1e-4)


_switch_event.terminal = True
_switch_event.direction = 1


def _shoot(eps, rtol=1e-13):
    """Integrate from 1 - eps at raw coordinate 0.  Returns dense patches and (B, k0)."""
    w0, dw0 = eps + _C2 * eps * eps, LAM * eps + 2 * LAM * _C2 * eps * eps
    left = solve_ivp(_deficit_rhs, [0.0, RAW_END], [w0, dw0], method="DOP853", rtol=rtol,
                     atol=1e-24, dense_output=True, events=_switch_event)
    if left.status != 1:
        raise NonConvergence("left patch never reached the small-phi region")
    xs = left.t[-1]
    p, dp = 1.0 - left.y[0, -1], -left.y[1, -1]
    v0 = [math.exp(xs) * p, math.exp(xs) * (p + dp)]
    right = solve_ivp(_tail_rhs, [xs, RAW_END], v0, method="DOP853", rtol=rtol, atol=1e-12,
                      dense_output=True)
    if not right.success:
        raise NonConvergence(right.message)
    V, dV = right.y[:, -1]
    if not (dV > 0 and np.all(left.y[0] < 1)):
        raise NonConvergence("shooting trajectory left the front heteroclinic")
    return left.sol, right.sol, xs, dV, V / dV - RAW_END


@dataclass(frozen=True, eq=False)
class WaveProfile:
    x: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    dphi: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    dv: np.ndarray = field(repr=False)
    k: float
    A: float
    omega: float
    h: float

    def __post_init__(self):
        d2 = -2.0 * self.dphi - self.phi + self.phi ** 2
        object.__setattr__(self, "_phi_spl", CubicHermiteSpline(self.x, self.phi, self.dphi))
        object.__setattr__(self, "_dphi_spl", CubicHermiteSpline(self.x, self.dphi, d2))
        d2v = np.exp(-self.x) * self.v ** 2
        object.__setattr__(self, "_v_spl", CubicHermiteSpline(self.x, self.v, self.dv))
        object.__setattr__(self, "_dv_spl", CubicHermiteSpline(self.x, self.dv, d2v))

    @property
    def x_lo(self):
        return float(self.x[0])

    @property
    def x_hi(self):
        return float(self.x[-1])

    def _check(self, X):
        X = np.asarray(X, dtype=float)
        if np.any(X < self.x_lo - 1e-12) or np.any(X > self.x_hi + 1e-12):
            raise DomainError(f"profile stored on [{self.x_lo}, {self.x_hi}] only")
        return X

    def __call__(self, X, deriv=0):
        """phi or phi' at profile-frame points X."""
        X = self._check(X)
        if deriv == 0:
            return self._phi_spl(X)
        if deriv == 1:
            return self._dphi_spl(X)
        raise ValueError("deriv must be 0 or 1")

    def inverse(self, s):
        """X with phi(X) = s."""
        from scipy.optimize import brentq
        return brentq(lambda X: float(self._phi_spl(X)) - s, self.x_lo, self.x_hi, xtol=1e-14)

    def v0_minus(self, x, deriv=0):
        """V0- in the matching frame x = X + k."""
        X = self._check(np.asarray(x, dtype=float) - self.k)
        return self._v_spl(X) if deriv == 0 else self._dv_spl(X)

    def v_ring(self, x, deriv=0):
        """Homogeneous inner solution e^X phi'(X) ~ 1 - x; deriv=1 gives its slope."""
        X = self._check(np.asarray(x, dtype=float) - self.k)
        if deriv == 0:
            return np.exp(X) * self._dphi_spl(X)
        d2 = -2.0 * self._dphi_spl(X) - self._phi_spl(X) + self._phi_spl(X) ** 2
        return np.exp(X) * (self._dphi_spl(X) + d2)

    def ode_residual(self):
        """Max of |D phi - phi'| and |D phi' + 2 phi' + phi - phi^2| with 4th-order differences."""
        def d4(f):
            return (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * self.h)
        p, dp = self.phi, self.dphi
        r1 = np.abs(d4(p) - dp[2:-2])
        r2 = np.abs(d4(dp) + 2 * dp[2:-2] + p[2:-2] - p[2:-2] ** 2)
        return float(max(r1.max(), r2.max()))

    def normalization_residual(self, x=25.0):
        return float(self.v0_minus(x) - x)

    def left_decay_rate(self, width=10.0):
        m = self.x <= self.x_lo + width
        return float(np.polyfit(self.x[m], np.log1p(-self.phi[m]), 1)[0])


def solve_wave(x_lo: float = -40.0, x_hi: float = 60.0, h: float = 0.005, eps: float = 1e-10,
               rtol: float = 1e-13) -> WaveProfile:
    """Sample the normalised front on [x_lo, x_hi] (profile frame) with spacing h."""
    x_lo = check_real(x_lo, "x_lo", hi=-20.0)
    x_hi = check_real(x_hi, "x_hi", lo=30.0)
    h = check_real(h, "h", 0.0, 0.01, lo_open=True)
    left, right, xs, B, k0 = _shoot(eps, rtol)
    a = math.log(B)
    k = a + k0
    if x_lo + a < 0.0:
        raise NonConvergence(f"x_lo={x_lo} lies beyond the shooting start; lower eps")
    if x_hi + a > RAW_END - 5.0:
        raise NonConvergence(f"x_hi={x_hi} beyond the integrated range")
    n = int(round((x_hi - x_lo) / h))
    X = x_lo + h * np.arange(n + 1)
    raw = X + a
    lm = raw <= xs
    phi = np.empty_like(X)
    dphi = np.empty_like(X)
    v = np.empty_like(X)
    dv = np.empty_like(X)
    yl = left(raw[lm])
    yl[0] = 1.0 - yl[0]
    yl[1] = -yl[1]
    phi[lm], dphi[lm] = yl
    # V is scaled by 1/B so that V0 ~ x in the matching frame
    v[lm] = np.exp(X[lm]) * yl[0]
    dv[lm] = np.exp(X[lm]) * (yl[0] + yl[1])
    yr = right(raw[~lm]) / B
    v[~lm], dv[~lm] = yr
    phi[~lm] = np.exp(-X[~lm]) * yr[0]
    dphi[~lm] = np.exp(-X[~lm]) * (yr[1] - yr[0])
    A = eps * math.exp(LAM * a)
    # effective secondary decay rate of V - (X + k) over the sampled right tail
    m = (X + k >= 8.0) & (X + k <= 20.0)
    gap = np.abs(v[m] - (X[m] + k))
    omega = -float(np.polyfit(X[m], np.log(gap), 1)[0]) if np.all(gap > 0) else float("nan")
    return WaveProfile(X, phi, dphi, v, dv, k, A, omega, h)
