"""First inner correction V1- and the t^-1 profile correction psi = e^-X V1-.

All grids here use the matching frame x = X + k of :mod:`kppfront.wave`, in
which V0-(x) = x + o(1).  V1- solves

    -V'' + 2 phi(x - k) V = (3/2) (V0 - V0'),

decays as x -> -inf, and grows like -x^3/4 + 3x^2/4 + C1 x with no constant
term as x -> +inf.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.sparse.linalg import spsolve

from ._validation import check_real
from .errors import DomainError, SingularSystem
from .wave import LAM, WaveProfile

TAIL_FIT = (30.0, 40.0)


def tail_poly(x):
    x = np.asarray(x, dtype=float)
    return -0.25 * x ** 3 + 0.75 * x ** 2


def tail_poly_prime(x):
    x = np.asarray(x, dtype=float)
    return -0.75 * x ** 2 + 1.5 * x


def _d1_4th(f, h):
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[:2] = (-25 * f[:2] + 48 * f[1:3] - 36 * f[2:4] + 16 * f[3:5] - 3 * f[4:6]) / (12 * h)
    d[-2:] = (25 * f[-2:] - 48 * f[-3:-1] + 36 * f[-4:-2] - 16 * f[-5:-3] + 3 * f[-6:-4]) / (12 * h)
    return d


def fit_tail(x, v, window=TAIL_FIT):
    """Least-squares (p3, p2, p1, p0) of v against {x^3, x^2, x, 1} on the window."""
    m = (x >= window[0]) & (x <= window[1])
    if m.sum() < 8:
        raise DomainError(f"tail window {window} not covered by the grid")
    xs = x[m] / window[1]
    coef = np.polyfit(xs, v[m], 3)
    scale = window[1] ** np.arange(3, -1, -1)
    return tuple(float(c) for c in coef / scale)


@dataclass(frozen=True, eq=False)
class InnerTerm:
    x: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    dv: np.ndarray = field(repr=False)
    C1_minus: float
    tail: tuple
    profile: WaveProfile = field(repr=False)

    def __post_init__(self):
        q = 2.0 * self.profile(self.x - self.profile.k)
        d2 = q * self.v - self.source(self.x)
        object.__setattr__(self, "_v", CubicHermiteSpline(self.x, self.v, self.dv))
        object.__setattr__(self, "_dv", CubicHermiteSpline(self.x, self.dv, d2))

    @property
    def h(self):
        return float(self.x[1] - self.x[0])

    def source(self, x):
        """(3/2)(V0 - V0') = -(3/2) e^X phi'(X)."""
        X = np.asarray(x, dtype=float) - self.profile.k
        return -1.5 * np.exp(X) * self.profile(X, 1)

    def __call__(self, x, deriv=0):
        """V1- (or its slope); beyond the grid the exact tail forms are used."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.x[0], self.x[-1]
        inside = np.clip(x, lo, hi)
        if deriv == 0:
            val = self._v(inside)
            right = tail_poly(x) + self.C1_minus * x
        else:
            val = self._dv(inside)
            right = tail_poly_prime(x) + self.C1_minus
        val = np.where(x > hi, right, val)
        return np.where(x < lo, 0.0, val)

    def residual(self, lo=None, hi=None):
        """sup |-V'' + 2 phi V - source| with V'' from 4th-order differences of V'."""
        d2 = _d1_4th(self.dv, self.h)
        q = 2.0 * self.profile(self.x - self.profile.k)
        r = np.abs(-d2 + q * self.v - self.source(self.x))
        m = np.ones_like(self.x, dtype=bool)
        m[:3] = m[-3:] = False
        if lo is not None:
            m &= self.x >= lo
        if hi is not None:
            m &= self.x <= hi
        return float(r[m].max())


def _numerov_system(x, q, g):
    """Rows of the Numerov scheme for V'' = q V + g at interior nodes."""
    h2 = (x[1] - x[0]) ** 2
    a = 1.0 - h2 * q / 12.0
    b = -2.0 * (1.0 + 5.0 * h2 * q / 12.0)
    rhs = h2 / 12.0 * (g[2:] + 10.0 * g[1:-1] + g[:-2])
    return a, b, rhs


def solve_inner(profile: WaveProfile, x_lo: float = -30.0, x_hi: float = 55.0, h: float = 0.01,
                tail_window=TAIL_FIT) -> InnerTerm:
    """Numerov discretisation with C1 as an extra unknown.

    Left: V(x_lo) = 0 (the decaying solution is O(x e^{sqrt2 x}) there).
    Right: V = P + C1 x at the last two nodes, which pins both the slope and
    the zero constant term.
    """
    x_lo = check_real(x_lo, "x_lo", hi=-15.0)
    x_hi = check_real(x_hi, "x_hi", lo=tail_window[1] + 5.0)
    if x_lo - profile.k < profile.x_lo or x_hi - profile.k > profile.x_hi:
        raise DomainError("wave profile does not cover the requested inner window")
    n = int(round((x_hi - x_lo) / h))
    x = x_lo + h * np.arange(n + 1)
    X = x - profile.k
    q = 2.0 * profile(X)
    g = 1.5 * np.exp(X) * profile(X, 1)  # V'' = qV + g
    a, b, rhs = _numerov_system(x, q, g)
    N = n + 1
    rows, cols, vals = [0], [0], [1.0]
    i = np.arange(1, n)
    rows += list(np.repeat(i, 3))
    cols += list(np.stack([i - 1, i, i + 1], 1).ravel())
    vals += list(np.stack([a[:-2], b[1:-1], a[2:]], 1).ravel())
    for node, row in ((n - 1, N), (n, n)):
        rows += [row, row]
        cols += [node, N]
        vals += [1.0, -x[node]]
    # the Numerov row at n-1 is kept; node n's own row is the last tail condition
    mat = sparse.csr_matrix((vals, (rows, cols)), shape=(N + 1, N + 1))
    f = np.zeros(N + 1)
    f[1:n] = rhs
    f[n] = tail_poly(x[n])
    f[N] = tail_poly(x[n - 1])
    sol = spsolve(mat.tocsc(), f)
    if not np.all(np.isfinite(sol)):
        raise SingularSystem("inner boundary-value matrix is singular")
    v, C1 = sol[:N], float(sol[N])
    dv = _d1_4th(v, h)
    return InnerTerm(x, v, dv, C1, fit_tail(x, v, tail_window), profile)


def solve_inner_shooting(profile: WaveProfile, x_start: float = -25.0, x_end: float = 42.0,
                         window=(28.0, 38.0)):
    """Oracle: any left-decaying solution, then remove the constant with V_ring.

    Returns (C1_minus, callable V1-).
    """
    k = profile.k
    X0 = x_start - k
    s2 = math.sqrt(2.0)
    c = -3.0 * profile.A * LAM / (4.0 * s2)
    y0 = [c * X0 * math.exp(s2 * X0), c * (1.0 + s2 * X0) * math.exp(s2 * X0)]

    def rhs(x, y):
        X = x - k
        return [y[1], 2.0 * float(profile(X)) * y[0] + 1.5 * math.exp(X) * float(profile(X, 1))]

    sol = solve_ivp(rhs, [x_start, x_end], y0, method="DOP853", rtol=1e-12, atol=1e-14, dense_output=True)
    xs = np.linspace(*window, 401)
    p3, p2, C1, C0 = fit_tail(xs, sol.sol(xs)[0], window)

    def v1(x):
        x = np.asarray(x, dtype=float)
        return sol.sol(x)[0] - C0 * profile.v_ring(x)

    return C1 + C0, v1


def psi_profile(inner: InnerTerm, X=None):
    """(X, psi(X), psi'(X)) with psi = e^-X V1-(X + k) in the profile frame."""
    k = inner.profile.k
    if X is None:
        X = inner.x - k
    X = np.asarray(X, dtype=float)
    v = inner(X + k)
    dv = inner(X + k, 1)
    e = np.exp(-X)
    return X, e * v, e * (dv - v)


def psi_residual(inner: InnerTerm, lo=-10.0, hi=15.0):
    """sup |psi'' + 2 psi' + (1 - 2 phi) psi - (3/2) phi'| on [lo, hi] (profile frame)."""
    prof = inner.profile
    X = np.arange(lo, hi + 1e-12, inner.h)
    _, p, dp = psi_profile(inner, X)
    d2 = _d1_4th(dp, inner.h)
    ph = prof(X)
    r = d2 + 2 * dp + (1 - 2 * ph) * p - 1.5 * prof(X, 1)
    return float(np.abs(r[3:-3]).max())


def shifted_inner(inner: InnerTerm, zeta: float, t: float, x):
    """V0-(x + zeta) + V1-(x + zeta)/t."""
    if abs(zeta) >= 1.0:
        raise ValueError("|zeta| must be below 1")
    y = np.asarray(x, dtype=float) + zeta
    prof = inner.profile
    if np.any(y - prof.k > prof.x_hi) or np.any(y - prof.k < prof.x_lo):
        raise DomainError("shift moves evaluation outside the stored window")
    return prof.v0_minus(y) + inner(y) / t
