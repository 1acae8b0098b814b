"""Outer (diffusive-scale) expansion V+ = sqrt(t) V0 + V1 + log(t)/sqrt(t) V2 + V3/sqrt(t).

Each term solves a Dirichlet problem for L on the half-line.  The log t / t
shift coefficient mu is the value that makes the V3 equation solvable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DegenerateSlope, SolvabilityViolation
from .spectral import SQRT_PI, HalfLineFunction, default_basis, dirichlet_solve, inner_product, phi, psi

HALF = Fraction(1, 2)


@dataclass(frozen=True, eq=False)
class OuterTerm:
    label: str
    function: HalfLineFunction
    eigen: tuple | None = None

    def __call__(self, eta, deriv=0):
        return self.function(eta, deriv)

    def derivative_at_zero(self, order=1):
        return float(self.function(0.0, order))

    @property
    def bc(self):
        return {f"d{k}": self.derivative_at_zero(k) for k in range(4)}


def build_v0_plus() -> OuterTerm:
    return OuterTerm("V0+", phi(0), (1.0,))


def build_v1_plus(basis=None) -> OuterTerm:
    """(L - 1/2) V1 = -(3/2) phi_0' - (3 sqrt(pi)/2) phi_0."""
    basis = basis or default_basis()
    rhs = -1.5 * phi(0).derivative() - 1.5 * SQRT_PI * phi(0)
    return OuterTerm("V1+", dirichlet_solve(0.5, rhs, basis))


def build_v2_plus(mu: float) -> OuterTerm:
    f = -float(mu) * (phi(0) + (2.0 / 3.0) * phi(1))
    return OuterTerm("V2+", f, (-float(mu), -2.0 / 3.0 * float(mu)))


def v3_source(mu, basis, v1plus, phi0p_psi1=None):
    """Right side G of (L - 1) V3 = G + alpha_1 phi_0, without the alpha_1 part."""
    v1 = v1plus.function
    return (2.0 / 3.0 * mu) * phi(1) - 1.5 * v1.derivative() - 1.5 * SQRT_PI * v1 + 1.5 * SQRT_PI * phi(0).derivative()


def solvability_residual(mu: float, basis=None, v1plus: OuterTerm | None = None, phi0p_psi1: float | None = None) -> float:
    """<G(mu), psi_1>; zero exactly at the universal mu.

    ``phi0p_psi1`` substitutes a known value for <phi_0', psi_1>.
    """
    basis = basis or default_basis()
    v1plus = v1plus or build_v1_plus(basis)
    p1 = psi(1)
    v1 = v1plus.function
    d0 = inner_product(phi(0).derivative(), p1, basis) if phi0p_psi1 is None else phi0p_psi1
    return (2.0 / 3.0 * mu * inner_product(phi(1), p1, basis)
            - 1.5 * inner_product(v1.derivative(), p1, basis)
            - 1.5 * SQRT_PI * inner_product(v1, p1, basis)
            + 1.5 * SQRT_PI * d0)


def solve_mu_root(basis=None, v1plus: OuterTerm | None = None, phi0p_psi1: float | None = None) -> float:
    basis = basis or default_basis()
    v1plus = v1plus or build_v1_plus(basis)
    r0 = solvability_residual(0.0, basis, v1plus, phi0p_psi1)
    slope = solvability_residual(1.0, basis, v1plus, phi0p_psi1) - r0
    if abs(slope - 2.0 / 3.0) > 1e-6:
        raise DegenerateSlope(f"solvability slope {slope:.10f} differs from 2/3")
    return -r0 / slope


def build_v3_plus(mu: float, alpha1: float = 0.0, q3: float = 0.0, basis=None,
                  v1plus: OuterTerm | None = None, tol: float = 1e-5) -> OuterTerm:
    """V3 = V3bar - alpha_1 phi_0 + q_3 phi_1, with V3bar free of phi_1."""
    basis = basis or default_basis()
    v1plus = v1plus or build_v1_plus(basis)
    res = solvability_residual(mu, basis, v1plus)
    if abs(res) > tol:
        raise SolvabilityViolation(f"mu = {mu} leaves solvability residual {res:.3e}")
    bar = dirichlet_solve(1.0, v3_source(mu, basis, v1plus), basis, tol=tol)
    return OuterTerm("V3+", bar - alpha1 * phi(0) + q3 * phi(1))


def v3bar_prime_at_zero(mu, basis=None, v1plus=None) -> float:
    return build_v3_plus(mu, 0.0, 0.0, basis, v1plus).derivative_at_zero()


# ----------------------------------------------------------------- index sets

def in_omega_minus(a, b) -> bool:
    a, b = Fraction(a), Fraction(b)
    if a.denominator not in (1, 2) or b.denominator != 1:
        return False
    return (a, b) == (0, 0) or (a >= 1 and 0 <= b <= a - 1)


def in_omega_plus(a, b) -> bool:
    a, b = Fraction(a), Fraction(b)
    if a.denominator not in (1, 2) or b.denominator != 1:
        return False
    return a >= 0 and 0 <= b <= a


# (0, 1) carries the -3/2 log t delay; it is listed here alongside (-1, 0) and (1, 1)
OMEGA_SIGMA_EXTRA = {(Fraction(-1), Fraction(0)), (Fraction(0), Fraction(1)), (Fraction(1), Fraction(1))}


def in_omega_sigma(a, b) -> bool:
    return (Fraction(a), Fraction(b)) in OMEGA_SIGMA_EXTRA or in_omega_plus(a, b)


@dataclass
class ExpansionLedger:
    """Shift coefficients sigma_{a,b} (order t^-a log^b t) and term keys for V-, V+."""

    mu: float
    alpha0: float = 0.0
    alpha1: float = 0.0
    q3: float = 0.0
    C1_minus: float | None = None
    v3bar_prime0: float | None = None
    minus_keys: tuple = ((0, 0), (1, 0))
    plus_keys: tuple = ((0, 0), (HALF, 0), (1, 1), (1, 0))
    sigma: dict = field(init=False)

    def __post_init__(self):
        self.sigma = {
            (-1, 0): 2.0,
            (0, 1): -1.5,
            (0, 0): self.alpha0,
            (HALF, 0): -3.0 * SQRT_PI,
            (1, 1): self.mu,
            (1, 0): self.alpha1,
        }

    def set(self, **kw):
        for k, v in kw.items():
            setattr(self, k, v)
        self.__post_init__()
        return self

    def shift(self, t):
        """sigma(t) summed over the stored coefficients."""
        t = np.asarray(t, dtype=float)
        lt = np.log(t)
        return sum(c * t ** (-float(a)) * lt ** b for (a, b), c in self.sigma.items())

    def shift_rate(self, t):
        t = np.asarray(t, dtype=float)
        lt = np.log(t)
        out = np.zeros_like(t)
        for (a, b), c in self.sigma.items():
            a = float(a)
            term = -a * t ** (-a - 1) * lt ** b
            if b:
                term = term + b * t ** (-a - 1) * lt ** (b - 1)
            out = out + c * term
        return out

    def balance_residual(self):
        if None in (self.C1_minus, self.v3bar_prime0):
            return None
        return self.C1_minus - (self.v3bar_prime0 - self.alpha1 - 1.5 * self.q3)


def balance_alpha1(ledger: ExpansionLedger, C1_minus: float, q3: float) -> float:
    if ledger.v3bar_prime0 is None:
        raise ValueError("ledger has no V3bar'(0); build V3+ first")
    return ledger.v3bar_prime0 - 1.5 * q3 - C1_minus


def balance_q3(ledger: ExpansionLedger, C1_minus: float, alpha1: float) -> float:
    """The same balance solved for q_3 when alpha_1 is known from data."""
    if ledger.v3bar_prime0 is None:
        raise ValueError("ledger has no V3bar'(0); build V3+ first")
    return (ledger.v3bar_prime0 - alpha1 - C1_minus) / 1.5


EXPECTED_LOW_ORDER = {(-1, 0): 2.0, (0, 1): -1.5, (HALF, 0): -3.0 * SQRT_PI}


def validate_omega(ledger: ExpansionLedger):
    """Keys violating their index-set predicate, plus mismatched low-order values."""
    bad = []
    for a, b in ledger.minus_keys:
        if not in_omega_minus(a, b):
            bad.append(("minus", (a, b)))
    for a, b in ledger.plus_keys:
        if not in_omega_plus(a, b):
            bad.append(("plus", (a, b)))
    for a, b in ledger.sigma:
        if not in_omega_sigma(a, b):
            bad.append(("sigma", (a, b)))
    for key, val in EXPECTED_LOW_ORDER.items():
        if not math.isclose(ledger.sigma.get(key, math.nan), val, rel_tol=0, abs_tol=1e-15):
            bad.append(("value", key))
    for key, name in (((0, 0), "alpha0"), ((1, 1), "mu"), ((1, 0), "alpha1")):
        if ledger.sigma.get(key) != getattr(ledger, name):
            bad.append(("value", key))
    return bad
