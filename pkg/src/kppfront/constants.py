"""The universal log t / t shift coefficient and the constants feeding it."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._validation import check_int
from .errors import CrossValidationFailure
from .spectral import SQRT_PI, default_basis, dirichlet_solve, inner_product, phi, psi

LOG2 = math.log(2.0)
MU_STAR = 9.0 / 8.0 * (5.0 - 6.0 * LOG2)
SERIES_EXACT = 0.5 * math.pi * (2.0 * LOG2 - 1.0)
THETA_PSI1_EXACT = 2.0 * LOG2 - 1.0
_TAIL_C = 1.0 / (4.0 * SQRT_PI)


def binomial_series_terms(N: int) -> np.ndarray:
    """Terms t_k = (2k+1)! / (4^k k!^2 (2k-1)^3), k < N, via the term ratio."""
    k = np.arange(N - 1, dtype=float)
    ratio = ((2 * k + 2) * (2 * k + 3) / (4.0 * (k + 1) ** 2)) * ((2 * k - 1) / (2 * k + 1)) ** 3
    return np.concatenate(([-1.0], -np.cumprod(ratio)))


def series_tail(N: int) -> float:
    """Integral comparison for sum_{k >= N} t_k using t_k ~ c k^-5/2 (1 + 15/(8k))."""
    m = N - 0.5
    return _TAIL_C * (2.0 / 3.0 * m ** -1.5 + 0.75 * m ** -2.5)


def sum_binomial_series(N: int = 10**6):
    """Partial sum of the first N terms (compensated) and the tail estimate."""
    N = check_int(N, "N", 10)
    return math.fsum(binomial_series_terms(N)), series_tail(N)


def claim_value(k: int) -> float:
    """Closed form of <phi_0', psi_k>."""
    return (-1) ** k / (SQRT_PI * (2 * k - 1) * math.factorial(k))


def theta_prime_psi1(N: int = 10**6, basis=None):
    """<theta', psi_1> with theta = (L - 1/2)^-1 phi_0'.

    Returns (series value, quadrature value).
    """
    basis = basis or default_basis()
    s, tail = sum_binomial_series(N)
    series = 2.0 / math.pi * (s + tail)
    theta = dirichlet_solve(0.5, phi(0).derivative(), basis)
    quad = inner_product(theta.derivative(), psi(1), basis)
    return series, quad


def theta_coefficients(kmax: int = 8):
    """c_k = <phi_0', psi_k> / (k - 1/2), the eigen-coefficients of theta."""
    return np.array([claim_value(k) / (k - 0.5) for k in range(kmax + 1)])


def arcsin_over_y_integral() -> float:
    """int_0^1 arcsin(y)/y dy, computed as int_0^{pi/2} u cot(u) du."""
    f = lambda u: u / math.tan(u) if u > 0 else 1.0  # noqa: E731
    val, _ = integrate.quad(f, 0.0, 0.5 * math.pi, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def log_cos_integral() -> float:
    """int_{-pi/2}^{pi/2} log cos u du; the endpoint log singularity is handled by quad."""
    val, _ = integrate.quad(lambda u: math.log(math.cos(u)), -0.5 * math.pi, 0.5 * math.pi,
                            epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def mu_from_theta(tp: float) -> float:
    return 9.0 / 4.0 - 27.0 / 8.0 * tp


@dataclass(frozen=True)
class MuReport:
    mu_closed: float
    mu_series: float
    mu_root: float
    theta_prime_psi1: float
    theta_prime_psi1_quad: float
    series_sum: float
    arcsin_integral: float
    term_count: int
    tail_estimate: float

    def discrepancies(self):
        return {
            ("closed", "series"): abs(self.mu_closed - self.mu_series),
            ("closed", "root"): abs(self.mu_closed - self.mu_root),
            ("series", "root"): abs(self.mu_series - self.mu_root),
        }

    def rows(self):
        """(name, value, route, tolerance, passed) tuples."""
        out = [
            ("mu", self.mu_closed, "closed", 0.0, True),
            ("mu", self.mu_series, "series", 1e-5, abs(self.mu_series - self.mu_closed) < 1e-5),
            ("mu", self.mu_root, "solvability", 1e-5, abs(self.mu_root - self.mu_closed) < 1e-5),
            ("theta_prime_psi1", self.theta_prime_psi1, "series", 1e-5,
             abs(self.theta_prime_psi1 - THETA_PSI1_EXACT) < 1e-5),
            ("theta_prime_psi1", self.theta_prime_psi1_quad, "quadrature", 1e-5,
             abs(self.theta_prime_psi1_quad - THETA_PSI1_EXACT) < 1e-5),
            ("binomial_series", self.series_sum, "partial+tail", 1e-8,
             abs(self.series_sum - SERIES_EXACT) < 1e-8),
            ("arcsin_integral", self.arcsin_integral, "quadrature", 1e-10,
             abs(self.arcsin_integral - 0.5 * math.pi * LOG2) < 1e-10),
        ]
        return out


def compute_mu(N: int = 10**6, basis=None, tol: float = 1e-5) -> MuReport:
    from .outer import build_v1_plus, solve_mu_root

    basis = basis or default_basis()
    s, tail = sum_binomial_series(N)
    tp_series, tp_quad = theta_prime_psi1(N, basis)
    root = solve_mu_root(basis, build_v1_plus(basis))
    rep = MuReport(
        mu_closed=MU_STAR,
        mu_series=mu_from_theta(tp_series),
        mu_root=root,
        theta_prime_psi1=tp_series,
        theta_prime_psi1_quad=tp_quad,
        series_sum=s + tail,
        arcsin_integral=arcsin_over_y_integral(),
        term_count=N,
        tail_estimate=tail,
    )
    for (a, b), gap in rep.discrepancies().items():
        if gap >= tol:
            raise CrossValidationFailure(f"mu routes {a} and {b} differ by {gap:.3e}")
    if abs(tp_series - tp_quad) >= tol:
        raise CrossValidationFailure(f"<theta', psi_1> series and quadrature differ by {abs(tp_series - tp_quad):.3e}")
    return rep
