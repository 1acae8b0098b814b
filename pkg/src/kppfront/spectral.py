"""Half-line eigen-calculus for L = -d^2 - (eta/2) d - 1 with a Dirichlet condition at 0.

Scaled Hermite polynomials H_n = (eta - 2 d)^n 1 generate everything:

    phi_k = 4^-k H_{2k+1} exp(-eta^2/4)     L phi_k = k phi_k
    psi_k = H_{2k+1} / (2 sqrt(pi) (2k+1)!)  L* psi_k = k psi_k

and <phi_i, psi_j> = delta_ij on [0, inf).  Functions on the half-line are
carried by :class:`HalfLineFunction`, a sum of three exactly differentiable
parts: a Hermite-function series, a Hermite-polynomial series and a Chebyshev
series on [0, eta_max].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as cheb
from numpy.polynomial.legendre import leggauss

from ._validation import check_int, check_real
from .errors import DomainError, QuadratureError, SingularSystem, SolvabilityViolation

SQRT_PI = math.sqrt(math.pi)
GL_ORDER = 20


# ---------------------------------------------------------------- polynomials

@dataclass(frozen=True)
class HermitePoly:
    """H_n with exact integer monomial coefficients, lowest degree first."""

    degree: int
    coeffs: tuple

    def __call__(self, eta):
        if isinstance(eta, int):
            acc = 0
            for c in reversed(self.coeffs):
                acc = acc * eta + c
            return acc
        return hermite_table(self.degree, eta)[self.degree]

    def derivative_coeffs(self):
        return tuple(k * c for k, c in enumerate(self.coeffs))[1:]

    def at_zero(self):
        return self.coeffs[0]


@lru_cache(maxsize=None)
def hermite(n: int) -> HermitePoly:
    """Return H_n built from H_{n+1} = eta H_n - 2 H_n'."""
    n = check_int(n, "n", 0)
    if n == 0:
        return HermitePoly(0, (1,))
    prev = hermite(n - 1).coeffs
    new = [0] * (n + 1)
    for k, c in enumerate(prev):
        new[k + 1] += c
        if k >= 1:
            new[k - 1] -= 2 * k * c
    return HermitePoly(n, tuple(new))


def hermite_at_zero_formula(n: int) -> int:
    """Closed form of H_n(0): zero for odd n, (-1)^k 2^k (2k-1)!! for n = 2k."""
    if n % 2:
        return 0
    k = n // 2
    dfact = 1
    for j in range(1, 2 * k, 2):
        dfact *= j
    return (-1) ** k * 2 ** k * dfact


def hermite_table(nmax: int, eta) -> np.ndarray:
    """Values of H_0..H_nmax at eta by the three-term recurrence."""
    eta = np.asarray(eta, dtype=float)
    out = np.empty((nmax + 1,) + eta.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = eta
    for n in range(1, nmax):
        out[n + 1] = eta * out[n] - 2.0 * n * out[n - 1]
    return out


def hermite_function_table(nmax: int, eta) -> np.ndarray:
    """Values of g_n = H_n exp(-eta^2/4) for n = 0..nmax."""
    eta = np.asarray(eta, dtype=float)
    out = np.empty((nmax + 1,) + eta.shape)
    out[0] = np.exp(-0.25 * eta * eta)
    if nmax >= 1:
        out[1] = eta * out[0]
    for n in range(1, nmax):
        out[n + 1] = eta * out[n] - 2.0 * n * out[n - 1]
    return out


# ------------------------------------------------------------------ functions

def _trim(a):
    if a is None:
        return None
    a = np.asarray(a, dtype=float)
    return a if a.size and np.any(a != 0.0) else None


def _pad_add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    n = max(a.size, b.size)
    out = np.zeros(n)
    out[: a.size] += a
    out[: b.size] += b
    return out


@dataclass(frozen=True, eq=False)
class HalfLineFunction:
    """f = sum a_n g_n + sum b_n H_n + Chebyshev series on [0, eta_max].

    ``gauss`` holds a_n, ``poly`` holds b_n and ``cheb`` holds coefficients in
    the variable s = 2 eta / eta_max - 1.  The Chebyshev part is extended by
    zero beyond eta_max (it only carries Dirichlet solutions there).
    """

    gauss: np.ndarray | None = None
    poly: np.ndarray | None = None
    cheb: np.ndarray | None = None
    eta_max: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "gauss", _trim(self.gauss))
        object.__setattr__(self, "poly", _trim(self.poly))
        object.__setattr__(self, "cheb", _trim(self.cheb))
        if self.cheb is not None and self.eta_max is None:
            raise ValueError("a Chebyshev part needs eta_max")

    # constructors
    @classmethod
    def from_eigen(cls, coeffs):
        """sum_k c_k phi_k."""
        c = np.asarray(coeffs, dtype=float)
        a = np.zeros(2 * c.size + 1)
        a[1::2] = c * 4.0 ** -np.arange(c.size)
        return cls(gauss=a)

    @classmethod
    def from_samples(cls, values, eta_max):
        """Interpolate samples taken at :func:`cheb_nodes` (n = len - 1)."""
        values = np.asarray(values, dtype=float)
        n = values.size - 1
        s = np.cos(np.pi * np.arange(n + 1) / n)
        coeffs = np.linalg.solve(cheb.chebvander(s, n), values)
        return cls(cheb=coeffs, eta_max=float(eta_max))

    @classmethod
    def zero(cls):
        return cls()

    # algebra
    def __add__(self, other):
        if not isinstance(other, HalfLineFunction):
            return NotImplemented
        if self.cheb is not None and other.cheb is not None and self.eta_max != other.eta_max:
            raise DomainError("Chebyshev parts live on different intervals")
        return HalfLineFunction(
            _pad_add(self.gauss, other.gauss),
            _pad_add(self.poly, other.poly),
            _pad_add(self.cheb, other.cheb),
            self.eta_max if self.cheb is not None else other.eta_max,
        )

    def __mul__(self, scalar):
        scalar = float(scalar)
        scale = lambda a: None if a is None else a * scalar  # noqa: E731
        return HalfLineFunction(scale(self.gauss), scale(self.poly), scale(self.cheb), self.eta_max)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    @property
    def decays(self):
        return self.poly is None

    def derivative(self, order=1):
        f = self
        for _ in range(order):
            g = p = c = None
            if f.gauss is not None:
                g = np.zeros(f.gauss.size + 1)
                g[1:] = -0.5 * f.gauss
            if f.poly is not None and f.poly.size > 1:
                p = f.poly[1:] * np.arange(1, f.poly.size)
            if f.cheb is not None:
                c = cheb.chebder(f.cheb) * (2.0 / f.eta_max)
            f = HalfLineFunction(g, p, c, f.eta_max)
        return f

    def __call__(self, eta, deriv=0):
        if deriv:
            return self.derivative(deriv)(eta)
        eta = np.asarray(eta, dtype=float)
        if np.any(eta < 0):
            raise DomainError("half-line functions are defined for eta >= 0 only")
        out = np.zeros(eta.shape)
        if self.gauss is not None:
            out += np.tensordot(self.gauss, hermite_function_table(self.gauss.size - 1, eta), 1)
        if self.poly is not None:
            out += np.tensordot(self.poly, hermite_table(self.poly.size - 1, eta), 1)
        if self.cheb is not None:
            inside = eta <= self.eta_max
            s = 2.0 * np.where(inside, eta, 0.0) / self.eta_max - 1.0
            out += np.where(inside, cheb.chebval(s, self.cheb), 0.0)
        return out if out.ndim else float(out)

    def boundary(self):
        """(f(0), f'(0))."""
        return self(0.0), self(0.0, 1)

    def eigen_coefficients(self, basis):
        """Projections <f, psi_k> for k < K."""
        return np.array([inner_product(self, basis.psi(k), basis) for k in range(basis.K)])


def phi(k: int) -> HalfLineFunction:
    a = np.zeros(2 * k + 2)
    a[2 * k + 1] = 4.0 ** -k
    return HalfLineFunction(gauss=a)


def psi(k: int) -> HalfLineFunction:
    b = np.zeros(2 * k + 2)
    b[2 * k + 1] = 1.0 / (2.0 * SQRT_PI * math.factorial(2 * k + 1))
    return HalfLineFunction(poly=b)


def apply_operator(f: HalfLineFunction, eta, lam=0.0):
    """(L - lam) f at eta, with exact derivatives."""
    eta = np.asarray(eta, dtype=float)
    return -f(eta, 2) - 0.5 * eta * f(eta, 1) - (1.0 + lam) * f(eta)


# ---------------------------------------------------------------- quadrature

def composite_gauss_legendre(a, b, n_panels, order=GL_ORDER):
    x, w = leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    K: int
    eta_max: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    phi_table: np.ndarray = field(repr=False)
    psi_table: np.ndarray = field(repr=False)
    biorthogonality_error: float = 0.0
    eigen_residual: float = 0.0

    def phi(self, k):
        self._check_mode(k)
        return phi(k)

    def psi(self, k):
        self._check_mode(k)
        return psi(k)

    def _check_mode(self, k):
        if not 0 <= k < self.K:
            raise IndexError(f"mode {k} outside 0..{self.K - 1}")

    def integrate(self, values):
        return float(np.dot(self.weights, values))

    def gram(self):
        return (self.phi_table * self.weights) @ self.psi_table.T


def build_basis(K: int = 8, eta_max: float = 19.0, n_quad: int = 800, tol: float = 1e-10) -> SpectralBasis:
    """Eigen-system with composite Gauss-Legendre quadrature on [0, eta_max]."""
    K = check_int(K, "K", 2)
    eta_max = check_real(eta_max, "eta_max", 0.0, lo_open=True)
    n_quad = check_int(n_quad, "n_quad", GL_ORDER)
    if math.exp(-eta_max ** 2 / 8) >= 1e-18:
        raise ValueError(f"eta_max={eta_max} too small: need exp(-eta_max^2/8) < 1e-18")
    nodes, weights = composite_gauss_legendre(0.0, eta_max, -(-n_quad // GL_ORDER))
    phis = np.array([phi(k)(nodes) for k in range(K)])
    psis = np.array([psi(k)(nodes) for k in range(K)])
    gram = (phis * weights) @ psis.T
    err = float(np.max(np.abs(gram - np.eye(K))))
    if err > tol:
        raise QuadratureError(f"biorthogonality error {err:.2e} exceeds {tol:.0e}; refine quadrature")
    res = max(float(np.max(np.abs(apply_operator(phi(k), nodes, k)))) for k in range(K))
    return SpectralBasis(K, eta_max, nodes, weights, phis, psis, err, res)


@lru_cache(maxsize=4)
def default_basis(K: int = 8) -> SpectralBasis:
    return build_basis(K)


def inner_product(f: HalfLineFunction, g: HalfLineFunction, basis: SpectralBasis | None = None) -> float:
    """Integral of f g over [0, inf), truncated at the quadrature end eta_max."""
    basis = basis or default_basis()
    for h in (f, g):
        if h.cheb is not None and abs(h.eta_max - basis.eta_max) > 1e-12:
            raise DomainError(
                f"function lives on [0, {h.eta_max}] but quadrature covers [0, {basis.eta_max}]")
    if not (f.decays or g.decays):
        raise DomainError("product of two polynomial parts is not integrable on the half-line")
    return basis.integrate(f(basis.nodes) * g(basis.nodes))


def weighted_distance(f, g, eta_w: float = 10.0, n_panels: int = 40) -> float:
    """sqrt(int_0^eta_w (f-g)^2 exp(eta^2/4)), the norm in which L is self-adjoint.

    Cut at eta_w because Chebyshev round-off near eta_max would swamp the weight.
    """
    x, w = composite_gauss_legendre(0.0, eta_w, n_panels)
    d = f(x) - g(x)
    return math.sqrt(float(np.dot(w, d * d * np.exp(0.25 * x * x))))


# ------------------------------------------------------------ resolvent solves

def cheb_nodes(n, eta_max):
    s = np.cos(np.pi * np.arange(n + 1) / n)
    return s, 0.5 * eta_max * (s + 1.0)


@lru_cache(maxsize=8)
def _cheb_matrices(n, eta_max):
    s, eta = cheb_nodes(n, eta_max)
    c = np.ones(n + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n + 1)
    ds = s[:, None] - s[None, :]
    d = np.outer(c, 1.0 / c) / (ds + np.eye(n + 1))
    d -= np.diag(d.sum(axis=1))
    d *= 2.0 / eta_max
    # Clenshaw-Curtis weights from the integral of each cardinal function
    vander = cheb.chebvander(s, n)
    t_int = np.array([cheb.chebval(1.0, cheb.chebint(np.eye(n + 1)[j], lbnd=-1)) for j in range(n + 1)])
    w = np.linalg.solve(vander.T, t_int) * (0.5 * eta_max)
    return eta, d, d @ d, w


def _integer_mode(lam, K):
    k = round(lam)
    if abs(lam - k) < 1e-12 and 0 <= k:
        if k >= K:
            raise ValueError(f"lambda={lam} is an eigenvalue beyond the retained modes")
        return int(k)
    return None


def dirichlet_solve(lam, f: HalfLineFunction, basis: SpectralBasis | None = None,
                    backend: str = "bvp", tol: float = 1e-8, n_cheb: int = 160) -> HalfLineFunction:
    """Solve (L - lam) V = f with V(0) = V(inf) = 0.

    At an eigenvalue lam = k the right side must be orthogonal to psi_k;
    the returned V then has no phi_k component.
    """
    basis = basis or default_basis()
    lam = check_real(lam, "lam")
    k0 = _integer_mode(lam, basis.K)
    if k0 is not None:
        proj = inner_product(f, basis.psi(k0), basis)
        if abs(proj) > tol:
            raise SolvabilityViolation(f"<f, psi_{k0}> = {proj:.3e} exceeds {tol:.0e} at lambda = {k0}")
    if backend == "eigen":
        c = f.eigen_coefficients(basis)
        ks = np.arange(basis.K, dtype=float)
        denom = ks - lam
        if k0 is not None:
            denom[k0] = np.inf
        return HalfLineFunction.from_eigen(c / denom)
    if backend != "bvp":
        raise ValueError(f"unknown backend {backend!r}")

    n = check_int(n_cheb, "n_cheb", 16)
    eta, d1, d2, w = _cheb_matrices(n, basis.eta_max)
    a = -d2 - 0.5 * eta[:, None] * d1 - (1.0 + lam) * np.eye(n + 1)
    rhs = np.asarray(f(eta), dtype=float).copy()
    for row in (0, n):
        a[row] = 0.0
        a[row, row] = 1.0
        rhs[row] = 0.0
    if k0 is not None:
        border = basis.phi(k0)(eta)
        border[[0, n]] = 0.0
        big = np.zeros((n + 2, n + 2))
        big[: n + 1, : n + 1] = a
        big[: n + 1, n + 1] = border
        big[n + 1, : n + 1] = w * basis.psi(k0)(eta)
        a, rhs = big, np.append(rhs, 0.0)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularSystem(f"collocation matrix condition number {cond:.2e}")
    sol = np.linalg.solve(a, rhs)[: n + 1]
    return HalfLineFunction.from_samples(sol, basis.eta_max)


def operator_residual(v: HalfLineFunction, lam, f: HalfLineFunction, basis: SpectralBasis | None = None,
                      project_out: int | None = None) -> float:
    """sup over quadrature nodes of |(L - lam) V - f|, optionally up to a phi_k multiple."""
    basis = basis or default_basis()
    r = apply_operator(v, basis.nodes, lam) - f(basis.nodes)
    if project_out is not None:
        r = r + inner_product(f, basis.psi(project_out), basis) * basis.phi_table[project_out]
    return float(np.max(np.abs(r)))
