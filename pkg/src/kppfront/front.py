"""Glued approximate solution, front-shift fitting, and PDE comparisons.

Coordinates: X is measured from sigma(t) in the profile frame of
:mod:`kppfront.wave`; x = X + k is the matching frame in which the inner and
outer expansions meet at x = t^eps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_increasing, check_level, check_real
from .errors import DomainError, IllConditioned
from .inner import InnerTerm, psi_profile
from .outer import ExpansionLedger, build_v0_plus
from .spectral import SQRT_PI

B_STAR = -3.0 * SQRT_PI


# ------------------------------------------------------------------- gluing

def glue_phi(t, eps, x):
    """Green's function of -f'' + f = delta(x - t^eps) on x >= 0 with f(0) = f(inf) = 0."""
    return _glue(t ** eps, x)


def glue_phi_prime(t, eps, x):
    return _glue_prime(t ** eps, x)


def _glue(m, x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("glue_phi is defined for x >= 0")
    return np.where(x <= m, math.exp(-m) * np.sinh(np.minimum(x, m)), math.sinh(m) * np.exp(-np.maximum(x, m)))


def _glue_prime(m, x):
    x = np.asarray(x, dtype=float)
    return np.where(x <= m, math.exp(-m) * np.cosh(np.minimum(x, m)), -math.sinh(m) * np.exp(-np.maximum(x, m)))


def bump(y):
    """Smooth cutoff with bump(1) = 1 supported on (0, 2)."""
    y = np.asarray(y, dtype=float)
    z = 1.0 - (y - 1.0) ** 2
    inside = z > 0
    return np.where(inside, np.exp(1.0 - 1.0 / np.where(inside, z, 1.0)), 0.0)


def bump_prime(y):
    y = np.asarray(y, dtype=float)
    z = 1.0 - (y - 1.0) ** 2
    inside = z > 0
    zs = np.where(inside, z, 1.0)
    return np.where(inside, bump(y) * (-2.0 * (y - 1.0)) / zs ** 2, 0.0)


@dataclass(frozen=True, eq=False)
class GluedApprox:
    """V_app at one time t, matching frame; u_app = e^-X V_app with X = x - k."""

    t: float
    eps: float
    ledger: ExpansionLedger
    inner: InnerTerm = field(repr=False)
    outer: tuple = field(repr=False)  # (V0+, V1+, V2+, V3+)
    zeta: float = 0.0
    K: float = 0.0
    match: float = 0.0

    @property
    def k(self):
        return self.inner.profile.k

    def v_minus(self, x, deriv=0):
        y = np.asarray(x, dtype=float) + self.zeta
        prof = self.inner.profile
        return prof.v0_minus(y, deriv) + self.inner(y, deriv) / self.t

    def v_plus(self, x, deriv=0):
        return outer_value(self.outer, self.t, x, deriv)

    def corrector(self, x, deriv=0):
        m = self.match
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        if deriv == 0:
            return self.K * bump(x / m) * _glue(m, x)
        return self.K * (bump_prime(x / m) / m * _glue(m, x) + bump(x / m) * _glue_prime(m, x))

    def v_app(self, x, deriv=0, corrected=True):
        x = np.asarray(x, dtype=float)
        left = x < self.match
        out = np.empty(x.shape)
        if np.any(left):
            out[left] = self.v_minus(x[left], deriv)
        if np.any(~left):
            out[~left] = self.v_plus(x[~left], deriv)
        if corrected:
            out = out + np.where(x > 0, self.corrector(x, deriv), 0.0)
        return out

    def u_app(self, X):
        """u_app at profile-frame offsets X from sigma(t)."""
        X = np.asarray(X, dtype=float)
        return np.exp(-X) * self.v_app(X + self.k)

    def jumps(self, corrected=True):
        """(value jump, derivative jump) as left limit minus right limit at t^eps."""
        m = self.match
        dv = float(self.v_minus(m) - self.v_plus(m))
        dd = float(self.v_minus(m, 1) - self.v_plus(m, 1))
        if corrected:
            # one-sided slopes of K bump(x/m) glue_phi(x) at m; bump'(1) = 0 and bump(1) = 1
            e = math.exp(-m)
            dd += self.K * (e * math.cosh(m) + math.sinh(m) * e)
        return dv, dd


def outer_value(outer, t, x, deriv=0):
    """sqrt(t) V0 + V1 + log(t)/sqrt(t) V2 + V3/sqrt(t) at eta = x / sqrt(t)."""
    v0, v1, v2, v3 = outer
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("outer expansion is defined for x >= 0")
    st = math.sqrt(t)
    eta = x / st
    coeffs = (st, 1.0, math.log(t) / st, 1.0 / st)
    scale = st ** -deriv
    return scale * sum(c * f(eta, deriv) for c, f in zip(coeffs, (v0, v1, v2, v3)))


def _overlap_point(inner: InnerTerm, outer, t: float):
    """Match point inside the true overlap of V- and V+ at this t.

    The mismatch has an exponentially small inner part |V0-(x) - x| and an
    algebraic part from the truncated series; we take the sign change of
    V- - V+ where their sum is smallest, or the minimiser if there is none.
    """
    prof = inner.profile
    hi = min(max(3.0 * t ** 0.25, 4.0), inner.x[-1] - 1.0, prof.x_hi + prof.k - 1.0)
    x = np.linspace(1.0, hi, 2000)
    gap = prof.v0_minus(x) + inner(x) / t - outer_value(outer, t, x)
    polyv = inner.tail[0] * x ** 3 + inner.tail[1] * x ** 2 + inner.C1_minus * x
    envelope = (np.abs(prof.v0_minus(x) - x) + np.abs(inner(x) - polyv) / t
                + np.abs(x + polyv / t - outer_value(outer, t, x)))
    flips = np.nonzero(np.sign(gap[:-1]) * np.sign(gap[1:]) < 0)[0]
    if flips.size == 0:
        return float(x[np.argmin(envelope)]), False
    i = flips[np.argmin(envelope[flips])]
    f = lambda z: float(prof.v0_minus(z) + inner(z) / t - outer_value(outer, t, z))  # noqa: E731
    return brentq(f, x[i], x[i + 1], xtol=1e-14), True


def build_uapp(ledger: ExpansionLedger, inner: InnerTerm, outer, eps: float = 0.05, t: float = 100.0,
               match: str = "overlap") -> GluedApprox:
    """Glue V- and V+ with the value shift zeta and the C^1 corrector K bump phi.

    ``match="power"`` glues at x = t^eps.  ``match="overlap"`` glues where the
    two expansions actually agree at this t (see :func:`_overlap_point`); for
    t <= 1e5 the inner boundary layer |V0- - x| ~ e^{-omega x} is still O(1)
    at t^eps.
    """
    eps = check_real(eps, "eps", 0.0, 0.125, lo_open=True, hi_open=True)
    t = check_real(t, "t", 3.0)
    if match == "power":
        m = t ** eps
    elif match == "overlap":
        m, _ = _overlap_point(inner, outer, t)
    else:
        raise ValueError(f"unknown match rule {match!r}")
    target = float(outer_value(outer, t, m))
    prof = inner.profile

    def gap(z):
        y = m + z
        return float(prof.v0_minus(y) + inner(y) / t) - target

    if gap(0.0) == 0.0:
        zeta = 0.0
    else:
        try:
            zeta = brentq(gap, -0.99, 0.99, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        except ValueError as exc:
            raise DomainError(f"no continuity shift in (-1, 1) at t={t}") from exc
    y = m + zeta
    dminus = float(prof.v0_minus(y, 1) + inner(y, 1) / t)
    K = float(outer_value(outer, t, m, 1)) - dminus
    return GluedApprox(t, eps, ledger, inner, tuple(outer), zeta, K, m)


def matched_outer(ledger: ExpansionLedger, basis=None):
    """(V0+, V1+, V2+, V3+) with V3 using the ledger's alpha_1 and q_3.

    V3 is built at the solvable mu; a different ledger mu enters through V2.
    """
    from .outer import build_v1_plus, build_v2_plus, build_v3_plus

    from .constants import MU_STAR

    v1 = build_v1_plus(basis)
    # V3 exists only at the solvable mu; a tampered mu enters through V2 and sigma
    return (build_v0_plus(), v1, build_v2_plus(ledger.mu),
            build_v3_plus(MU_STAR, ledger.alpha1, ledger.q3, basis, v1))


# ------------------------------------------------------------------ fitting

def _columns(t, names):
    lt = np.log(t)
    table = {
        "c2": t,
        "c_log": lt,
        "alpha": np.ones_like(t),
        "b": t ** -0.5,
        "mu": lt / t,
        "alpha1": 1.0 / t,
        "n1": t ** -1.5,
        "n2": t ** -1.5 * lt,
        "n3": t ** -2.0,
        "n4": t ** -2.0 * lt,
        "n5": t ** -2.0 * lt * lt,
    }
    return np.column_stack([table[n] for n in names])


NUISANCE = ("n1", "n2", "n3", "n4", "n5")
THEORY = {"c2": 2.0, "c_log": -1.5, "b": B_STAR}
ORDER = ("c2", "c_log", "alpha", "b", "mu", "alpha1")
TESTED = {1: "c2", 2: "c_log", 3: "alpha", 4: "b", 5: "mu", 6: "mu"}


def _stage_free(stage, freeze):
    if not freeze:
        free = list(("c2", "alpha", "c_log", "alpha1", "b", "mu")[: {1: 2, 2: 3, 3: 4, 4: 5, 5: 6, 6: 6}[stage]])
    else:
        free = ["alpha", "alpha1"]
        tested = TESTED[stage]
        if tested not in free:
            free.insert(0, tested)
    if stage == 6:
        free += list(NUISANCE)
    return free


@dataclass(frozen=True)
class FitReport:
    level: float
    window: tuple
    freeze: bool
    stages: tuple  # one dict of fitted coefficients per stage
    rms: tuple
    cond: tuple

    def final(self, name):
        for coefs in reversed(self.stages):
            if name in coefs:
                return coefs[name]
        return None

    @property
    def c2(self):
        return self.stages[0].get("c2") if self.stages else None

    @property
    def c_log(self):
        return self.stages[1].get("c_log") if len(self.stages) > 1 else None

    @property
    def alpha(self):
        return self.final("alpha")

    @property
    def b(self):
        return self.stages[3].get("b") if len(self.stages) > 3 else None

    @property
    def mu(self):
        return self.stages[4].get("mu") if len(self.stages) > 4 else None

    @property
    def alpha1(self):
        return self.final("alpha1")

    def rows(self):
        out = []
        for i, coefs in enumerate(self.stages, 1):
            for name, val in coefs.items():
                out.append((i, name, val, self.rms[i - 1], self.cond[i - 1]))
        return out


class FrontShiftFitter(RegressorMixin, BaseEstimator):
    """Sequential least-squares fit of sigma_s(t) to the shift expansion.

    Stages: 1 speed, 2 log coefficient, 3 constant, 4 t^-1/2 coefficient,
    5 log t / t coefficient, 6 as 5 with t^-3/2 and t^-2 nuisance terms.
    With ``freeze`` every universal coefficient except the one under test is
    held at its theory value and only the data-dependent constants (alpha,
    alpha_1) are fitted alongside; otherwise the stages nest and refit
    everything.  ``mu`` is the value used when mu is frozen.
    """

    def __init__(self, stages=5, freeze=True, mu=None, t_min=None, t_max=None, cond_limit=1e10, level=0.5):
        self.stages = stages
        self.freeze = freeze
        self.mu = mu
        self.t_min = t_min
        self.t_max = t_max
        self.cond_limit = cond_limit
        self.level = level

    def _theory(self):
        from .constants import MU_STAR

        th = dict(THEORY)
        th["mu"] = MU_STAR if self.mu is None else float(self.mu)
        return th

    def fit(self, X, y):
        t = np.asarray(X, dtype=float).reshape(-1)
        sig = np.asarray(y, dtype=float).reshape(-1)
        if t.shape != sig.shape:
            raise ValueError("t and sigma must have the same length")
        check_increasing(t, "t")
        if np.any(t <= 0):
            raise ValueError("times must be positive")
        lo = -np.inf if self.t_min is None else self.t_min
        hi = np.inf if self.t_max is None else self.t_max
        m = (t >= lo) & (t <= hi)
        if m.sum() < 10:
            raise ValueError("fewer than 10 samples inside the fit window")
        t, sig = t[m], sig[m]
        if not 1 <= int(self.stages) <= 6:
            raise ValueError("stages must be in 1..6")
        th = self._theory()
        stages, rms, conds = [], [], []
        for stage in range(1, int(self.stages) + 1):
            free = _stage_free(stage, self.freeze)
            fixed = [n for n in ORDER if n not in free and n in th]
            target = sig - (_columns(t, fixed) @ np.array([th[n] for n in fixed]) if fixed else 0.0)
            A = _columns(t, free)
            norms = np.linalg.norm(A, axis=0)
            An = A / norms
            cond = float(np.linalg.cond(An))
            if stage == 5 and cond > self.cond_limit:
                raise IllConditioned(f"stage-5 design condition number {cond:.2e} exceeds {self.cond_limit:.0e}")
            c, *_ = np.linalg.lstsq(An, target, rcond=None)
            c = c / norms
            resid = target - A @ c
            stages.append(dict(zip(free, (float(v) for v in c))))
            rms.append(float(np.sqrt(np.mean(resid ** 2))))
            conds.append(cond)
        self.coef_ = {**{n: th[n] for n in ORDER if n in th}, **stages[-1]}
        self.report_ = FitReport(float(self.level), (float(t[0]), float(t[-1])), bool(self.freeze),
                                 tuple(stages), tuple(rms), tuple(conds))
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        t = np.asarray(X, dtype=float).reshape(-1)
        names = [n for n in self.coef_ if n in ORDER or n in NUISANCE]
        return _columns(t, names) @ np.array([self.coef_[n] for n in names])


def fit_shift(trace, level: float = 0.5, stages: int = 5, freeze: bool = True, t_min=None, t_max=None,
              mu=None, cond_limit: float = 1e10) -> FitReport:
    level = check_level(level)
    if level not in trace.sigma:
        raise ValueError(f"level {level} was not tracked")
    est = FrontShiftFitter(stages, freeze, mu, t_min, t_max, cond_limit, level)
    return est.fit(trace.t, trace.sigma[level]).report_


def model_shift(t, alpha0, alpha1, mu=None, b=B_STAR):
    """sigma(t) = 2t - 3/2 log t + alpha0 + b / sqrt(t) + mu log t / t + alpha1 / t."""
    from .constants import MU_STAR

    mu = MU_STAR if mu is None else mu
    t = np.asarray(t, dtype=float)
    return 2 * t - 1.5 * np.log(t) + alpha0 + b / np.sqrt(t) + mu * np.log(t) / t + alpha1 / t


def level_offsets(inner: InnerTerm, level: float):
    """(X_s, a1_s): sigma_s = sigma + X_s + a1_s / t + ..., from phi(X_s) + psi(X_s)/t = s."""
    prof = inner.profile
    xs = prof.inverse(level)
    _, p, _ = psi_profile(inner, np.array([xs]))
    return xs, -float(p[0]) / float(prof(xs, 1))


def shift_constants(report: FitReport, inner: InnerTerm):
    """Physical (alpha_0, alpha_1) from a level-s fit."""
    xs, a1s = level_offsets(inner, report.level)
    return report.alpha - xs, report.alpha1 - a1s


# -------------------------------------------------------------- comparisons

@dataclass(frozen=True)
class ComparisonReport:
    t: float
    sigma: float
    weighted_error: float
    local_error: float
    x_range: tuple


def compare_profiles(state, glued: GluedApprox | None, sigma: float, inner: InnerTerm,
                     local_halfwidth: float = 5.0, x_right: float | None = None) -> ComparisonReport:
    """Weighted sup error against u_app and the local t^-1 profile error.

    weighted: sup over X >= 2 - t^eps of |u - u_app| e^X / (1 + |X|)
    local:    sup over |X| <= 5 of |t (u - phi) - psi|
    where X = position - sigma(t).
    """
    t = state.t
    if glued is not None and abs(glued.t - t) > 1e-9 * max(1.0, t):
        raise DomainError(f"snapshot at t={t} but u_app built for t={glued.t}")
    X = state.x + state.frame_offset - sigma
    interior = slice(2, -2)
    X, v, xf = X[interior], state.v[interior], state.x[interior]
    prof = inner.profile
    loc = np.abs(X) <= local_halfwidth
    if not np.any(loc):
        raise DomainError("snapshot does not cover |X| <= 5 around sigma")
    u_loc = v[loc] * np.exp(-xf[loc])
    _, psi_loc, _ = psi_profile(inner, X[loc])
    local = float(np.max(np.abs(t * (u_loc - prof(X[loc])) - psi_loc)))
    weighted = float("nan")
    if glued is not None:
        lo = 2.0 - glued.match
        hi = np.inf if x_right is None else x_right
        w = (X >= lo) & (X <= hi)
        Xw = X[w]
        # e^X u = v e^{X - x_frame}; compare on the V level to avoid overflow
        ev = v[w] * np.exp(Xw - xf[w])
        va = glued.v_app(Xw + glued.k)
        weighted = float(np.max(np.abs(ev - va) / (1.0 + np.abs(Xw))))
    return ComparisonReport(t, float(sigma), weighted, local, (float(X[0]), float(X[-1])))


@dataclass(frozen=True)
class ShiftFit:
    """Physical shift sigma(t) fitted from one level with universal terms frozen."""

    level: float
    mu: float
    alpha0: float
    alpha1: float
    nuisance: dict
    window: tuple
    rms: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = model_shift(t, self.alpha0, self.alpha1, self.mu)
        if self.nuisance:
            names = list(self.nuisance)
            extra = _columns(np.atleast_1d(t), names) @ np.array([self.nuisance[n] for n in names])
            out = out + extra.reshape(t.shape)
        return out

    def ledger(self, inner: InnerTerm, basis=None) -> ExpansionLedger:
        """Expansion ledger with q_3 from the matching balance at the fitted alpha_1."""
        from .outer import balance_q3, v3bar_prime_at_zero
        from .constants import MU_STAR

        led = ExpansionLedger(self.mu, alpha0=self.alpha0, alpha1=self.alpha1, C1_minus=inner.C1_minus,
                              v3bar_prime0=v3bar_prime_at_zero(MU_STAR, basis))
        return led.set(q3=balance_q3(led, inner.C1_minus, self.alpha1))


def fit_constants(trace, inner: InnerTerm, level: float = 0.5, mu=None, t_min: float = 30.0, t_max=None,
                  nuisance: bool = True) -> ShiftFit:
    """alpha_0, alpha_1 (and higher-order nuisance terms) with every universal coefficient frozen.

    The t^-3/2 and t^-2 terms soak up higher orders so that the 1/t
    coefficient is stable with respect to the window.  The level offset
    phi(X_s) + psi(X_s)/t = s is removed, so the result describes sigma(t).
    """
    from .constants import MU_STAR

    level = check_level(level)
    mu = MU_STAR if mu is None else float(mu)
    t, sig = trace.window(level, t_min, np.inf if t_max is None else t_max)
    if t.size < 10:
        raise ValueError("fewer than 10 samples inside the fit window")
    target = sig - model_shift(t, 0.0, 0.0, mu)
    names = ["alpha", "alpha1"] + (list(NUISANCE) if nuisance else [])
    A = _columns(t, names)
    norms = np.linalg.norm(A, axis=0)
    c, *_ = np.linalg.lstsq(A / norms, target, rcond=None)
    c = c / norms
    rms = float(np.sqrt(np.mean((target - A @ c) ** 2)))
    xs, a1s = level_offsets(inner, level)
    return ShiftFit(level, mu, float(c[0] - xs), float(c[1] - a1s),
                    {n: float(v) for n, v in zip(names[2:], c[2:])}, (float(t[0]), float(t[-1])), rms)


def compare_run(result, inner: InnerTerm, level: float = 0.5, mu=None, eps: float = 0.05, match: str = "overlap",
                t_min: float = 30.0, basis=None):
    """Fit sigma from the run's trace, then compare every snapshot with u_app.

    Returns (ShiftFit, list of ComparisonReport).
    """
    fit = fit_constants(result.trace, inner, level, mu, t_min)
    led = fit.ledger(inner, basis)
    outer = matched_outer(led, basis)
    reports = []
    for t, state in sorted(result.snapshots.items()):
        glued = build_uapp(led, inner, outer, eps, t, match)
        reports.append(compare_profiles(state, glued, float(fit(t)), inner))
    return fit, reports


def decay_slope(reports) -> float:
    """Least-squares slope of log(weighted error) against log t."""
    t = np.log([r.t for r in reports])
    e = np.log([r.weighted_error for r in reports])
    return float(np.polyfit(t, e, 1)[0])
