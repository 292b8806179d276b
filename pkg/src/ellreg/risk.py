"""Analytic biases, quadratic risks and dominance regions of the five estimators.

All expectations are taken conditionally on the mixing variable ``t`` under
normal theory and then averaged against the mixing weight, which is what the
``h = 0`` / ``h = 1`` series of :mod:`ellreg.distributions` encode. Terms that
carry the conditional error variance ``sigma2 / t`` use the ``h = 1`` series
scaled by ``sigma2_eps``; terms in ``eta1' A11 eta1`` use ``h = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from . import distributions as dist
from .errors import ConvergenceError, UnsupportedError, UnsupportedFamilyError
from .estimators import DEFAULT_ALPHA, shrink_constant
from .model import (
    CoreMatrices,
    EllipticalSpec,
    LinearRestriction,
    RegressionProblem,
    core_matrices,
    validate_problem,
)

ESTIMATORS = ("gls", "restricted", "pt", "stein", "prs")

__all__ = [
    "ESTIMATORS",
    "RiskConfig",
    "RiskReport",
    "bias_vectors",
    "risk_all",
    "dominance_thresholds",
    "minimax_range",
    "max_risk_saving",
    "default_grid",
]


def default_grid():
    """0 followed by 41 log-spaced points on [0.01, 50]."""
    return np.concatenate([[0.0], np.geomspace(0.01, 50.0, 41)])


@dataclass(frozen=True)
class RiskConfig:
    """Everything the risk formulas need for one parameter point.

    ``W=None`` means ``W = C``; ``d=None`` means the canonical shrink
    constant (when q >= 3). ``critical_value`` overrides the upper-alpha
    F point used by the preliminary test.
    """

    problem: RegressionProblem
    restriction: LinearRestriction
    spec: EllipticalSpec
    beta_true: np.ndarray
    W: Optional[np.ndarray] = None
    alpha: float = DEFAULT_ALPHA
    d: Optional[float] = None
    tol: float = dist.DEFAULT_TOL
    critical_value: Optional[float] = None

    def __post_init__(self):
        validate_problem(self.problem, self.restriction)
        object.__setattr__(self, "beta_true", np.asarray(self.beta_true, dtype=float))

    @property
    def n(self):
        return self.problem.n

    @property
    def p(self):
        return self.problem.p

    @property
    def q(self):
        return self.restriction.q

    @property
    def m(self):
        return self.problem.m

    @cached_property
    def core(self) -> CoreMatrices:
        return core_matrices(self.problem, self.restriction, self.W, self.beta_true)

    @property
    def sigma2_eps(self):
        return self.spec.sigma2_eps

    @property
    def delta_star2(self):
        return self.core.theta / self.sigma2_eps

    @property
    def shrink(self):
        if self.d is not None:
            return float(self.d)
        return shrink_constant(self.q, self.m) if self.q >= 3 else None

    @cached_property
    def F_alpha(self):
        if self.critical_value is not None:
            return float(self.critical_value)
        return dist.central_f_quantile(self.q, self.m, self.alpha)

    def series(self, h, delta_star2=None):
        ds2 = self.delta_star2 if delta_star2 is None else delta_star2
        return dist.k_weights(self.spec, h, ds2, tol=self.tol)


@dataclass
class RiskReport:
    biases: dict
    risks: dict
    delta_star2: float
    tr_A11: float
    eta1_A11_eta1: float
    ch_min: float
    ch_max: float
    thresholds: dict = field(default_factory=dict)


def _x_beta(q, m, cut):
    return q * cut / (m + q * cut)


def bias_vectors(config: RiskConfig, w0=None):
    """Bias vectors ``b1..b5`` keyed by estimator name."""
    q, m = config.q, config.m
    delta = config.core.delta
    w0 = config.series(0) if w0 is None else w0
    xa = _x_beta(q, m, config.F_alpha)
    out = {
        "gls": np.zeros_like(delta),
        "restricted": -delta,
        "pt": -delta * dist.g_series(w0, q, 1, m, xa),
        "stein": None,
        "prs": None,
    }
    d = config.shrink
    if q >= 3:
        b4 = -d * q * delta * dist.inv_chisq_moment(w0, 2, q, 2)
        coef = q * d / (q + 2)
        pos_part = dist.truncated_quadratic_expectation(w0, coef, q, 2, m, d, power=1)
        out["stein"] = b4
        out["prs"] = b4 - delta * pos_part
    return out


def _stein_risk(config, w0, w1, r_gls, s2e, trA, eAe):
    q, m, d = config.q, config.m, config.shrink
    e1_q = dist.inv_chisq_moment(w1, 2, q, 0)
    e1_q2_4 = dist.inv_chisq_moment(w1, 4, q, 2)
    e2_q4_4 = dist.inv_chisq_moment(w0, 4, q, 4)
    cross = s2e * trA * (e1_q - 2.0 * e1_q2_4) - 2.0 * eAe * e2_q4_4
    square = s2e * trA * e1_q2_4 + eAe * e2_q4_4
    return r_gls - 2.0 * d * q * cross + d * d * q * q * (m + 2) / m * square


def risk_all(config: RiskConfig, thresholds=True):
    """Biases, risks and (optionally) dominance thresholds at one point."""
    core = config.core
    q, m = config.q, config.m
    s2e = config.sigma2_eps
    trA = core.tr_A11
    eAe = core.eta1_A11_eta1
    w0 = config.series(0)
    w1 = config.series(1)
    xa = _x_beta(q, m, config.F_alpha)

    r_gls = s2e * core.tr_CinvW
    r_res = r_gls - s2e * trA + eAe
    g1 = dist.g_series(w1, q, 1, m, xa)
    g2_2 = dist.g_series(w0, q, 1, m, xa)
    g2_4 = dist.g_series(w0, q, 2, m, xa)
    r_pt = r_gls - s2e * trA * g1 + eAe * (2.0 * g2_2 - g2_4)

    risks = {"gls": r_gls, "restricted": r_res, "pt": r_pt, "stein": None, "prs": None}
    if q >= 3:
        d = config.shrink
        r_s = _stein_risk(config, w0, w1, r_gls, s2e, trA, eAe)
        c2 = q * d / (q + 2)
        c4 = q * d / (q + 4)
        sq_tr = dist.truncated_quadratic_expectation(w1, c2, q, 2, m, d, power=2)
        sq_eta = dist.truncated_quadratic_expectation(w0, c4, q, 4, m, d, power=2)
        lin_eta = dist.truncated_quadratic_expectation(w0, c2, q, 2, m, d, power=1)
        risks["stein"] = r_s
        risks["prs"] = r_s - s2e * trA * sq_tr - eAe * sq_eta + 2.0 * eAe * lin_eta

    report = RiskReport(
        biases=bias_vectors(config, w0),
        risks=risks,
        delta_star2=config.delta_star2,
        tr_A11=trA,
        eta1_A11_eta1=eAe,
        ch_min=core.ch_min_A11,
        ch_max=core.ch_max_A11,
    )
    if thresholds:
        report.thresholds = dominance_thresholds(config)
    return report


def _solve_fixed_point(num_den, tol=1e-8, max_iter=200, damping=0.5):
    """Smallest crossing of ``x = num(x) / den(x)`` on [0, inf).

    ``num_den(x)`` returns ``(num, den)``; the crossing is where
    ``D(x) = x den(x) - num(x)`` turns positive. Damped iteration from 0 is
    tried first and kept only if ``D`` changes sign there; otherwise the
    crossing is bracketed by doubling and bisected.
    """

    def D(x):
        num, den = num_den(x)
        return x * den - num

    x = 0.0
    for _ in range(max_iter):
        num, den = num_den(x)
        if not (den > 0 and np.isfinite(num / den)):
            break
        x_new = (1.0 - damping) * x + damping * max(num / den, 0.0)
        if abs(x_new - x) <= tol * max(1.0, abs(x)):
            step = 10 * tol * max(1.0, x_new)
            if x_new > 0 and D(max(x_new - step, 0.0)) <= 0 <= D(x_new + step):
                return x_new
            break
        x = x_new

    if D(0.0) > 0:
        return 0.0
    lo, hi = 0.0, 0.25
    while D(hi) <= 0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e6:
            raise ConvergenceError("threshold not bracketed", (lo, hi))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if D(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * max(1.0, hi):
            return 0.5 * (lo + hi)
    raise ConvergenceError("threshold bisection did not converge", (lo, hi))


def h0_ordering(config: RiskConfig, reading="quantile"):
    """Ordering category of the five estimators at ``delta_star2 = 0``.

    Returns ``(category, details)``: 1 when PTE beats PRSE (so
    restricted > PTE > PRSE > Stein > GLS), 2 when Stein beats PTE
    (restricted > PRSE > Stein > PTE > GLS), and 3 for the band in between
    (restricted > PRSE > PTE > Stein > GLS).

    ``reading="quantile"`` compares the d-quantile of the central
    ``F_{q+2,m}`` with ``q F_alpha / (q + 2)``, which is the exact null risk
    comparison. ``reading="level"`` replaces ``P(F_{q+2,m} <= q F_alpha/(q+2))``
    with ``1 - alpha``.
    """
    q, m, d = config.q, config.m, config.shrink
    if d is None:
        raise UnsupportedError("ordering needs the Stein estimator (q >= 3)")
    w_null = dist.k_weights(config.spec, 0, 0.0)
    F_a = config.F_alpha
    cut = q * F_a / (q + 2)
    f_quant = dist.central_f_quantile(q + 2, m, 1.0 - d) if 0 < d < 1 else np.inf
    if reading == "quantile":
        mass = dist.g_series(w_null, q, 1, m, _x_beta(q, m, F_a))
    elif reading == "level":
        mass = 1.0 - config.alpha
    else:
        raise ValueError("reading must be 'quantile' or 'level'")
    prs_excess = dist.truncated_quadratic_expectation(w_null, q * d / (q + 2), q, 2, m, d, power=2)
    pt_beats_stein = mass >= d
    pt_beats_prs = mass - d - prs_excess >= 0
    if pt_beats_prs:
        category = 1
    elif not pt_beats_stein:
        category = 2
    else:
        category = 3
    details = {
        "reading": reading,
        "null_mass": mass,
        "f_quantile_at_d": f_quant,
        "scaled_critical_value": cut,
        "prs_excess": prs_excess,
        "pt_beats_stein": bool(pt_beats_stein),
        "pt_beats_prs": bool(pt_beats_prs),
    }
    return category, details


def dominance_thresholds(config: RiskConfig):
    """Named dominance bounds in units of ``delta_star2``.

    ``restricted_beats_gls_below`` / ``gls_beats_restricted_above`` bound the
    restricted-vs-GLS crossover; ``pt_beats_gls_below`` and
    ``restricted_beats_pt_below`` solve the implicit PTE conditions;
    ``stein_uniform`` checks ``tr(A11) / ch_max >= (q + 2) / 2``.
    """
    core = config.core
    q, m = config.q, config.m
    trA, cmin, cmax = core.tr_A11, core.ch_min_A11, core.ch_max_A11
    xa = _x_beta(q, m, config.F_alpha)

    def gs(delta2):
        w0 = config.series(0, delta2)
        w1 = config.series(1, delta2)
        return (
            dist.g_series(w1, q, 1, m, xa),
            dist.g_series(w0, q, 1, m, xa),
            dist.g_series(w0, q, 2, m, xa),
        )

    def pt_vs_gls(delta2):
        g1, g2, g4 = gs(delta2)
        return trA / cmax * g1, 2.0 * g2 - g4

    def res_vs_pt(delta2):
        g1, g2, g4 = gs(delta2)
        return trA / cmax * (1.0 - g1), 1.0 - 2.0 * g2 + g4

    out = {
        "restricted_beats_gls_below": trA / cmax,
        "gls_beats_restricted_above": trA / cmin,
        "pt_beats_gls_below": _solve_fixed_point(pt_vs_gls),
        "restricted_beats_pt_below": _solve_fixed_point(res_vs_pt),
        "stein_uniform": bool(trA / cmax >= (q + 2) / 2.0),
    }
    if q >= 3:
        for reading in ("quantile", "level"):
            cat, _ = h0_ordering(config, reading)
            out[f"h0_category_{reading}"] = cat
    return out


def minimax_range(m, q=None):
    """``(0, 2m/(m+2), m/(m+2))``: admissible shrink constants and the optimum.

    Passing ``q`` rescales both bounds by ``(q - 2)/q``, the range for which
    the analytic Stein risk in :func:`risk_all` stays below the GLS risk.
    """
    if m < 1:
        raise ValueError("m must be positive")
    upper = 2.0 * m / (m + 2)
    optimum = m / (m + 2)
    if q is not None:
        if q < 3:
            raise UnsupportedError("q >= 3 required")
        upper *= (q - 2) / q
        optimum *= (q - 2) / q
    return 0.0, upper, optimum


def max_risk_saving(p, q, m, spec: EllipticalSpec):
    """Maximal relative risk saving of the Stein estimator (W = C, null point).

    ``m (q - 2) / (p (m + 2))`` for normal errors, times ``(nu - 2)/nu`` for
    Student-t. The analytic null risks of :func:`risk_all` give the normal
    value for every mixing law.
    """
    if q < 3:
        raise UnsupportedError("q >= 3 required")
    base = m * (q - 2) / (p * (m + 2))
    if spec.family == "normal":
        return base
    if spec.family == "t":
        return base * (spec.gamma - 2.0) / spec.gamma
    raise UnsupportedFamilyError("no closed-form saving for custom mixings")
