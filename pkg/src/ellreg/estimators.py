"""GLS, restricted, preliminary-test, Stein and positive-rule estimators."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .distributions import central_f_quantile
from .errors import DegenerateStatisticError, UnsupportedError
from .model import LinearRestriction, RegressionProblem, validate_problem

DEFAULT_ALPHA = 0.05

__all__ = [
    "EstimateBundle",
    "fit_gls",
    "fit_restricted",
    "s2",
    "s_star2",
    "test_statistic",
    "shrink_constant",
    "fit_pt",
    "fit_stein",
    "fit_positive_rule",
    "fit_all",
]


def _gram(problem):
    C = problem.X.T @ problem.v_solve(problem.X)
    return sla.cho_factor(0.5 * (C + C.T), lower=True)


def fit_gls(problem: RegressionProblem):
    """``(X' V^-1 X)^-1 X' V^-1 y`` via Cholesky solves."""
    if problem.y is None:
        raise ValueError("problem has no response vector")
    rhs = problem.X.T @ problem.v_solve(problem.y)
    return sla.cho_solve(_gram(problem), rhs)


def fit_restricted(problem, restriction: LinearRestriction, beta_gls):
    """Project the GLS estimate onto ``H beta = h`` in the ``C`` metric."""
    H = restriction.H
    CiHt = sla.cho_solve(_gram(problem), H.T)
    gap = H @ beta_gls - restriction.h
    return beta_gls - CiHt @ np.linalg.solve(H @ CiHt, gap)


def _weighted_rss(problem, beta):
    resid = problem.y - problem.X @ beta
    return float(resid @ problem.v_solve(resid))


def _exact_fit(problem, rss):
    # residual at rounding level relative to the response
    scale = float(problem.y @ problem.v_solve(problem.y))
    return rss <= (64 * np.finfo(float).eps) ** 2 * scale


def s2(problem, beta_gls):
    rss = _weighted_rss(problem, beta_gls)
    if _exact_fit(problem, rss):
        warnings.warn("S^2 is numerically zero: the fit is exact", RuntimeWarning, stacklevel=2)
    return rss / problem.m


def s_star2(problem, restriction, beta_restricted):
    rss = _weighted_rss(problem, beta_restricted)
    if _exact_fit(problem, rss):
        warnings.warn("S*^2 is numerically zero: the restricted fit is exact", RuntimeWarning, stacklevel=2)
    return rss / (problem.m + restriction.q)


def test_statistic(problem, restriction, beta_gls, s2_value):
    """``L_n = (H b - h)' V1 (H b - h) / (q S^2)`` with ``V1 = (H C^-1 H')^-1``."""
    if not s2_value > 0:
        raise DegenerateStatisticError("S^2 must be positive to form L_n")
    H = restriction.H
    CiHt = sla.cho_solve(_gram(problem), H.T)
    gap = H @ beta_gls - restriction.h
    quad = float(gap @ np.linalg.solve(H @ CiHt, gap))
    return max(quad, 0.0) / (restriction.q * s2_value)


def shrink_constant(q, m):
    """``d = (q - 2) m / (q (m + 2))``; defined for q >= 3."""
    if q < 3:
        raise UnsupportedError(f"Stein-type shrinkage needs q >= 3, got q={q}")
    if m < 1:
        raise ValueError("m must be positive")
    return (q - 2) * m / (q * (m + 2))


def fit_pt(beta_gls, beta_restricted, L_n, F_alpha):
    """Unrestricted estimate when ``L_n >= F_alpha``, restricted otherwise."""
    return np.array(beta_gls if L_n >= F_alpha else beta_restricted, dtype=float, copy=True)


def fit_stein(beta_gls, beta_restricted, L_n, d):
    if L_n == 0:
        raise DegenerateStatisticError(
            "Stein estimator undefined at L_n = 0; use the positive-rule estimator"
        )
    return beta_gls - (d / L_n) * (beta_gls - beta_restricted)


def fit_positive_rule(beta_gls, beta_restricted, L_n, d):
    """Stein estimate with the shrink factor clamped at zero (equals restricted for L_n <= d)."""
    if L_n <= d:
        return np.array(beta_restricted, dtype=float, copy=True)
    return beta_restricted + (1.0 - d / L_n) * (beta_gls - beta_restricted)


@dataclass(frozen=True)
class EstimateBundle:
    beta_gls: np.ndarray
    beta_restricted: np.ndarray
    beta_pt: np.ndarray
    beta_s: Optional[np.ndarray]
    beta_prs: Optional[np.ndarray]
    s2: float
    s_star2: float
    L_n: float
    F_alpha: float
    alpha: float
    d: Optional[float]
    m: int
    q: int
    notes: tuple = ()

    def coinciding(self, atol=0.0):
        """Groups of estimator names whose values are identical."""
        named = [
            ("gls", self.beta_gls),
            ("restricted", self.beta_restricted),
            ("pt", self.beta_pt),
            ("stein", self.beta_s),
            ("prs", self.beta_prs),
        ]
        named = [(k, v) for k, v in named if v is not None]
        groups = []
        for key, val in named:
            for g in groups:
                if np.allclose(val, g[1], rtol=0.0, atol=atol):
                    g[0].append(key)
                    break
            else:
                groups.append(([key], val))
        return [g[0] for g in groups if len(g[0]) > 1]


def fit_all(problem, restriction, alpha=DEFAULT_ALPHA, d=None, on_degenerate="raise"):
    """Fit every estimator and collect them with S^2, S*^2, L_n, F_alpha and d.

    For q < 3 the Stein and positive-rule fields are None. When ``L_n = 0``
    the Stein estimate raises unless ``on_degenerate="prse"``, which
    substitutes the positive-rule value and records a note.
    """
    validate_problem(problem, restriction)
    q, m = restriction.q, problem.m
    notes = []
    b_gls = fit_gls(problem)
    b_res = fit_restricted(problem, restriction, b_gls)
    s2_value = s2(problem, b_gls)
    L_n = test_statistic(problem, restriction, b_gls, s2_value)
    F_alpha = central_f_quantile(q, m, alpha)
    b_pt = fit_pt(b_gls, b_res, L_n, F_alpha)

    b_s = b_prs = None
    if q >= 3:
        d = shrink_constant(q, m) if d is None else d
        b_prs = fit_positive_rule(b_gls, b_res, L_n, d)
        try:
            b_s = fit_stein(b_gls, b_res, L_n, d)
        except DegenerateStatisticError:
            if on_degenerate != "prse":
                raise
            warnings.warn("L_n = 0: Stein estimate replaced by positive-rule estimate", RuntimeWarning, stacklevel=2)
            notes.append("stein replaced by prs (L_n = 0)")
            b_s = b_prs.copy()
    else:
        notes.append("stein/prs unsupported (q >= 3)")
    return EstimateBundle(
        beta_gls=b_gls,
        beta_restricted=b_res,
        beta_pt=b_pt,
        beta_s=b_s,
        beta_prs=b_prs,
        s2=s2_value,
        s_star2=s_star2(problem, restriction, b_res),
        L_n=L_n,
        F_alpha=F_alpha,
        alpha=alpha,
        d=d if q >= 3 else None,
        m=m,
        q=q,
        notes=tuple(notes),
    )
