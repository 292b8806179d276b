"""Regression problem, elliptical error laws and derived core matrices.

Errors follow a scale mixture of normals: conditional on a mixing variable
``t > 0`` with weight ``W(t)``, the error vector is ``N_n(0, sigma2 / t * V)``.
The covariance factor ``-2 psi'(0) = E[1/t]`` turns ``sigma2`` into the error
variance ``sigma2_eps``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
from scipy import integrate, special

from .errors import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    QuadratureError,
    RankDeficiencyError,
    UnsupportedFamilyError,
)

RANK_RTOL = 1e-10
QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-10

__all__ = [
    "RegressionProblem",
    "LinearRestriction",
    "EllipticalSpec",
    "CoreMatrices",
    "validate_problem",
    "core_matrices",
    "sample_mixing",
    "sample_errors",
    "mixing_integral",
    "student_t_mixing_density",
]


def _as_matrix(a, name):
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} must be a 2-d array, got shape {arr.shape}")
    return arr


def _as_vector(a, name):
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be a vector, got shape {arr.shape}")
    return arr


def numerical_rank(a, rtol=RANK_RTOL):
    sv = np.linalg.svd(a, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


@dataclass(frozen=True)
class RegressionProblem:
    """Linear model ``y = X beta + eps`` with known scatter matrix ``V``.

    ``y`` may be omitted for design-only work (analytic risks, simulation).
    ``V=None`` means the identity.
    """

    X: np.ndarray
    V: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "X", _as_matrix(self.X, "X"))
        n = self.X.shape[0]
        V = np.eye(n) if self.V is None else _as_matrix(self.V, "V")
        object.__setattr__(self, "V", V)
        if self.y is not None:
            object.__setattr__(self, "y", _as_vector(self.y, "y"))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def m(self):
        return self.n - self.p

    @cached_property
    def v_cholesky(self):
        try:
            return sla.cho_factor(self.V, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError("V is not positive definite") from exc

    def v_solve(self, b):
        return sla.cho_solve(self.v_cholesky, b)

    def with_response(self, y):
        return RegressionProblem(X=self.X, V=self.V, y=y)


@dataclass(frozen=True)
class LinearRestriction:
    """Suspected restriction ``H beta = h``."""

    H: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.H, dtype=float))
        object.__setattr__(self, "H", _as_matrix(H, "H"))
        object.__setattr__(self, "h", np.atleast_1d(_as_vector(self.h, "h")))

    @property
    def q(self):
        return self.H.shape[0]


def _split_quad(f, centers=(1.0,)):
    """Integrate ``f`` over (0, inf), splitting at the given break points."""
    edges = [0.0] + sorted({float(c) for c in centers if c > 0}) + [np.inf]
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for a, b in zip(edges[:-1], edges[1:]):
                val, e = integrate.quad(
                    f, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=400
                )
                total += val
                err += e
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"mixing quadrature did not converge: {exc}") from exc
    return total, err


def mixing_integral(weight, g, is_signed=False, centers=(1.0,), parts=False):
    """``int_0^inf g(t) W(t) dt`` with signed weights split into Jordan parts.

    With ``parts=True`` returns the pair (positive part, negative part).
    """
    if not is_signed:
        val = _split_quad(lambda t: g(t) * weight(t), centers)[0]
        return (val, 0.0) if parts else val
    pos = _split_quad(lambda t: g(t) * max(weight(t), 0.0), centers)[0]
    neg = _split_quad(lambda t: g(t) * max(-weight(t), 0.0), centers)[0]
    return (pos, neg) if parts else pos - neg


def student_t_mixing_density(gamma):
    """Density of ``t = u / gamma`` with ``u ~ chi2(gamma)``."""
    a = gamma / 2.0
    log_norm = a * math.log(a) - special.gammaln(a)

    def density(t):
        if t <= 0.0:
            return 0.0
        return math.exp(log_norm + (a - 1.0) * math.log(t) - a * t)

    return density


@dataclass(frozen=True)
class EllipticalSpec:
    """Error law: normal, multivariate Student-t, or a custom normal mixture.

    Build with :meth:`normal`, :meth:`student_t` or :meth:`custom`.
    ``sampler(rng, size)`` draws the mixing variable ``t`` for custom laws.
    """

    family: str = "normal"
    sigma2: float = 1.0
    gamma: Optional[float] = None
    weight: Optional[Callable[[float], float]] = field(default=None, compare=False)
    is_signed: bool = False
    sampler: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.family not in ("normal", "t", "custom"):
            raise UnsupportedFamilyError(f"unknown family {self.family!r}")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if self.family == "t":
            if self.gamma is None or not self.gamma > 2:
                raise ValueError("Student-t degrees of freedom must exceed 2")
        if self.family == "custom":
            if self.weight is None:
                raise ValueError("custom mixing requires a weight function")
            if not self.is_signed:
                mass = mixing_integral(self.weight, lambda t: 1.0)
                if abs(mass - 1.0) > 1e-8:
                    raise ValueError(
                        f"mixing weight must integrate to 1, got {mass:.12g}"
                    )
            psi = self.psi_factor
            if not (np.isfinite(psi) and psi > 0):
                raise ValueError(f"covariance factor must be finite and positive, got {psi}")

    @classmethod
    def normal(cls, sigma2=1.0):
        return cls("normal", sigma2)

    @classmethod
    def student_t(cls, gamma, sigma2=1.0):
        return cls("t", sigma2, gamma=float(gamma))

    @classmethod
    def custom(cls, weight, sigma2=1.0, is_signed=False, sampler=None):
        return cls("custom", sigma2, weight=weight, is_signed=is_signed, sampler=sampler)

    @cached_property
    def psi_factor(self):
        """``-2 psi'(0) = int t^-1 W(t) dt``."""
        if self.family == "normal":
            return 1.0
        if self.family == "t":
            return self.gamma / (self.gamma - 2.0)
        return mixing_integral(self.weight, lambda t: 1.0 / t, self.is_signed)

    @property
    def sigma2_eps(self):
        return self.psi_factor * self.sigma2

    @property
    def is_probability(self):
        return not (self.family == "custom" and self.is_signed)

    def mixing_weight(self):
        """The mixing weight as a callable (None for the normal point mass)."""
        if self.family == "t":
            return student_t_mixing_density(self.gamma)
        return self.weight

    def describe(self):
        if self.family == "t":
            return f"t(gamma={self.gamma:g}), sigma2={self.sigma2:g}"
        return f"{self.family}, sigma2={self.sigma2:g}"


@dataclass(frozen=True)
class CoreMatrices:
    C: np.ndarray
    C_inv: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    R: np.ndarray
    Q: np.ndarray
    A: np.ndarray
    A11: np.ndarray
    tr_A11: float
    ch_min_A11: float
    ch_max_A11: float
    tr_CinvW: float
    delta: Optional[np.ndarray] = None
    eta1: Optional[np.ndarray] = None
    eta1_A11_eta1: Optional[float] = None
    theta: Optional[float] = None


def validate_problem(problem: RegressionProblem, restriction: LinearRestriction):
    """Check dimensions, ranks and positive definiteness; return the pair."""
    n, p = problem.X.shape
    if not n > p >= 1:
        raise DimensionMismatchError(f"need n > p >= 1, got n={n}, p={p}")
    if problem.V.shape != (n, n):
        raise DimensionMismatchError(f"V must be {n}x{n}, got {problem.V.shape}")
    if problem.y is not None and problem.y.shape != (n,):
        raise DimensionMismatchError(f"y must have length {n}, got {problem.y.shape[0]}")
    rank_x = numerical_rank(problem.X)
    if rank_x < p:
        raise RankDeficiencyError("X", rank_x, p)
    if not np.allclose(problem.V, problem.V.T, rtol=1e-12, atol=1e-12):
        raise NotPositiveDefiniteError("V is not symmetric")
    problem.v_cholesky

    H, h = restriction.H, restriction.h
    q = H.shape[0]
    if H.shape[1] != p:
        raise DimensionMismatchError(f"H must have {p} columns, got {H.shape[1]}")
    if h.shape != (q,):
        raise DimensionMismatchError(f"h must have length {q}, got {h.shape[0]}")
    if not 1 <= q < p:
        raise DimensionMismatchError(f"need 1 <= q < p, got q={q}, p={p}")
    rank_h = numerical_rank(H)
    if rank_h < q:
        raise RankDeficiencyError("H", rank_h, q)
    return problem, restriction


def _sym_sqrt_pair(C):
    evals, evecs = np.linalg.eigh(C)
    if evals[0] <= 0:
        raise NotPositiveDefiniteError("C is not positive definite")
    root = np.sqrt(evals)
    half = (evecs * root) @ evecs.T
    inv_half = (evecs / root) @ evecs.T
    return half, inv_half


def core_matrices(problem, restriction, W=None, beta_true=None):
    """Derived matrices used by the estimators and the risk formulas.

    ``W`` defaults to ``C``. ``Q`` diagonalises the projector
    ``R = C^-1/2 H' V1 H C^-1/2`` with its unit-eigenvalue rows first, and
    ``A11`` is the leading ``q x q`` block of ``Q C^-1/2 W C^-1/2 Q'``.
    """
    X, H, h = problem.X, restriction.H, restriction.h
    q = restriction.q
    C = X.T @ problem.v_solve(X)
    C = 0.5 * (C + C.T)
    C_cho = sla.cho_factor(C, lower=True)
    C_inv = sla.cho_solve(C_cho, np.eye(C.shape[0]))
    C_inv = 0.5 * (C_inv + C_inv.T)
    HCH = H @ C_inv @ H.T
    V1 = np.linalg.inv(0.5 * (HCH + HCH.T))
    V1 = 0.5 * (V1 + V1.T)
    CiHt = C_inv @ H.T
    V2 = C_inv - CiHt @ V1 @ CiHt.T
    V2 = 0.5 * (V2 + V2.T)

    W = C if W is None else _as_matrix(W, "W")
    C_half, C_inv_half = _sym_sqrt_pair(C)
    R = C_inv_half @ H.T @ V1 @ H @ C_inv_half
    R = 0.5 * (R + R.T)
    evals, evecs = np.linalg.eigh(R)
    unit = evals > 0.5
    order = np.concatenate([np.flatnonzero(unit), np.flatnonzero(~unit)])
    Q = evecs[:, order].T
    A = Q @ C_inv_half @ W @ C_inv_half @ Q.T
    A = 0.5 * (A + A.T)
    A11 = A[:q, :q]
    a_evals = np.linalg.eigvalsh(A11)

    out = dict(
        C=C, C_inv=C_inv, V1=V1, V2=V2, R=R, Q=Q, A=A, A11=A11,
        tr_A11=float(np.trace(A11)),
        ch_min_A11=float(a_evals[0]),
        ch_max_A11=float(a_evals[-1]),
        tr_CinvW=float(np.trace(C_inv @ W)),
    )
    if beta_true is not None:
        beta = _as_vector(beta_true, "beta_true")
        gap = H @ beta - h
        delta = CiHt @ V1 @ gap
        eta = Q @ (C_half @ beta - C_inv_half @ H.T @ V1 @ h)
        eta1 = eta[:q]
        out.update(
            delta=delta,
            eta1=eta1,
            eta1_A11_eta1=float(eta1 @ A11 @ eta1),
            theta=float(gap @ V1 @ gap),
        )
    return CoreMatrices(**out)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_mixing(spec: EllipticalSpec, size, rng_seed=None):
    """Draw the mixing (precision) variable ``t``."""
    rng = _rng(rng_seed)
    if spec.family == "normal":
        return np.ones(size)
    if spec.family == "t":
        return rng.chisquare(spec.gamma, size=size) / spec.gamma
    if spec.is_signed:
        raise UnsupportedFamilyError("cannot sample from a signed mixing measure")
    if spec.sampler is None:
        raise UnsupportedFamilyError("custom mixing sampling needs a sampler(rng, size)")
    return np.asarray(spec.sampler(rng, size), dtype=float)


def sample_errors(spec: EllipticalSpec, n, V=None, rng_seed=None, size=None):
    """Draw error vectors ``eps | t ~ N_n(0, sigma2 / t * V)``.

    Returns shape ``(n,)`` when ``size`` is None, else ``(size, n)``.
    """
    rng = _rng(rng_seed)
    k = 1 if size is None else int(size)
    t = sample_mixing(spec, k, rng)
    z = rng.standard_normal((k, n))
    if V is not None:
        L = np.linalg.cholesky(np.asarray(V, dtype=float))
        z = z @ L.T
    eps = z * np.sqrt(spec.sigma2 / t)[:, None]
    return eps[0] if size is None else eps
