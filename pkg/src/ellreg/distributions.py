"""Series forms of the generalized non-central F and chi-square laws.

Under a normal mixture the non-centrality of the conditional law is
``psi * t * delta_star2``, so every distributional quantity is a mixture over
a Poisson index ``r`` whose probabilities are averaged against the mixing
weight. :func:`k_weights` produces those per-term weights
``w_r = K_r / r!`` once; the consumers below only sum ``w_r * term_r``.

Superscript convention: ``h = 0`` averages against ``W(t)`` and ``h = 1``
against the tilted weight ``W(t) / (psi t)``. Both have unit total mass for
probability mixings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .errors import ConvergenceError, PoleError, TruncationError
from .model import EllipticalSpec, mixing_integral

DEFAULT_TOL = 1e-12
MAX_TERMS = 5000

__all__ = [
    "SeriesWeights",
    "GenFParams",
    "k_weights",
    "incomplete_beta",
    "gen_f_pdf",
    "gen_f_cdf",
    "g_series",
    "gen_chisq_cdf",
    "central_f_cdf",
    "central_f_quantile",
    "inv_chisq_moment",
    "truncated_f_inv_moment",
    "truncated_quadratic_expectation",
]


@dataclass(frozen=True)
class SeriesWeights:
    """Truncated per-term weights ``K_r^(h)(delta_star2) / r!`` for r = 0..R."""

    h: int
    delta_star2: float
    weights: np.ndarray = field(repr=False)
    tail_bound: float
    tol: float = DEFAULT_TOL

    @property
    def R(self):
        return len(self.weights) - 1

    @property
    def r(self):
        return np.arange(len(self.weights))

    @property
    def K(self):
        """Raw ``K_r`` (the weights times ``r!``); overflows to inf for large r."""
        with np.errstate(over="ignore"):
            return self.weights * np.exp(special.gammaln(self.r + 1.0))

    @property
    def mass(self):
        return math.fsum(self.weights)


@dataclass(frozen=True)
class GenFParams:
    q_dof: int
    m_dof: int
    series: SeriesWeights

    def __post_init__(self):
        if self.q_dof < 1 or self.m_dof < 1:
            raise ValueError("degrees of freedom must be positive")


def _fsum_rows(terms):
    terms = np.asarray(terms, dtype=float)
    if terms.ndim == 1:
        return math.fsum(terms)
    return np.array([math.fsum(row) for row in terms.reshape(-1, terms.shape[-1])]).reshape(
        terms.shape[:-1]
    )


def _truncate(pmf, sf, tol, max_terms):
    """Weights pmf(0..R) with R the first index whose survival is below tol."""
    r = np.arange(max_terms + 1)
    tails = sf(r)
    below = np.flatnonzero(tails < tol)
    if below.size == 0:
        raise TruncationError(
            f"series tail {tails[-1]:.3g} still above tol={tol:g} after {max_terms} terms"
        )
    R = int(below[0])
    return pmf(r[: R + 1]), float(tails[R])


def _poisson_log_pmf(r, mu):
    if mu == 0.0:
        return 0.0 if r == 0 else -np.inf
    return r * math.log(mu) - mu - special.gammaln(r + 1.0)


def _custom_weights(spec, h, delta_star2, tol, max_terms):
    psi = spec.psi_factor
    lam = psi * delta_star2 / 2.0
    weight = spec.mixing_weight()
    scale = psi ** (-h)

    def tilt(t):
        return scale * t ** (-h)

    def term(r):
        def g(t):
            return tilt(t) * math.exp(_poisson_log_pmf(r, lam * t))

        centers = (1.0, max(r, 1) / lam)
        return mixing_integral(weight, g, spec.is_signed, centers=centers)

    def tail(R):
        def g(t):
            return tilt(t) * special.pdtrc(R, lam * t)

        pos, neg = mixing_integral(
            weight, g, spec.is_signed, centers=(1.0, max(R, 1) / lam), parts=True
        )
        return pos + neg

    if delta_star2 == 0.0:
        w0 = 1.0 if h == 1 else mixing_integral(weight, lambda t: 1.0, spec.is_signed)
        return np.array([w0]), 0.0

    weights = []
    for R in range(max_terms + 1):
        weights.append(term(R))
        if R >= int(lam) and R % 4 == 0:
            bound = tail(R)
            if bound < tol:
                return np.array(weights), float(bound)
    raise TruncationError(f"custom mixing series did not reach tol={tol:g} in {max_terms} terms")


def k_weights(spec: EllipticalSpec, h, delta_star2, tol=DEFAULT_TOL, max_terms=MAX_TERMS):
    """Mixing weights of the generalized non-central series.

    ``weights[r] = psi^-h int t^-h Pois(r; psi t delta_star2 / 2) W(t) dt``.
    Normal and Student-t use closed forms (Poisson and negative binomial);
    custom weights are integrated numerically.
    """
    if h not in (0, 1):
        raise ValueError("h must be 0 or 1")
    if delta_star2 < 0:
        raise ValueError("delta_star2 must be non-negative")
    delta_star2 = float(delta_star2)

    if spec.family == "custom":
        weights, tail = _custom_weights(spec, h, delta_star2, tol, max_terms)
    elif delta_star2 == 0.0:
        weights, tail = np.array([1.0]), 0.0
    elif spec.family == "normal":
        lam = delta_star2 / 2.0
        weights, tail = _truncate(
            lambda r: stats.poisson.pmf(r, lam),
            lambda r: stats.poisson.sf(r, lam),
            tol,
            max_terms,
        )
    else:
        a = spec.gamma / 2.0
        lam = spec.psi_factor * delta_star2 / 2.0
        prob = a / (lam + a)
        shape = a - h
        weights, tail = _truncate(
            lambda r: stats.nbinom.pmf(r, shape, prob),
            lambda r: stats.nbinom.sf(r, shape, prob),
            tol,
            max_terms,
        )
    return SeriesWeights(h=h, delta_star2=delta_star2, weights=np.asarray(weights), tail_bound=tail, tol=tol)


def incomplete_beta(x, a, b):
    """Regularized incomplete beta ``I_x(a, b)``."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
        raise ValueError("incomplete_beta: x must lie in [0, 1]")
    if np.any(np.asarray(a) <= 0) or np.any(np.asarray(b) <= 0):
        raise ValueError("incomplete_beta: a and b must be positive")
    out = special.betainc(a, b, x)
    return float(out) if out.ndim == 0 else out


def _f_to_beta(q, m, x):
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        xp = np.where(np.isinf(x), 1.0, q * x / (m + q * x))
    return xp


def gen_f_pdf(params: GenFParams, x):
    """Density of the generalized non-central F statistic (h = 0 series)."""
    q, m, series = params.q_dof, params.m_dof, params.series
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xs = np.atleast_1d(x)
    k = q + 2.0 * series.r
    out = np.zeros(xs.shape)
    pos = xs > 0
    xv = xs[pos][:, None]
    log_terms = (
        0.5 * k * math.log(q / m)
        + (0.5 * k - 1.0) * np.log(xv)
        - special.betaln(0.5 * k, 0.5 * m)
        - 0.5 * (q + m + 2.0 * series.r) * np.log1p(q * xv / m)
    )
    out[pos] = _fsum_rows(series.weights * np.exp(log_terms))
    return float(out[0]) if scalar else out


def gen_f_cdf(params: GenFParams, x):
    """``P(L_n <= x)``: sum_r w_r I_x'((q + 2r)/2, m/2), x' = q x / (m + q x)."""
    q, m, series = params.q_dof, params.m_dof, params.series
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("gen_f_cdf: x must be non-negative")
    xp = _f_to_beta(q, m, x)
    terms = special.betainc(0.5 * q + series.r, 0.5 * m, xp[..., None])
    out = _fsum_rows(terms * series.weights)
    return float(out) if np.ndim(out) == 0 else out


def g_series(series: SeriesWeights, q, i, m, x_prime):
    """``G^(2-h)_{q+2i,m}(x') = sum_r w_r I_x'((q + 2i)/2 + r, m/2)``.

    ``x'`` is already on the beta scale, e.g. ``q F / (m + q F)``.
    """
    x_prime = np.asarray(x_prime, dtype=float)
    if np.any((x_prime < 0) | (x_prime > 1)):
        raise ValueError("x_prime must lie in [0, 1]")
    terms = special.betainc(0.5 * (q + 2 * i) + series.r, 0.5 * m, x_prime[..., None])
    out = _fsum_rows(terms * series.weights)
    return float(out) if np.ndim(out) == 0 else out


def gen_chisq_cdf(series: SeriesWeights, dof, x):
    """``sum_r w_r H_{dof+2r}(x)`` with H the central chi-square cdf."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("gen_chisq_cdf: x must be non-negative")
    terms = special.chdtr(dof + 2.0 * series.r, x[..., None])
    out = _fsum_rows(terms * series.weights)
    return float(out) if np.ndim(out) == 0 else out


def central_f_cdf(q, m, x):
    return incomplete_beta(_f_to_beta(q, m, x), 0.5 * q, 0.5 * m)


def central_f_quantile(q, m, alpha, max_iter=100):
    """Upper-alpha point ``F_alpha`` with ``cdf(F_alpha) = 1 - alpha``.

    Starts from the inverse incomplete beta and polishes with safeguarded
    Newton steps on the F cdf.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    target = 1.0 - alpha
    xb = special.betaincinv(0.5 * q, 0.5 * m, target)
    lo, hi = 0.0, np.inf
    f = m * xb / (q * (1.0 - xb)) if xb < 1.0 else 1e300
    pdf_params = GenFParams(q, m, SeriesWeights(0, 0.0, np.array([1.0]), 0.0))
    for _ in range(max_iter):
        err = central_f_cdf(q, m, f) - target
        if abs(err) <= 1e-13:
            return float(f)
        if err > 0:
            hi = min(hi, f)
        else:
            lo = max(lo, f)
        dens = gen_f_pdf(pdf_params, f)
        step = f - err / dens if dens > 0 else np.nan
        if not (lo < step < hi):
            step = 0.5 * (lo + hi) if np.isfinite(hi) else 2.0 * f + 1.0
        f = step
    if abs(central_f_cdf(q, m, f) - target) <= 1e-10:
        return float(f)

    raise ConvergenceError(f"F quantile did not converge for q={q}, m={m}, alpha={alpha}", (lo, hi))


def inv_chisq_moment(series: SeriesWeights, order, q, s):
    """``E^(2-h)[chi*_{q+s}^-2]`` (order 2) or ``E^(2-h)[chi*_{q+s}^-4]`` (order 4)."""
    k = q + s + 2.0 * series.r
    if order == 2:
        if q + s - 2 <= 0:
            raise PoleError(f"E[chi^-2] needs q + s > 2, got {q + s}")
        terms = 1.0 / (k - 2.0)
    elif order == 4:
        if q + s - 4 <= 0:
            raise PoleError(f"E[chi^-4] needs q + s > 4, got {q + s}")
        terms = 1.0 / ((k - 2.0) * (k - 4.0))
    else:
        raise ValueError("order must be 2 or 4")
    return math.fsum(series.weights * terms)


def truncated_f_inv_moment(series: SeriesWeights, j, q, s, m, d_cut):
    """``E^(2-h)[F^-j I(F < q d / (q + s))]`` for ``F = F_{q+s,m}(delta_star2)``.

    Each term is the beta-function ratio times ``I_x`` with shifted arguments,
    ``x = q d / (m + q d)``.
    """
    if j < 0:
        raise ValueError("j must be non-negative")
    if d_cut <= 0:
        raise ValueError("d_cut must be positive")
    k = q + s
    if k - 2 * j <= 0:
        raise PoleError(f"inverse moment of order {j} needs q + s > {2 * j}, got {k}")
    a = 0.5 * (k + 2.0 * series.r)
    b = 0.5 * m
    if np.isinf(d_cut):
        x = 1.0
    else:
        x = q * d_cut / (m + q * d_cut)
    log_ratio = special.betaln(a - j, b + j) - special.betaln(a, b)
    terms = (k / m) ** j * np.exp(log_ratio) * special.betainc(a - j, b + j, x)
    return math.fsum(series.weights * terms)


def truncated_quadratic_expectation(series: SeriesWeights, coef, q, s, m, d_cut, power=2):
    """``E^(2-h)[(1 - coef F^-1)^power I(F < q d / (q + s))]``, power 1 or 2."""
    if power == 1:
        return truncated_f_inv_moment(series, 0, q, s, m, d_cut) - coef * truncated_f_inv_moment(
            series, 1, q, s, m, d_cut
        )
    if power == 2:
        t0 = truncated_f_inv_moment(series, 0, q, s, m, d_cut)
        t1 = truncated_f_inv_moment(series, 1, q, s, m, d_cut)
        t2 = truncated_f_inv_moment(series, 2, q, s, m, d_cut)
        return math.fsum([t0, -2.0 * coef * t1, coef * coef * t2])
    raise ValueError("power must be 1 or 2")
