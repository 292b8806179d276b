"""Monte Carlo harness for empirical risks, biases and the null law of L_n.

Replications are generated in fixed-size shards, each seeded from
``SeedSequence(seed).spawn(...)``; results depend only on the seed and the
shard size, never on the number of worker threads (``ELLREG_THREADS``).
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.linalg as sla

from . import distributions as dist
from .estimators import DEFAULT_ALPHA, shrink_constant
from .model import (
    EllipticalSpec,
    LinearRestriction,
    RegressionProblem,
    sample_mixing,
    validate_problem,
)
from .risk import ESTIMATORS, RiskConfig, default_grid, risk_all

SHARD_SIZE = 10_000
MIN_RISK_REPS = 1000

__all__ = [
    "MCConfig",
    "MCResult",
    "empirical_risk",
    "statistic_distribution",
    "sweep",
    "beta_for_delta",
    "restriction_direction",
    "ks_distance",
    "thread_count",
]


def thread_count():
    try:
        return max(1, int(os.environ.get("ELLREG_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class MCConfig:
    problem: RegressionProblem
    restriction: LinearRestriction
    beta_true: np.ndarray
    spec: EllipticalSpec
    replications: int = 10_000
    seed: int = 0
    W: Optional[np.ndarray] = None
    alpha: float = DEFAULT_ALPHA
    d: Optional[float] = None
    shard_size: int = SHARD_SIZE

    def __post_init__(self):
        validate_problem(self.problem, self.restriction)
        object.__setattr__(self, "beta_true", np.asarray(self.beta_true, dtype=float))
        if self.replications < 1:
            raise ValueError("replications must be positive")

    def risk_config(self):
        return RiskConfig(
            self.problem, self.restriction, self.spec, self.beta_true,
            W=self.W, alpha=self.alpha, d=self.d,
        )

    def replace(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)

    @cached_property
    def _plan(self):
        return _Plan(self)


class _Plan:
    """Linear maps shared by every replication."""

    def __init__(self, cfg: MCConfig):
        prob, res = cfg.problem, cfg.restriction
        X, H = prob.X, res.H
        self.n, self.p, self.q, self.m = prob.n, prob.p, res.q, prob.m
        self.X = X
        self.L_V = np.linalg.cholesky(prob.V)
        VinvX = prob.v_solve(X)
        C = X.T @ VinvX
        C = 0.5 * (C + C.T)
        C_inv = sla.cho_solve(sla.cho_factor(C, lower=True), np.eye(self.p))
        self.G = C_inv @ VinvX.T
        self.V_inv = prob.v_solve(np.eye(self.n))
        HCH = H @ C_inv @ H.T
        self.V1 = np.linalg.inv(0.5 * (HCH + HCH.T))
        self.M = C_inv @ H.T @ self.V1
        self.H, self.h = H, res.h
        self.W = C if cfg.W is None else np.asarray(cfg.W, dtype=float)
        self.beta = cfg.beta_true
        self.mean = X @ cfg.beta_true
        self.spec = cfg.spec
        self.F_alpha = dist.central_f_quantile(self.q, self.m, cfg.alpha)
        if cfg.d is not None:
            self.d = float(cfg.d)
        else:
            self.d = shrink_constant(self.q, self.m) if self.q >= 3 else None

    def run(self, n_reps, seed_seq):
        rng = np.random.default_rng(seed_seq)
        t = sample_mixing(self.spec, n_reps, rng)
        z = rng.standard_normal((n_reps, self.n))
        eps = (z @ self.L_V.T) * np.sqrt(self.spec.sigma2 / t)[:, None]
        Y = self.mean + eps

        b_gls = Y @ self.G.T
        resid = Y - b_gls @ self.X.T
        rss = np.einsum("ij,ij->i", resid @ self.V_inv, resid)
        s2 = rss / self.m
        gap = b_gls @ self.H.T - self.h
        quad = np.einsum("ij,ij->i", gap @ self.V1, gap)
        L = np.maximum(quad, 0.0) / (self.q * s2)
        shift = gap @ self.M.T
        b_res = b_gls - shift
        resid_r = Y - b_res @ self.X.T
        s_star2 = np.einsum("ij,ij->i", resid_r @ self.V_inv, resid_r) / (self.m + self.q)

        b_pt = np.where((L >= self.F_alpha)[:, None], b_gls, b_res)
        ests = [b_gls, b_res, b_pt]
        degenerate = 0
        if self.d is not None:
            d = self.d
            zero = L == 0
            degenerate = int(zero.sum())
            with np.errstate(divide="ignore", invalid="ignore"):
                factor = np.where(zero, 0.0, d / np.where(zero, 1.0, L))
            factor_pos = np.where(L > d, 1.0 - factor, 0.0)
            b_prs = b_res + factor_pos[:, None] * shift
            b_s = b_gls - factor[:, None] * shift
            b_s[zero] = b_prs[zero]
            ests += [b_s, b_prs]
        else:
            nan = np.full_like(b_gls, np.nan)
            ests += [nan, nan]

        dev = np.stack(ests, axis=1) - self.beta
        losses = np.einsum("ikp,pr,ikr->ik", dev, self.W, dev)
        return {
            "losses": losses,
            "dev_sum": dev.sum(axis=0),
            "dev_sq": (dev * dev).sum(axis=0),
            "L": L,
            "s2": s2,
            "s_star2": s_star2,
            "degenerate": degenerate,
        }


@dataclass
class MCResult:
    """Empirical risks (mean weighted loss) with standard errors, per estimator."""

    risk: dict
    risk_se: dict
    bias: dict
    bias_se: dict
    losses: np.ndarray = field(repr=False)
    L_values: np.ndarray = field(repr=False)
    s2_values: np.ndarray = field(repr=False)
    s_star2_values: np.ndarray = field(repr=False)
    replications: int = 0
    degenerate_stein: int = 0

    def paired_se(self, a, b):
        i, j = ESTIMATORS.index(a), ESTIMATORS.index(b)
        diff = self.losses[:, i] - self.losses[:, j]
        return float(diff.std(ddof=1) / math.sqrt(len(diff)))

    def ordering_holds(self, order, k_se=2.0):
        """True when ``risk[order[0]] <= risk[order[1]] <= ...`` up to k paired SEs."""
        for a, b in zip(order[:-1], order[1:]):
            if self.risk[a] - self.risk[b] > k_se * self.paired_se(a, b):
                return False
        return True


def _shards(cfg):
    sizes = [cfg.shard_size] * (cfg.replications // cfg.shard_size)
    if cfg.replications % cfg.shard_size:
        sizes.append(cfg.replications % cfg.shard_size)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    return list(zip(sizes, seeds))


def _run(cfg: MCConfig):
    plan = cfg._plan
    jobs = _shards(cfg)
    workers = min(thread_count(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda job: plan.run(*job), jobs))
    return [plan.run(*job) for job in jobs]


def empirical_risk(config: MCConfig) -> MCResult:
    """Simulate ``y = X beta + eps``, fit all five estimators, average the losses."""
    if config.replications < MIN_RISK_REPS:
        warnings.warn(
            f"{config.replications} replications is below {MIN_RISK_REPS}; risk comparisons are noisy",
            RuntimeWarning,
            stacklevel=2,
        )
    parts = _run(config)
    N = config.replications
    losses = np.concatenate([s["losses"] for s in parts])
    dev_sum = np.sum([s["dev_sum"] for s in parts], axis=0)
    dev_sq = np.sum([s["dev_sq"] for s in parts], axis=0)
    bias_mean = dev_sum / N
    bias_var = (dev_sq - N * bias_mean**2) / max(N - 1, 1)

    risk, risk_se, bias, bias_se = {}, {}, {}, {}
    for k, name in enumerate(ESTIMATORS):
        col = losses[:, k]
        risk[name] = math.fsum(col) / N
        risk_se[name] = float(col.std(ddof=1) / math.sqrt(N)) if N > 1 else float("nan")
        bias[name] = bias_mean[k]
        bias_se[name] = np.sqrt(np.maximum(bias_var[k], 0.0) / N)
    return MCResult(
        risk=risk,
        risk_se=risk_se,
        bias=bias,
        bias_se=bias_se,
        losses=losses,
        L_values=np.concatenate([s["L"] for s in parts]),
        s2_values=np.concatenate([s["s2"] for s in parts]),
        s_star2_values=np.concatenate([s["s_star2"] for s in parts]),
        replications=N,
        degenerate_stein=sum(s["degenerate"] for s in parts),
    )


def ks_distance(sample, cdf):
    """Kolmogorov-Smirnov distance between a sample and a cdf callable."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = len(x)
    F = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


@dataclass
class StatisticDistribution:
    sample: np.ndarray = field(repr=False)
    delta_star2: float
    ks: float
    ks_critical: float

    @property
    def passes(self):
        return self.ks < self.ks_critical


def statistic_distribution(config: MCConfig):
    """Empirical sample of ``L_n`` and its KS distance to the series cdf."""
    parts = _run(config)
    sample = np.concatenate([s["L"] for s in parts])
    rc = config.risk_config()
    q, m = rc.q, rc.m
    params = dist.GenFParams(q, m, dist.k_weights(config.spec, 0, rc.delta_star2))
    ks = ks_distance(sample, lambda x: dist.gen_f_cdf(params, x))
    return StatisticDistribution(sample, rc.delta_star2, ks, 1.36 / math.sqrt(len(sample)))


def restriction_direction(restriction: LinearRestriction):
    """Leading right-singular vector of H."""
    return np.linalg.svd(restriction.H)[2][0]


def beta_for_delta(problem, restriction, spec, delta_star2, direction=None, base=None):
    """A beta on the ray ``base + c u`` whose non-centrality equals ``delta_star2``.

    ``base`` defaults to the minimum-norm solution of ``H beta = h`` and ``u``
    to :func:`restriction_direction`; ``c`` grows like ``sqrt(delta_star2)``.
    """
    H, h = restriction.H, restriction.h
    if base is None:
        base = np.linalg.lstsq(H, h, rcond=None)[0]
    u = restriction_direction(restriction) if direction is None else np.asarray(direction, float)
    Hu = H @ u
    C = problem.X.T @ problem.v_solve(problem.X)
    V1 = np.linalg.inv(H @ np.linalg.solve(C, H.T))
    scale = math.sqrt(delta_star2 * spec.sigma2_eps / float(Hu @ V1 @ Hu))
    return base + scale * u


def sweep(config: MCConfig, grid=None, direction=None, k_se=3.0, simulate=True):
    """Analytic and empirical risks along a ray of ``beta`` values.

    Returns one dict per grid point with ``analytic_<est>``, ``empirical_<est>``,
    ``se_<est>`` and pass flags for the risk inequalities. With
    ``simulate=False`` the empirical columns are NaN.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    rows = []
    for idx, delta2 in enumerate(grid):
        beta = beta_for_delta(config.problem, config.restriction, config.spec, delta2, direction)
        cfg = config.replace(beta_true=beta, seed=_grid_seed(config.seed, idx))
        report = risk_all(cfg.risk_config(), thresholds=False)
        row = {"delta_star2": float(delta2)}
        mc = empirical_risk(cfg) if simulate else None
        for name in ESTIMATORS:
            row[f"analytic_{name}"] = report.risks[name]
        for name in ESTIMATORS:
            row[f"empirical_{name}"] = mc.risk[name] if mc else float("nan")
            row[f"se_{name}"] = mc.risk_se[name] if mc else float("nan")
        row.update(_row_checks(report, mc, k_se))
        rows.append(row)
    return rows


def _grid_seed(seed, idx):
    return int(np.random.SeedSequence([seed, idx]).generate_state(1)[0])


def _row_checks(report, mc, k_se):
    r = report.risks
    checks = {}
    if r["stein"] is not None:
        checks["stein_le_gls"] = bool(r["stein"] <= r["gls"] + 1e-9)
        checks["prs_le_stein"] = bool(r["prs"] <= r["stein"] + 1e-9)
    if mc is not None:
        ok = True
        for name in ESTIMATORS:
            if r[name] is None:
                continue
            ok &= abs(r[name] - mc.risk[name]) <= k_se * mc.risk_se[name]
        checks["analytic_matches_empirical"] = bool(ok)
    return checks
