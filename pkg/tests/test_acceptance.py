"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` (the lines are also
repeated in the terminal summary).
"""

import time

import numpy as np
import pytest

from ellreg import distributions as dist
from ellreg.estimators import shrink_constant
from ellreg.model import EllipticalSpec
from ellreg.montecarlo import MCConfig, beta_for_delta, empirical_risk, statistic_distribution
from ellreg.risk import ESTIMATORS, RiskConfig, default_grid, h0_ordering, minimax_range, risk_all

from conftest import ACCEPTANCE_LINES, make_design
from oracles import mixture_expectation, noncentral_chisq, noncentral_f, relative_risk_saving

SIGMA2 = 2.0
NORMAL = EllipticalSpec.normal(SIGMA2)
T5 = EllipticalSpec.student_t(5.0, SIGMA2)
SPECS = {"normal": NORMAL, "t5": T5}


def record(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


@pytest.fixture(scope="module")
def design():
    return make_design(n=30, p=6, q=4)


def mc(design, spec, delta2, reps, seed, **kw):
    problem, restriction = design
    beta = beta_for_delta(problem, restriction, spec, delta2)
    cfg = MCConfig(problem, restriction, beta, spec, replications=reps, seed=seed, **kw)
    return cfg, empirical_risk(cfg)


def test_criterion_01_null_distribution(design):
    start = time.perf_counter()
    details, ok = [], True
    for k, (name, spec) in enumerate(SPECS.items()):
        problem, restriction = design
        beta = beta_for_delta(problem, restriction, spec, 0.0)
        out = statistic_distribution(MCConfig(problem, restriction, beta, spec, replications=10_000, seed=100 + k))
        ok &= out.passes
        details.append(f"{name} KS={out.ks:.4f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60
    record(1, "null law of L_n is central F(4,24)", ok, f"{', '.join(details)}, crit=0.0136, {elapsed:.1f}s")


def test_criterion_02_series_vs_monte_carlo():
    start = time.perf_counter()
    q, m, N = 4, 24, 10**6
    d = shrink_constant(q, m)
    worst, checks = 0.0, 0
    for fam_i, (name, spec) in enumerate(SPECS.items()):
        fam = "normal" if name == "normal" else "t"
        for d_i, delta2 in enumerate((0.0, 1.0, 5.0, 20.0)):
            rng = np.random.default_rng(1000 + 10 * fam_i + d_i)
            w0 = dist.k_weights(spec, 0, delta2)
            w1 = dist.k_weights(spec, 1, delta2)
            # degrees of freedom chosen so every simulated quantity has a finite fourth moment
            cases = [
                (dist.gen_f_cdf(dist.GenFParams(q, m, w0), 1.5), 0,
                 lambda nc, g: (noncentral_f(q, m, nc, g) <= 1.5) * 1.0),
                (dist.inv_chisq_moment(w0, 2, q, 6), 0, lambda nc, g: 1.0 / noncentral_chisq(q + 6, nc, g)),
                (dist.inv_chisq_moment(w1, 2, q, 6), 1, lambda nc, g: 1.0 / noncentral_chisq(q + 6, nc, g)),
                (dist.inv_chisq_moment(w1, 4, q, 14), 1, lambda nc, g: noncentral_chisq(q + 14, nc, g) ** -2.0),
                (dist.truncated_f_inv_moment(w0, 1, q, 6, m, d), 0,
                 lambda nc, g: np.where((F := noncentral_f(q + 6, m, nc, g)) < q * d / (q + 6), 1.0 / F, 0.0)),
            ]
            for series_value, h, sampler in cases:
                est, se = mixture_expectation(fam, spec.gamma, h, delta2, sampler, N, rng)
                worst = max(worst, abs(series_value - est) / se if se > 0 else 0.0)
                checks += 1
    elapsed = time.perf_counter() - start
    record(2, "series values agree with Monte Carlo oracles", worst <= 3 and elapsed < 300,
           f"{checks} checks, max |z|={worst:.2f}, {elapsed:.1f}s")


def test_criterion_03_analytic_vs_empirical_risk(design):
    start = time.perf_counter()
    worst = 0.0
    for i, delta2 in enumerate((0.0, 1.0, 2.0, 5.0, 10.0)):
        cfg, res = mc(design, NORMAL, delta2, 200_000, 300 + i)
        analytic = risk_all(cfg.risk_config(), thresholds=False).risks
        for e in ESTIMATORS:
            worst = max(worst, abs(analytic[e] - res.risk[e]) / res.risk_se[e])
    elapsed = time.perf_counter() - start
    record(3, "analytic risks within 3 SE of simulation", worst <= 3 and elapsed < 600,
           f"max |z|={worst:.2f}, {elapsed:.1f}s")


def _dominance(design, a, b, number, title):
    problem, restriction = design
    analytic_ok = True
    for delta2 in default_grid():
        beta = beta_for_delta(problem, restriction, NORMAL, delta2)
        r = risk_all(RiskConfig(problem, restriction, NORMAL, beta), thresholds=False).risks
        analytic_ok &= r[a] <= r[b] + 1e-9
    empirical_ok = True
    for i, delta2 in enumerate((0.0, 1.0, 3.0, 8.0, 20.0)):
        _, res = mc(design, NORMAL, delta2, 20_000, 400 + 10 * number + i)
        empirical_ok &= res.risk[a] - res.risk[b] <= 2 * res.paired_se(a, b)
    record(number, title, analytic_ok and empirical_ok,
           f"analytic 42 points: {analytic_ok}, empirical 5 points: {empirical_ok}")


def test_criterion_04_stein_dominates_gls(design):
    _dominance(design, "stein", "gls", 4, "Stein risk <= GLS risk")


def test_criterion_05_positive_rule_dominates_stein(design):
    _dominance(design, "prs", "stein", 5, "positive-rule risk <= Stein risk")


@pytest.mark.parametrize("family,target", [("normal", 48 / 156), ("t5", 48 / 156 * 3 / 5)])
def test_criterion_06_max_risk_saving(design, family, target):
    start = time.perf_counter()
    _, res = mc(design, SPECS[family], 0.0, 200_000, 600 if family == "normal" else 601)
    saving = relative_risk_saving(res.risk)
    elapsed = time.perf_counter() - start
    record(f"6 ({family})", "relative Stein saving at the null", abs(saving - target) <= 0.03 and elapsed < 600,
           f"empirical={saving:.4f}, target={target:.4f} +/- 0.03, {elapsed:.1f}s")


@pytest.mark.parametrize("alpha,category", [(0.05, 1), (0.6, 2)])
def test_criterion_07_null_ordering(design, alpha, category):
    problem, restriction = design
    beta = beta_for_delta(problem, restriction, NORMAL, 0.0)
    got, _ = h0_ordering(RiskConfig(problem, restriction, NORMAL, beta, alpha=alpha))
    order = (["restricted", "pt", "prs", "stein", "gls"] if category == 1
             else ["restricted", "prs", "stein", "pt", "gls"])
    _, res = mc(design, NORMAL, 0.0, 100_000, 700 + category, alpha=alpha)
    ok = got == category and res.ordering_holds(order, k_se=2)
    risks = " <= ".join(f"{e}={res.risk[e]:.3f}" for e in order)
    record(f"7 (alpha={alpha})", f"category {category} ordering", ok, f"reported category {got}; {risks}")


def test_criterion_08_minimax_constants():
    lo, up, opt = minimax_range(10)
    ok = up == 5 / 3 and opt == 5 / 6 and lo == 0 and shrink_constant(3, 10) == 10 / 36
    record(8, "minimax constants", ok, f"upper={up!r}, optimum={opt!r}, d(3,10)={shrink_constant(3, 10)!r}")


def test_criterion_09_s2_unbiased(design):
    parts = []
    ok = True
    for name, target in (("normal", SIGMA2), ("t5", 5 / 3 * SIGMA2)):
        _, res = mc(design, SPECS[name], 0.0, 100_000, 900 + len(parts))
        s2 = res.s2_values
        z = (s2.mean() - target) / (s2.std(ddof=1) / np.sqrt(len(s2)))
        ok &= abs(z) <= 3
        parts.append(f"{name} mean={s2.mean():.4f} target={target:.4f} z={z:.2f}")
    record(9, "S^2 is unbiased for the error variance", ok, "; ".join(parts))


def test_criterion_10_moment_identities():
    q = 4
    worst = 0.0
    for spec in SPECS.values():
        for delta2 in (0.0, 0.5, 1.0, 2.0, 5.0, 10.0):
            w0 = dist.k_weights(spec, 0, delta2)
            w1 = dist.k_weights(spec, 1, delta2)
            first = (dist.inv_chisq_moment(w0, 2, q, 0) - dist.inv_chisq_moment(w0, 2, q, 2)
                     - 2 * dist.inv_chisq_moment(w0, 4, q, 2))
            second = (dist.inv_chisq_moment(w1, 2, q, 2) - (q - 2) * dist.inv_chisq_moment(w1, 4, q, 2)
                      - delta2 * dist.inv_chisq_moment(w0, 4, q, 4))
            worst = max(worst, abs(first), abs(second))
    record(10, "inverse chi-square moment identities", worst <= 1e-9, f"max residual={worst:.2e}")
