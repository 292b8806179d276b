from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellreg import estimators as est
from ellreg.errors import DegenerateStatisticError, UnsupportedError
from ellreg.model import LinearRestriction, RegressionProblem

from conftest import ar1


@st.composite
def fitted(draw, min_q=1):
    p = draw(st.integers(min_q + 1, 7))
    q = draw(st.integers(min_q, p - 1))
    n = draw(st.integers(p + 3, p + 25))
    rng = np.random.default_rng(draw(st.integers(0, 2**31)))
    X = rng.standard_normal((n, p))
    V = ar1(n, draw(st.floats(-0.5, 0.8)))
    y = X @ rng.standard_normal(p) + rng.standard_normal(n)
    restriction = LinearRestriction(rng.standard_normal((q, p)), rng.standard_normal(q))
    return RegressionProblem(X, V, y), restriction


@settings(max_examples=100, deadline=None)
@given(fitted())
def test_restricted_estimate_satisfies_restriction(case):
    problem, restriction = case
    b = est.fit_gls(problem)
    r = est.fit_restricted(problem, restriction, b)
    scale = 1 + np.abs(restriction.H).sum(axis=1) * np.abs(r).max()
    assert np.all(np.abs(restriction.H @ r - restriction.h) <= 1e-10 * scale)


@settings(max_examples=50, deadline=None)
@given(fitted(min_q=3))
def test_positive_rule_lies_on_segment(case):
    problem, restriction = case
    bundle = est.fit_all(problem, restriction)
    diff = bundle.beta_gls - bundle.beta_restricted
    step = max(0.0, 1.0 - bundle.d / bundle.L_n)
    np.testing.assert_allclose(bundle.beta_prs, bundle.beta_restricted + step * diff, atol=1e-10)
    assert 0.0 <= step <= 1.0


@settings(max_examples=30, deadline=None)
@given(fitted(min_q=3), st.floats(0.2, 5.0))
def test_equivariance(case, c):
    problem, restriction = case
    base = est.fit_all(problem, restriction)
    shift = np.arange(problem.p, dtype=float)
    moved = est.fit_all(
        problem.with_response(c * problem.y + problem.X @ shift),
        LinearRestriction(restriction.H, c * restriction.h + restriction.H @ shift),
    )
    assert moved.L_n == pytest.approx(base.L_n, rel=1e-8)
    for name in ("beta_gls", "beta_restricted", "beta_pt", "beta_s", "beta_prs"):
        np.testing.assert_allclose(getattr(moved, name), c * getattr(base, name) + shift, rtol=1e-7, atol=1e-8)


def _zero_statistic_case():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((20, 5))
    problem = RegressionProblem(X, y=rng.standard_normal(20))
    H = rng.standard_normal((3, 5))
    return problem, LinearRestriction(H, H @ est.fit_gls(problem))


def test_restriction_holding_at_gls_makes_estimators_coincide():
    problem, restriction = _zero_statistic_case()
    with pytest.warns(RuntimeWarning):
        bundle = est.fit_all(problem, restriction, on_degenerate="prse")
    assert bundle.L_n == pytest.approx(0.0, abs=1e-20)
    np.testing.assert_allclose(bundle.beta_pt, bundle.beta_restricted)
    np.testing.assert_allclose(bundle.beta_prs, bundle.beta_restricted)
    assert any({"restricted", "pt", "prs"} <= set(g) for g in bundle.coinciding(atol=1e-12))


def test_zero_statistic_raises_by_default():
    problem, restriction = _zero_statistic_case()
    with pytest.raises(DegenerateStatisticError):
        est.fit_all(problem, restriction)


def test_zero_residual_variance():
    X = np.random.default_rng(1).standard_normal((8, 4))
    problem = RegressionProblem(X, y=X @ np.ones(4))
    b = est.fit_gls(problem)
    with pytest.warns(RuntimeWarning):
        s2 = est.s2(problem, b)
    assert s2 < 1e-25
    with pytest.raises(DegenerateStatisticError):
        est.test_statistic(problem, LinearRestriction([[1.0, 0, 0, 0]], [0.0]), b, 0.0)


def test_pt_tie_selects_unrestricted():
    a, b = np.ones(3), np.zeros(3)
    np.testing.assert_array_equal(est.fit_pt(a, b, 2.5, 2.5), a)
    np.testing.assert_array_equal(est.fit_pt(a, b, 2.4999, 2.5), b)
    np.testing.assert_array_equal(est.fit_positive_rule(a, b, 0.4, 0.4), b)


def test_q_two_marks_shrinkage_unsupported():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((15, 4))
    problem = RegressionProblem(X, y=rng.standard_normal(15))
    bundle = est.fit_all(problem, LinearRestriction(np.eye(4)[:2], [0.0, 0.0]))
    assert bundle.beta_s is None and bundle.beta_prs is None and bundle.d is None
    assert any("unsupported" in n for n in bundle.notes)
    with pytest.raises(UnsupportedError):
        est.shrink_constant(2, 10)


def test_shrink_constants_exact():
    assert Fraction(est.shrink_constant(3, 10)).limit_denominator(1000) == Fraction(10, 36)
    assert est.shrink_constant(3, 10) == 10 / 36
    assert est.shrink_constant(4, 24) == 48 / 104
