import numpy as np
import pytest

from ellreg import EllipticalSpec, LinearRestriction, RegressionProblem

ACCEPTANCE_LINES = []


def ar1(n, rho):
    idx = np.arange(n)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def make_design(n=30, p=6, q=4, seed=1, rho=0.5):
    """Fixed design with AR(1) scatter and H acting on the first q coefficients."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    H = np.hstack([np.eye(q), np.zeros((q, p - q))])
    H[:, min(q, p - 1)] += 0.3
    h = np.linspace(0.5, -0.2, q)
    return RegressionProblem(X, ar1(n, rho)), LinearRestriction(H, h)


@pytest.fixture(scope="session")
def design():
    return make_design()


@pytest.fixture(params=["normal", "t5"], scope="session")
def spec(request):
    if request.param == "normal":
        return EllipticalSpec.normal(2.0)
    return EllipticalSpec.student_t(5.0, 2.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
