"""Estimation and risk analysis for linear models with elliptically contoured errors."""

from .distributions import (
    GenFParams,
    SeriesWeights,
    central_f_cdf,
    central_f_quantile,
    gen_chisq_cdf,
    gen_f_cdf,
    gen_f_pdf,
    incomplete_beta,
    k_weights,
)
from .errors import EllRegError
from .estimators import EstimateBundle, fit_all, fit_gls, fit_restricted, shrink_constant
from .model import (
    CoreMatrices,
    EllipticalSpec,
    LinearRestriction,
    RegressionProblem,
    core_matrices,
    sample_errors,
    validate_problem,
)
from .montecarlo import MCConfig, MCResult, beta_for_delta, empirical_risk, statistic_distribution, sweep
from .risk import (
    RiskConfig,
    RiskReport,
    dominance_thresholds,
    h0_ordering,
    max_risk_saving,
    minimax_range,
    risk_all,
)

__version__ = "0.1.0"
