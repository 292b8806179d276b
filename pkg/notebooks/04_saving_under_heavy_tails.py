# %% [markdown]
# # How much does shrinkage save at the null?
#
# With W = C the Stein estimator's relative saving over GLS at the null is
# m(q - 2) / (p (m + 2)). A commonly quoted Student-t version multiplies this
# by (nu - 2) / nu. Conditionally on the mixing variable the saving is the
# same fraction of the conditional risk, so averaging over the mixing law
# leaves it unchanged. The simulation agrees.

# %%
import numpy as np

from ellreg import EllipticalSpec, LinearRestriction, MCConfig, RegressionProblem, beta_for_delta
from ellreg import empirical_risk, max_risk_saving, risk_all

rng = np.random.default_rng(5)
n, p, q = 30, 6, 4
problem = RegressionProblem(rng.standard_normal((n, p)))
restriction = LinearRestriction(np.hstack([np.eye(q), np.zeros((q, p - q))]), np.zeros(q))

# %%
for spec in (EllipticalSpec.normal(), EllipticalSpec.student_t(5.0), EllipticalSpec.student_t(3.0)):
    cfg = MCConfig(problem, restriction, beta_for_delta(problem, restriction, spec, 0.0), spec, replications=100_000, seed=2)
    sim = empirical_risk(cfg).risk
    ana = risk_all(cfg.risk_config(), thresholds=False).risks
    quoted = max_risk_saving(p, q, n - p, spec)
    print(
        f"{spec.describe():<26} simulated {(sim['gls'] - sim['stein']) / sim['gls']:.4f}"
        f"  analytic {(ana['gls'] - ana['stein']) / ana['gls']:.4f}  quoted {quoted:.4f}"
    )
