# %% [markdown]
# # Which estimator to prefer near the null
#
# At the null the ranking of the preliminary-test estimator against the
# shrinkage estimators depends on the test level. Small levels keep the
# restricted fit most of the time; large levels behave like GLS.

# %%
import numpy as np

from ellreg import EllipticalSpec, LinearRestriction, RegressionProblem, RiskConfig, beta_for_delta
from ellreg import dominance_thresholds, h0_ordering, risk_all

rng = np.random.default_rng(11)
X = rng.standard_normal((30, 6))
H = np.hstack([np.eye(4), np.zeros((4, 2))])
problem, restriction = RegressionProblem(X), LinearRestriction(H, np.zeros(4))
spec = EllipticalSpec.normal()
beta0 = beta_for_delta(problem, restriction, spec, 0.0)

# %%
names = {1: "pt beats prs", 2: "stein beats pt", 3: "prs beats pt beats stein"}
for alpha in (0.01, 0.05, 0.2, 0.3, 0.4, 0.6):
    cfg = RiskConfig(problem, restriction, spec, beta0, alpha=alpha)
    risks = risk_all(cfg, thresholds=False).risks
    cat, info = h0_ordering(cfg)
    print(f"alpha={alpha:<5} category {cat} ({names[cat]:<25}) pt={risks['pt']:.3f} prs={risks['prs']:.3f} stein={risks['stein']:.3f}")

# %% [markdown]
# Crossover points along the ray, in units of the standardized distance.
# With a non-identity weight the restricted/GLS crossover is only bracketed.

# %%
for W in (None, np.eye(6)):
    th = dominance_thresholds(RiskConfig(problem, restriction, spec, beta0, W=W))
    label = "W = C" if W is None else "W = I"
    print(label, {k: (round(v, 3) if isinstance(v, float) else v) for k, v in th.items()})
