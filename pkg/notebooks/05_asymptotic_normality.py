"""
Asymptotic normality
====================

At large n the standardized estimates ``sqrt(n) (estimate - truth) / se``
should have unit variance and cover +-1.96 about 95% of the time.
"""

import numpy as np

from mmle.distributions import BetaParams, GammaParams
from mmle.estimators import beta_q
from mmle.montecarlo import ExperimentConfig, normality_check


def show(label, stats):
    for s in stats:
        print(f"{label:28s} {s.parameter:7s} var {s.variance:6.3f}  coverage {s.coverage:6.3f}")


cfg = ExperimentConfig("gamma", GammaParams(1.5, 2.0), (10,), 1000, master_seed=3, estimators=("mmle",))
show("gamma", normality_check(cfg, 2000))

cfg = ExperimentConfig("beta", BetaParams(3.0, 2.5), (10,), 1000, master_seed=3, estimators=("mmle",))
show("beta, consistent sandwich", normality_check(cfg, 2000))

###############################################################################
# Standardizing with Q instead overstates the variance. The standardized
# variance then falls well below one.

q = np.diag([beta_q(3.0, 2.5), beta_q(2.5, 3.0)])
show("beta, Q", normality_check(cfg, 2000, avar=q))
