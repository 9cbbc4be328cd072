"""
Asymptotic covariance and the estimating equations
==================================================

The covariance of the closed-form estimators is the sandwich
``(J^-1)^T K J^-1``. For the gamma family it is diagonal with entries
``lambda^2 / phi`` and ``phi^3 trigamma(phi + 1) + phi^2``.
"""

import numpy as np

from mmle.distributions import BetaParams, GammaParams
from mmle.estimators import (
    beta_avar,
    beta_q,
    jk_matrices_beta,
    jk_matrices_power_gamma,
    sandwich_covariance,
    verify_score_zero,
)
from mmle.mle import beta_fisher_avar, gamma_fisher_avar

p = GammaParams(1.5, 2.0)
print("gamma sandwich:\n", sandwich_covariance(jk_matrices_power_gamma(p)))
print("gamma inverse Fisher information:\n", gamma_fisher_avar(p))

###############################################################################
# Beta
# ----
# ``jk_matrices_beta`` lays J out with one row per equation. The sandwich
# built from it has diagonal Q(alpha, beta). With the consistent layout,
# one row per parameter, the covariance matches simulation.

b = BetaParams(3.0, 2.5)
print("\nliteral sandwich diagonal:", np.diag(sandwich_covariance(jk_matrices_beta(b))))
print("Q(3, 2.5), Q(2.5, 3):     ", beta_q(3.0, 2.5), beta_q(2.5, 3.0))
print("consistent covariance:\n", beta_avar(b))
print("inverse Fisher information:\n", beta_fisher_avar(b))

###############################################################################
# The estimating functions have zero mean at the truth
# ----------------------------------------------------

for family, params in [("gamma", p), ("nakagami", GammaParams(10.0, 4.0)), ("beta", b)]:
    print(f"{family:9s} E[score] =", verify_score_zero(family, params))
