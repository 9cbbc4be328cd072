"""
Closed-form fits
================

The modified estimators need no iteration. Each fit is a handful of sums
over the sample.
"""

import math

import numpy as np

from mmle.distributions import BetaParams, GammaParams, NakagamiParams, sample_beta, sample_gamma, sample_nakagami
from mmle.estimators import mmle_beta, mmle_gamma, mmle_nakagami, modified_eq_residuals

# A two-point gamma sample has a fit you can check by hand:
# lambda = (1 + e) / 2 and phi = 2 (1 + e) / (e - 1).
r = mmle_gamma([1.0, math.e])
print("gamma on [1, e]:", r.params, " expected phi =", 2 * (1 + math.e) / (math.e - 1))

# The beta fit of [1/3, 2/3] is (5, 5).
print("beta on [1/3, 2/3]:", mmle_beta(np.array([1 / 3, 2 / 3])).params)

###############################################################################
# Larger samples
# --------------
# Standard errors come from the plug-in sandwich covariance.

x = sample_gamma(GammaParams(1.5, 2.0), 500, seed=1)
r = mmle_gamma(x)
print("\ngamma(lambda=1.5, phi=2), n=500")
for name, est, se in zip(r.names, r.estimates, r.std_errors):
    print(f"  {name:7s} {est:8.4f}  (se {se:.4f})")

y = sample_nakagami(NakagamiParams(10.0, 4.0), 500, seed=1)
print("nakagami(lambda=10, phi=4):", mmle_nakagami(y).params)

z = sample_beta(BetaParams(3.0, 2.5), 500, seed=1)
rb = mmle_beta(z)
print("beta(3, 2.5):", rb.params, "flags:", rb.flags)

###############################################################################
# The estimates solve the modified likelihood equations
# -----------------------------------------------------

print("\nresiduals at the gamma fit:", modified_eq_residuals("gamma", r.params, x))
print("residuals at the beta fit: ", modified_eq_residuals("beta", rb.params, z))
