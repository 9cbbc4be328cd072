"""
Closed form versus maximum likelihood
=====================================

The maximum likelihood fits solve digamma equations by Newton iteration.
The scale estimate is the sample mean under both methods, so only the
shape differs.
"""

from mmle.distributions import BetaParams, GammaParams, sample_beta, sample_gamma
from mmle.estimators import mmle_beta, mmle_gamma
from mmle.mle import mle_beta, mle_gamma

print(f"{'n':>6s} {'phi mmle':>10s} {'phi mle':>10s}")
for n in (20, 200, 2000, 20000):
    x = sample_gamma(GammaParams(1.5, 2.0), n, seed=n)
    a, b = mmle_gamma(x), mle_gamma(x)
    assert a.params.lam == b.params.lam
    print(f"{n:6d} {a.params.phi:10.4f} {b.params.phi:10.4f}")

###############################################################################
# Beta
# ----
# For beta both shape parameters differ between the two methods.

print(f"\n{'n':>6s} {'alpha mmle':>11s} {'alpha mle':>10s} {'beta mmle':>10s} {'beta mle':>9s}")
for n in (20, 200, 2000, 20000):
    x = sample_beta(BetaParams(3.0, 2.5), n, seed=n)
    a, b = mmle_beta(x), mle_beta(x)
    print(f"{n:6d} {a.params.alpha:11.4f} {b.params.alpha:10.4f} {a.params.beta:10.4f} {b.params.beta:9.4f}")
