r"""
Closed-form modified maximum likelihood estimators.

A baseline density is embedded in a larger family with extra parameters.
Part of the usual score equations is then replaced by score equations in
the extra parameters, evaluated at the values that recover the baseline.
For the generalized gamma embedding (power ``alpha0``) and the
generalized beta embedding (support ``(0, 1)``) the resulting system is
linear in a transform of the parameters, which gives the estimators below.

Power-gamma family, with ``Y = X**alpha0``::

    lam_hat = mean(Y)
    phi_hat = sum(Y) / (sum(Y log Y) - sum(Y) sum(log Y) / n)

Beta family::

    alpha_hat = sum(1/X) / (sum((1-X)/X) - n**2 / sum(X/(1-X)))
    beta_hat  = sum(1/(1-X)) / (sum(X/(1-X)) - n**2 / sum((1-X)/X))

Asymptotic covariances follow from the sandwich ``J^{-1} K J^{-T}``
built from the expected derivative ``J`` and covariance ``K`` of the
estimating functions.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from mmle.distributions import (
    POSITIVE,
    UNIT_INTERVAL,
    BetaParams,
    GammaParams,
    GeneralizedGammaParams,
    SampleBatch,
    expect_beta,
    expect_generalized_gamma,
)
from mmle.errors import DegenerateSample, DomainError, SingularMatrix
from mmle.special import digamma, trigamma

AVAR_OUT_OF_DOMAIN = "avar_out_of_domain"
NEAR_DEGENERATE = "near_degenerate"

_NEAR_DEGENERATE_RTOL = 1e-10
SPREAD_RTOL = 1e-3

PARAM_NAMES = {"power_gamma": ("lambda", "phi"), "beta": ("alpha", "beta")}


@dataclass(frozen=True, eq=False)
class EstimateReport:
    """Point estimates with plug-in asymptotic covariance.

    Attributes
    ----------
    params : GammaParams or BetaParams
        The estimates. Power-gamma estimates are always reported as the
        ``(lam, phi)`` of the gamma law of ``X**alpha0``.
    avar : ndarray of shape (2, 2) or None
        Asymptotic covariance of ``sqrt(n) * (estimate - truth)`` at the
        estimates; None when the covariance does not exist there.
    std_errors : tuple of float or None
        ``sqrt(diag(avar) / n)``.
    n : int
    flags : frozenset of str
        Subset of ``{"avar_out_of_domain", "near_degenerate"}``.
    family, method : str
    alpha0 : float or None
        Power of the generalized gamma embedding; None for beta.
    """

    params: object
    avar: np.ndarray
    std_errors: tuple
    n: int
    flags: frozenset = field(default_factory=frozenset)
    family: str = "power_gamma"
    method: str = "mmle"
    alpha0: float = None

    @property
    def names(self):
        return PARAM_NAMES[self.family]

    @property
    def estimates(self):
        return self.params.as_array()

    def as_dict(self):
        names = self.names
        est = self.estimates
        out = {
            "n": self.n,
            "estimates": {k: float(v) for k, v in zip(names, est)},
            "std_errors": None,
            "avar": None,
            "flags": sorted(self.flags),
        }
        if self.std_errors is not None:
            out["std_errors"] = {k: float(v) for k, v in zip(names, self.std_errors)}
        if self.avar is not None:
            out["avar"] = [[float(v) for v in row] for row in self.avar]
        return out


@dataclass(frozen=True, eq=False)
class MatrixPair:
    """Expected negative derivative `J` and covariance `K` of the estimating functions."""

    J: np.ndarray
    K: np.ndarray


def _report(params, avar, n, flags, family, method, alpha0=None):
    se = None
    if avar is not None:
        avar = np.asarray(avar, dtype=float)
        se = tuple(float(v) for v in np.sqrt(np.clip(np.diag(avar), 0.0, None) / n))
    return EstimateReport(params, avar, se, n, frozenset(flags), family, method, alpha0)


def _require_sample(sample, support):
    if not isinstance(sample, SampleBatch):
        sample = SampleBatch(sample, support)
    if sample.support != support:
        raise DomainError(f"expected a {support} sample, got {sample.support}")
    if sample.n < 2:
        raise ValueError("estimation needs at least two observations")
    if sample.degenerate:
        raise DegenerateSample("all observations are equal")
    return sample


# -- power-gamma family -----------------------------------------------------

def power_gamma_avar(params):
    """Diagonal asymptotic covariance ``diag(lam**2/phi, phi**3 trigamma(phi+1) + phi**2)``."""
    lam, phi = params.lam, params.phi
    return np.diag([lam * lam / phi, phi**3 * trigamma(phi + 1.0) + phi * phi])


def mmle_power_gamma(sample, alpha0=1.0):
    """Closed-form estimates for the generalized gamma member with power `alpha0`.

    ``alpha0`` equal to 1, 2 or 3 gives the gamma, Nakagami-m and
    Wilson-Hilferty estimators.

    Raises
    ------
    DegenerateSample
        If all observations are equal.
    """
    if not alpha0 > 0:
        raise DomainError("alpha0 must be positive")
    sample = _require_sample(sample, POSITIVE)
    y = sample.values**alpha0
    lam, denom = _power_gamma_parts(y[None, :])
    lam, denom = float(lam[0]), float(denom[0])
    if not denom > 0:
        raise DegenerateSample("denominator of the shape estimator vanished")
    flags = set()
    if denom < _NEAR_DEGENERATE_RTOL * lam:
        flags.add(NEAR_DEGENERATE)
    params = GammaParams(lam, lam / denom)
    return _report(params, power_gamma_avar(params), y.size, flags, "power_gamma", "mmle", float(alpha0))


def mean_rows(y):
    """Row means by pairwise summation; shared so both estimators agree bit for bit."""
    return y.sum(axis=-1) / y.shape[-1]


def _power_gamma_parts(y):
    # mean(Y) and mean(Y (log Y - mean log Y)) = mean((Y - m)(L - mean L)) with
    # L = log(Y/m) = log1p((Y - m)/m), m = mean(Y); every term is accurate
    lam = mean_rows(y)
    m = lam[..., None]
    dy = y - m
    L = np.log1p(dy / m)
    denom = (dy * (L - L.mean(axis=-1, keepdims=True))).mean(axis=-1)
    return lam, denom


def mmle_gamma(sample):
    return mmle_power_gamma(sample, 1.0)


def mmle_nakagami(sample):
    return mmle_power_gamma(sample, 2.0)


def mmle_wilson_hilferty(sample):
    return mmle_power_gamma(sample, 3.0)


def power_gamma_batch(y):
    """Row-wise closed-form estimates for a 2-D array of ``X**alpha0`` values.

    Returns ``(lam, phi)`` arrays; rows with a non-positive denominator
    get ``phi = nan``.
    """
    lam, denom = _power_gamma_parts(np.asarray(y, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(denom > 0, lam / denom, np.nan)
    return lam, phi


# -- beta family ------------------------------------------------------------

def beta_q(y, z):
    """The rational function ``Q(y, z)`` offered in closed form for the beta
    shape variances (``y, z > 2``).

    This equals the diagonal of :func:`sandwich_covariance` applied to
    :func:`jk_matrices_beta` as laid out there. Monte Carlo does not support
    it as the variance of the estimators; see :func:`beta_avar`.
    """
    if not (y > 2 and z > 2):
        raise DomainError("Q(y, z) requires y > 2 and z > 2")
    num = y * (y - 1.0) ** 2 * (4 * y * z * z - 6 * z * z - 10 * y * z + 5 * y + 16 * z - 10)
    return num / ((y - 2.0) * (z - 2.0) * (y + z - 1.0))


def _beta_parts(x):
    """Row sums of ``1/X``, ``1/(1-X)``, ``U = (1-X)/X``, ``V = X/(1-X)`` and
    ``P = sum(U) sum(V) - n**2``.

    ``P`` is the common numerator of both denominators. It equals
    ``-n * sum((U - mean U)(V - mean V))``; the deviations are formed
    relative to the sample mean of ``X`` so that clustered samples keep
    full relative accuracy.
    """
    n = x.shape[-1]
    m = mean_rows(x)[..., None]
    d = x - m
    du = -d / (x * m)                       # U - U(m)
    dv = d / ((1.0 - x) * (1.0 - m))        # V - V(m)
    du -= du.mean(axis=-1, keepdims=True)
    dv -= dv.mean(axis=-1, keepdims=True)
    P = -n * (du * dv).sum(axis=-1)
    s_inv = (1.0 / x).sum(axis=-1)
    s_inv1m = (1.0 / (1.0 - x)).sum(axis=-1)
    s_u = ((1.0 - x) / x).sum(axis=-1)
    s_v = (x / (1.0 - x)).sum(axis=-1)
    return s_inv, s_inv1m, s_u, s_v, P


def mmle_beta(sample):
    """Closed-form estimates for the beta shapes.

    Estimates are returned for any non-degenerate sample. When either
    estimate is at most 2 the covariance does not exist; the report then
    has ``avar=None`` and the ``avar_out_of_domain`` flag.
    """
    sample = _require_sample(sample, UNIT_INTERVAL)
    x = sample.values
    s_inv, s_inv1m, s_u, s_v, P = (float(v[0]) for v in _beta_parts(x[None, :]))
    if not P > 0:
        raise DegenerateSample("denominators of the beta estimators vanished")
    flags = set()
    # denominators are P / s_v and P / s_u
    if P < _NEAR_DEGENERATE_RTOL * s_u * s_v:
        flags.add(NEAR_DEGENERATE)
    params = BetaParams(s_inv * s_v / P, s_inv1m * s_u / P)
    avar = None
    if not params.avar_valid:
        flags.add(AVAR_OUT_OF_DOMAIN)
    else:
        try:
            avar = beta_avar(params)
        except SingularMatrix:
            # J loses all precision for huge shapes from clustered samples
            flags.add(NEAR_DEGENERATE)
    return _report(params, avar, x.size, flags, "beta", "mmle")


def beta_batch(x):
    """Row-wise closed-form beta estimates for a 2-D array; nan where undefined."""
    s_inv, s_inv1m, s_u, s_v, P = _beta_parts(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(P > 0, s_inv * s_v / P, np.nan)
        b = np.where(P > 0, s_inv1m * s_u / P, np.nan)
    return a, b


# -- estimating equations ---------------------------------------------------

def _power_gamma_scores(x, lam, phi, alpha0):
    # factored through r = X**alpha0/lam - 1 to avoid cancelling large terms
    r = x**alpha0 / lam - 1.0
    d_lam = -(phi / lam) * r
    d_alpha = 1.0 / alpha0 - phi * r * np.log(x)
    return d_lam, d_alpha


def _beta_scores(x, alpha, beta):
    # -(alpha-1)/x + (alpha+beta-1) rewritten without the common offset 1/x = U + 1
    d_a = beta - (alpha - 1.0) * (1.0 - x) / x
    d_c = (beta - 1.0) * x / (1.0 - x) - alpha
    return d_a, d_c


def _family(family, alpha0):
    if family in ("gamma", "nakagami", "wilson_hilferty"):
        return "power_gamma", {"gamma": 1.0, "nakagami": 2.0, "wilson_hilferty": 3.0}[family]
    if family in ("power_gamma", "beta"):
        return family, alpha0
    raise ValueError(f"unknown family {family!r}")


def modified_eq_residuals(family, params, sample, alpha0=1.0):
    """Mean left-hand sides of the modified likelihood equations.

    Parameters
    ----------
    family : {"power_gamma", "gamma", "nakagami", "wilson_hilferty", "beta"}
    params : GammaParams or BetaParams
    sample : SampleBatch or array_like
    alpha0 : float
        Power for ``family="power_gamma"``.

    Returns
    -------
    ndarray of shape (2,)
        For power-gamma the averaged scores in ``lam`` and in the power
        parameter; for beta the averaged scores in the two support
        endpoints. Both vanish at the closed-form estimates.
    """
    family, alpha0 = _family(family, alpha0)
    if family == "power_gamma":
        x = _as_values(sample, POSITIVE)
        d1, d2 = _power_gamma_scores(x, params.lam, params.phi, alpha0)
    else:
        x = _as_values(sample, UNIT_INTERVAL)
        d1, d2 = _beta_scores(x, params.alpha, params.beta)
    n = x.size
    return np.array([math.fsum(d1) / n, math.fsum(d2) / n])


def well_spread(sample, rtol=SPREAD_RTOL):
    """True when ``(max - min) / max`` of the sample is at least `rtol`.

    Residuals are evaluated at estimates rounded to double precision. For
    tightly clustered samples the estimates grow like the inverse squared
    spread and the residuals inherit a rounding floor proportional to them,
    so the 1e-8 residual check is only meaningful above this spread.
    """
    x = sample.values if isinstance(sample, SampleBatch) else np.asarray(sample, dtype=float)
    hi = float(np.max(x))
    return (hi - float(np.min(x))) >= rtol * hi


def _as_values(sample, support):
    if isinstance(sample, SampleBatch):
        if sample.support != support:
            raise DomainError(f"expected a {support} sample")
        return sample.values
    return SampleBatch(sample, support).values


# -- J, K and the sandwich ----------------------------------------------------

def jk_matrices_power_gamma(params, alpha0=1.0):
    """`J` and `K` for the power-gamma estimating equations.

    Rows of ``J`` index the parameters ``(lam, phi)`` and columns the
    equations (``lam`` score, power score). The power score scales as
    ``1/alpha0``, which rescales one column of ``J`` and one row and
    column of ``K`` and leaves the sandwich unchanged.
    """
    lam, phi = params.lam, params.phi
    log_ratio = math.log(phi / lam)
    psi = digamma(phi)
    cross = (phi * log_ratio - phi * psi - 1.0) / lam
    i_aa = (log_ratio * (phi * log_ratio - 2.0 * phi * psi - 2.0)
            + phi * trigamma(phi) + 2.0 * psi + phi * psi * psi + 1.0)
    scale = np.diag([1.0, 1.0 / alpha0])
    J = np.array([[phi / (lam * lam), cross], [0.0, 1.0 / phi]]) @ scale
    K = scale @ np.array([[phi / (lam * lam), cross], [cross, i_aa]]) @ scale
    return MatrixPair(J, K)


def jk_matrices_beta(params):
    """`J` and `K` for the beta estimating equations, for shapes above 2.

    Here rows of ``J`` index the equations (lower, upper endpoint score)
    and columns the parameters ``(alpha, beta)``, which is the transpose
    of the layout used by :func:`jk_matrices_power_gamma`.

    Raises
    ------
    DomainError
        If either shape is at most 2, where ``K`` is infinite.
    """
    a, b = params.alpha, params.beta
    if not (a > 2 and b > 2):
        raise DomainError(f"J/K need alpha > 2 and beta > 2, got ({a}, {b})")
    s = a + b - 1.0
    J = np.array([[b / (a - 1.0), -1.0], [1.0, -a / (b - 1.0)]])
    K = np.array([[b * s / (a - 2.0), s], [s, a * s / (b - 2.0)]])
    return MatrixPair(J, K)


def sandwich_covariance(pair):
    """``inv(J).T @ K @ inv(J)`` for a parameter-major `J`.

    Raises
    ------
    SingularMatrix
        If ``|det J| < 1e-300``.
    """
    J = np.asarray(pair.J, dtype=float)
    if abs(np.linalg.det(J)) < 1e-300:
        raise SingularMatrix("J is singular")
    Jinv = np.linalg.inv(J)
    out = Jinv.T @ np.asarray(pair.K, dtype=float) @ Jinv
    return 0.5 * (out + out.T)


def beta_avar(params):
    """Asymptotic covariance of the closed-form beta estimators.

    The sandwich with `J` in parameter-major layout, i.e. the transpose of
    the matrix returned by :func:`jk_matrices_beta`.
    """
    pair = jk_matrices_beta(params)
    return sandwich_covariance(MatrixPair(pair.J.T, pair.K))


# -- invariance -----------------------------------------------------------------

def invariance_map(report, forward, inverse=None):
    """Apply a componentwise one-to-one map to the estimates.

    Parameters
    ----------
    report : EstimateReport
    forward : pair of callables
        ``(pi_1, pi_2)``, applied to the first and second estimate.
    inverse : pair of callables, optional
        When given, checked to recover the estimates to 1e-12 relative.

    Returns
    -------
    ndarray of shape (2,)
    """
    est = report.estimates
    out = np.array([float(f(v)) for f, v in zip(forward, est)])
    if not np.all(np.isfinite(out)):
        raise DomainError("estimate outside the domain of the map")
    if inverse is not None:
        back = np.array([float(g(v)) for g, v in zip(inverse, out)])
        if not np.allclose(back, est, rtol=1e-12, atol=0.0):
            raise ValueError("inverse does not undo forward at the estimates")
    return out


def reparameterized_mmle(family, sample, inverse, start, alpha0=1.0, tol=1e-14):
    """Solve the modified equations in new coordinates by root finding.

    `inverse` maps new coordinates ``(u1, u2)`` back to the original
    parameters componentwise. No closed form is used, so this serves as an
    independent route to the estimates.
    """
    family, alpha0 = _family(family, alpha0)
    make = GammaParams if family == "power_gamma" else BetaParams

    def fun(u):
        try:
            p = make(float(inverse[0](u[0])), float(inverse[1](u[1])))
        except DomainError:
            return np.full(2, 1e6)
        return modified_eq_residuals(family, p, sample, alpha0)

    sol = optimize.root(fun, np.asarray(start, dtype=float), method="hybr", tol=tol)
    # hybr reports failure when it cannot shrink the step further, which
    # happens at the rounding floor; accept that if the residual is tiny
    if not sol.success and np.max(np.abs(fun(sol.x))) > 1e-10:
        raise RuntimeError(f"root finding failed: {sol.message}")
    return sol.x


# -- score expectation check ----------------------------------------------------

def verify_score_zero(family, params, alpha0=1.0, n=64, panels=16):
    """Quadrature values of the expected estimating functions at the truth.

    Both numbers are analytically zero when the estimating equations are
    unbiased at `params`.
    """
    family, alpha0 = _family(family, alpha0)
    if family == "power_gamma":
        gg = GeneralizedGammaParams(params.lam, params.phi, alpha0)
        e1 = expect_generalized_gamma(
            lambda x: _power_gamma_scores(x, params.lam, params.phi, alpha0)[0], gg, n, panels)
        e2 = expect_generalized_gamma(
            lambda x: _power_gamma_scores(x, params.lam, params.phi, alpha0)[1], gg, n, panels)
    else:
        e1 = expect_beta(lambda x: _beta_scores(x, params.alpha, params.beta)[0], params, n, panels)
        e2 = expect_beta(lambda x: _beta_scores(x, params.alpha, params.beta)[1], params, n, panels)
    return e1, e2

