r"""
Parameter types, log-densities, samplers and expectation helpers.

The gamma law is kept in the mean/shape parameterization

.. math::
    f(x; \lambda, \phi) = \frac{1}{\Gamma(\phi)} \left(\frac{\phi}{\lambda}\right)^\phi
    x^{\phi - 1} e^{-\phi x / \lambda}, \qquad x > 0,

so ``lam`` is the mean and ``phi`` the shape. The generalized gamma adds a
power parameter ``alpha``: ``X**alpha`` then follows the gamma law above.
Nakagami-m and Wilson-Hilferty are the members with ``alpha`` equal to 2
and 3. Conversions to numpy's shape/scale form happen only in the samplers.
"""

from dataclasses import dataclass

import numpy as np

from mmle.errors import DomainError
from mmle.special import expectation_quadrature, gauss_legendre, log_beta, log_gamma

_MASK64 = 0xFFFFFFFFFFFFFFFF

POSITIVE = "positive"
UNIT_INTERVAL = "unit_interval"

#: powers that select the named members of the generalized gamma family
POWER = {"gamma": 1.0, "nakagami": 2.0, "wilson_hilferty": 3.0}


def _require(cond, msg):
    if not cond:
        raise DomainError(msg)


def _finite_positive(value, name):
    _require(np.isfinite(value) and value > 0, f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class GammaParams:
    """Gamma law with mean `lam` and shape `phi`."""

    lam: float
    phi: float

    def __post_init__(self):
        _finite_positive(self.lam, "lam")
        _finite_positive(self.phi, "phi")

    def as_array(self):
        return np.array([self.lam, self.phi])


@dataclass(frozen=True)
class NakagamiParams:
    """Nakagami-m law with spread `lam` and shape ``phi > 0.5``."""

    lam: float
    phi: float

    def __post_init__(self):
        _finite_positive(self.lam, "lam")
        _require(np.isfinite(self.phi) and self.phi > 0.5, f"phi must exceed 0.5, got {self.phi!r}")

    def as_array(self):
        return np.array([self.lam, self.phi])


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float

    def __post_init__(self):
        _finite_positive(self.alpha, "alpha")
        _finite_positive(self.beta, "beta")

    @property
    def avar_valid(self):
        """True when both shapes exceed 2, where the closed-form covariance exists."""
        return self.alpha > 2 and self.beta > 2

    def as_array(self):
        return np.array([self.alpha, self.beta])


@dataclass(frozen=True)
class GeneralizedGammaParams:
    lam: float
    phi: float
    alpha: float

    def __post_init__(self):
        _finite_positive(self.lam, "lam")
        _finite_positive(self.phi, "phi")
        _finite_positive(self.alpha, "alpha")


@dataclass(frozen=True)
class GeneralizedBetaParams:
    """Beta law stretched to the open interval ``(a, c)``."""

    alpha: float
    beta: float
    a: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        _require(self.alpha > 2 and self.beta > 2, "generalized beta requires alpha > 2 and beta > 2")
        _require(self.a < self.c, "need a < c")


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """A validated one-dimensional sample.

    Parameters
    ----------
    values : array_like
        Observations; copied into a read-only float array.
    support : {"positive", "unit_interval"}
        Declared support. Every value must lie strictly inside it.

    Attributes
    ----------
    degenerate : bool
        True when all values agree within relative tolerance 1e-12.
    """

    values: np.ndarray
    support: str = POSITIVE

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).ravel()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.support not in (POSITIVE, UNIT_INTERVAL):
            raise ValueError(f"unknown support {self.support!r}")
        _require(vals.size >= 1, "sample is empty")
        bad = np.flatnonzero(~_inside(vals, self.support))
        if bad.size:
            i = int(bad[0])
            raise DomainError(f"value {vals[i]!r} at index {i} is outside the {self.support} support")

    @property
    def n(self):
        return self.values.size

    @property
    def degenerate(self):
        lo, hi = self.values.min(), self.values.max()
        return bool(hi - lo <= 1e-12 * max(abs(lo), abs(hi)))

    def __len__(self):
        return self.values.size

    def transformed(self, power):
        """Sample of ``values**power`` on the positive axis."""
        return SampleBatch(self.values**power, POSITIVE)

    def reflected(self):
        """Sample of ``1 - values`` (unit-interval samples only)."""
        _require(self.support == UNIT_INTERVAL, "reflection needs a unit_interval sample")
        return SampleBatch(1.0 - self.values, UNIT_INTERVAL)


def _inside(x, support):
    ok = np.isfinite(x) & (x > 0)
    if support == UNIT_INTERVAL:
        ok &= x < 1
    return ok


def _check_x(x, support):
    arr = np.asarray(x, dtype=float)
    _require(np.all(_inside(arr, support)), f"x outside the {support} support")
    return arr


def _ret(out, x):
    return float(out) if np.ndim(x) == 0 else out


# -- log densities ---------------------------------------------------------

def log_pdf_gamma(params, x):
    """Log-density of the gamma law in mean/shape form."""
    xa = _check_x(x, POSITIVE)
    lam, phi = params.lam, params.phi
    out = phi * np.log(phi / lam) - log_gamma(phi) + (phi - 1.0) * np.log(xa) - (phi / lam) * xa
    return _ret(out, x)


def log_pdf_generalized_gamma(params, x):
    xa = _check_x(x, POSITIVE)
    lam, phi, alpha = params.lam, params.phi, params.alpha
    out = (np.log(alpha) + phi * np.log(phi / lam) - log_gamma(phi)
           + (alpha * phi - 1.0) * np.log(xa) - (phi / lam) * xa**alpha)
    return _ret(out, x)


def log_pdf_nakagami(params, x):
    """Generalized gamma log-density with the power fixed at 2."""
    return log_pdf_generalized_gamma(GeneralizedGammaParams(params.lam, params.phi, 2.0), x)


def log_pdf_wilson_hilferty(params, x):
    """Generalized gamma log-density with the power fixed at 3."""
    return log_pdf_generalized_gamma(GeneralizedGammaParams(params.lam, params.phi, 3.0), x)


def log_pdf_beta(params, x):
    xa = _check_x(x, UNIT_INTERVAL)
    a, b = params.alpha, params.beta
    out = (a - 1.0) * np.log(xa) + (b - 1.0) * np.log1p(-xa) - log_beta(a, b)
    return _ret(out, x)


def log_pdf_generalized_beta(params, x):
    xa = np.asarray(x, dtype=float)
    a, c = params.a, params.c
    _require(np.all((xa > a) & (xa < c)), "x outside (a, c)")
    al, be = params.alpha, params.beta
    out = ((al - 1.0) * np.log(xa - a) + (be - 1.0) * np.log(c - xa)
           - (al + be - 1.0) * np.log(c - a) - log_beta(al, be))
    return _ret(out, x)


# -- random variates -------------------------------------------------------

def derive_seed(master_seed, *parts):
    """Mix a 64-bit master seed with integer coordinates into a child seed.

    Each part is folded in with a splitmix64 finalizer, so the child seed
    depends only on ``(master_seed, *parts)`` and never on call order.
    """
    h = int(master_seed) & _MASK64
    for p in (*parts, len(parts)):
        h = _splitmix64((h ^ (int(p) & _MASK64)) + 0x9E3779B97F4A7C15)
    return h


def _splitmix64(z):
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _generator(seed):
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


def _standard_gamma(rng, shape, n):
    # numpy uses Marsaglia-Tsang squeeze/rejection with the shape boost for shape < 1
    return rng.standard_gamma(shape, size=n)


def _gamma_draws(lam, phi, n, seed):
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _generator(seed)
    return (lam / phi) * _standard_gamma(rng, phi, n)


def sample_gamma(params, n, seed):
    """Draw `n` gamma variates; identical output for identical `seed`."""
    return SampleBatch(_gamma_draws(params.lam, params.phi, n, seed), POSITIVE)


def sample_generalized_gamma(params, n, seed):
    y = _gamma_draws(params.lam, params.phi, n, seed)
    return SampleBatch(y ** (1.0 / params.alpha), POSITIVE)


def sample_nakagami(params, n, seed):
    """Nakagami variates as square roots of gamma variates."""
    return SampleBatch(np.sqrt(_gamma_draws(params.lam, params.phi, n, seed)), POSITIVE)


def sample_wilson_hilferty(params, n, seed):
    """Wilson-Hilferty variates as cube roots of gamma variates."""
    return SampleBatch(np.cbrt(_gamma_draws(params.lam, params.phi, n, seed)), POSITIVE)


def sample_beta(params, n, seed):
    """Beta variates as ``G1 / (G1 + G2)`` for independent unit-scale gammas."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _generator(seed)
    g1 = _standard_gamma(rng, params.alpha, n)
    g2 = _standard_gamma(rng, params.beta, n)
    return SampleBatch(g1 / (g1 + g2), UNIT_INTERVAL)


# -- expectations by quadrature ----------------------------------------------

def _log_gamma_rule(phi, n, panels):
    # variable t = log(Y) with Y ~ Gamma(phi, 1); density exp(phi*t - e^t) / Gamma(phi)
    lo = -40.0 / phi - 5.0
    hi = np.log(phi + 60.0 + 10.0 * np.sqrt(phi))
    return gauss_legendre(n, lo, hi, panels)


def expect_gamma(func, params, n=64, panels=16):
    """Expectation of ``func(X)`` for ``X`` with the gamma law `params`.

    Integrates in ``t = log(phi * X / lam)``, where the density is smooth
    and the ``log X`` singularity of typical score functions disappears.
    """
    lam, phi = params.lam, params.phi
    rule = _log_gamma_rule(phi, n, panels)
    log_norm = log_gamma(phi)

    def integrand(t):
        dens = np.exp(phi * t - np.exp(t) - log_norm)
        x = (lam / phi) * np.exp(t)
        return dens * func(x)

    return expectation_quadrature(integrand, rule)


def expect_generalized_gamma(func, params, n=64, panels=16):
    """Expectation of ``func(X)`` where ``X**alpha`` has the gamma law ``(lam, phi)``."""
    alpha = params.alpha
    return expect_gamma(lambda y: func(y ** (1.0 / alpha)), GammaParams(params.lam, params.phi), n, panels)


def expect_beta(func, params, n=64, panels=16):
    """Expectation of ``func(X)`` for ``X ~ Beta(alpha, beta)``.

    Integrates in the logit ``t = log(x / (1 - x))``, where both endpoint
    singularities become exponentially decaying tails. The upper tail is
    cut at ``t = 33``, beyond which ``x`` rounds to 1; the neglected mass is
    of order ``exp(-33 * beta)``, below 1e-14 for ``beta >= 1``.
    """
    a, b = params.alpha, params.beta
    # tails beyond |t| = 33 would round x to 1 in double precision
    rule = gauss_legendre(n, max(-40.0 / a - 5.0, -700.0), min(40.0 / b + 5.0, 33.0), panels)
    log_norm = log_beta(a, b)

    def integrand(t):
        x = 0.5 * (1.0 + np.tanh(0.5 * t))
        log1m = -np.logaddexp(0.0, t)          # log(1 - x)
        logx = t + log1m                       # log(x)
        dens = np.exp(a * logx + b * log1m - log_norm)
        return dens * func(x)

    return expectation_quadrature(integrand, rule)
