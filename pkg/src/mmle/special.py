r"""
Special functions and quadrature rules.

Log-gamma, digamma and trigamma are evaluated by shifting the argument
upward with the recurrences

.. math::
    \Gamma(x+1) = x\Gamma(x), \quad \psi(x+1) = \psi(x) + 1/x, \quad
    \psi'(x+1) = \psi'(x) - 1/x^2

until it exceeds a threshold, then summing the Bernoulli asymptotic series.
All functions accept scalars or arrays and reject non-positive or
non-finite input with :class:`~mmle.errors.DomainError`.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_genlaguerre

from mmle.errors import DomainError, QuadratureError

# B_2, B_4, ..., B_20
_BERNOULLI = np.array([
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
])
_K2 = 2.0 * np.arange(1, _BERNOULLI.size + 1)

_SHIFT = 6.0
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def _check_positive(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    if np.any(arr <= 0):
        raise DomainError(f"{name} must be strictly positive")
    return arr


def _out(arr, scalar):
    return float(arr) if scalar else arr


def _shift_up(x, term):
    """Raise every entry of `x` to at least ``_SHIFT``; accumulate ``term(x)`` per step."""
    x = np.array(x, dtype=float, copy=True)
    acc = np.zeros_like(x)
    mask = x < _SHIFT
    while mask.any():
        acc[mask] += term(x[mask])
        x[mask] += 1.0
        mask = x < _SHIFT
    return x, acc


def _series(inv_x2, coeffs):
    # Horner in 1/x^2, highest order first
    out = np.zeros_like(inv_x2)
    for c in coeffs[::-1]:
        out = out * inv_x2 + c
    return out


_LGAMMA_C = _BERNOULLI / (_K2 * (_K2 - 1.0))
_DIGAMMA_C = _BERNOULLI / _K2


def log_gamma(x):
    """Natural logarithm of the gamma function for ``x > 0``."""
    scalar = np.ndim(x) == 0
    arr = _check_positive(x)
    z, acc = _shift_up(np.atleast_1d(arr), np.log)
    inv = 1.0 / z
    tail = inv * _series(inv * inv, _LGAMMA_C)
    out = (z - 0.5) * np.log(z) - z + _HALF_LOG_2PI + tail - acc
    return _out(out.reshape(arr.shape), scalar)


def digamma(x):
    """Digamma function, the derivative of :func:`log_gamma`."""
    scalar = np.ndim(x) == 0
    arr = _check_positive(x)
    z, acc = _shift_up(np.atleast_1d(arr), lambda t: 1.0 / t)
    inv = 1.0 / z
    inv2 = inv * inv
    out = np.log(z) - 0.5 * inv - inv2 * _series(inv2, _DIGAMMA_C) - acc
    return _out(out.reshape(arr.shape), scalar)


def trigamma(x):
    """Trigamma function, the derivative of :func:`digamma`."""
    scalar = np.ndim(x) == 0
    arr = _check_positive(x)
    z, acc = _shift_up(np.atleast_1d(arr), lambda t: 1.0 / (t * t))
    inv = 1.0 / z
    inv2 = inv * inv
    out = inv + 0.5 * inv2 + inv * inv2 * _series(inv2, _BERNOULLI) + acc
    return _out(out.reshape(arr.shape), scalar)


def log_minus_digamma(x):
    """``log(x) - digamma(x)`` without cancellation for large ``x``.

    The function is positive and strictly decreasing, behaving like
    ``1/(2x)`` at infinity.
    """
    scalar = np.ndim(x) == 0
    arr = np.atleast_1d(_check_positive(x))
    out = np.empty_like(arr)
    big = arr >= _SHIFT
    if big.any():
        inv = 1.0 / arr[big]
        inv2 = inv * inv
        out[big] = 0.5 * inv + inv2 * _series(inv2, _DIGAMMA_C)
    small = ~big
    if small.any():
        out[small] = np.log(arr[small]) - digamma(arr[small])
    return _out(out.reshape(np.shape(x)), scalar)


def log_minus_digamma_slope(x):
    """Derivative ``1/x - trigamma(x)`` of :func:`log_minus_digamma`, without cancellation."""
    scalar = np.ndim(x) == 0
    arr = np.atleast_1d(_check_positive(x))
    out = np.empty_like(arr)
    big = arr >= _SHIFT
    if big.any():
        inv = 1.0 / arr[big]
        inv2 = inv * inv
        out[big] = -(0.5 * inv2 + inv * inv2 * _series(inv2, _BERNOULLI))
    small = ~big
    if small.any():
        out[small] = 1.0 / arr[small] - trigamma(arr[small])
    return _out(out.reshape(np.shape(x)), scalar)


def log_beta(a, b):
    """Logarithm of the beta function ``B(a, b)``."""
    return log_gamma(a) + log_gamma(b) - log_gamma(np.add(a, b))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and positive weights of a Gauss rule.

    ``kind`` is ``"legendre"`` (unit weight on a finite interval) or
    ``"laguerre"`` (weight ``x**alpha * exp(-x)`` on the positive axis).
    """

    nodes: np.ndarray
    weights: np.ndarray
    kind: str

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if self.kind not in ("legendre", "laguerre"):
            raise ValueError(f"unknown quadrature kind {self.kind!r}")
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size < 2:
            raise ValueError("nodes and weights must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("weights must be strictly positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.size


def gauss_legendre(n=64, lo=-1.0, hi=1.0, panels=1):
    """Composite Gauss-Legendre rule on ``[lo, hi]``.

    The interval is cut into `panels` equal pieces with an `n`-point rule
    on each, so the rule has ``n * panels`` nodes.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if panels < 1:
        raise ValueError("panels must be >= 1")
    x, w = np.polynomial.legendre.leggauss(n)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (half[:, None] * x[None, :] + mid[:, None]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return QuadratureRule(nodes, weights, "legendre")


def gauss_laguerre(n=64, alpha=0.0):
    """Generalized Gauss-Laguerre rule for the weight ``x**alpha * exp(-x)``."""
    if alpha <= -1:
        raise ValueError("alpha must exceed -1")
    x, w = roots_genlaguerre(n, alpha)
    return QuadratureRule(x, w, "laguerre")


def expectation_quadrature(integrand, rule):
    """Weighted node sum ``sum(w_i * integrand(x_i))``.

    Any density or weight-function correction must already be folded into
    `integrand`. `integrand` is called once with the full node array.

    Raises
    ------
    QuadratureError
        If the integrand is non-finite at any node.
    """
    values = np.asarray(integrand(rule.nodes), dtype=float)
    values = np.broadcast_to(values, rule.nodes.shape)
    if not np.all(np.isfinite(values)):
        bad = rule.nodes[~np.isfinite(values)]
        raise QuadratureError(f"integrand non-finite at {bad.size} node(s), first at x={bad[0]!r}")
    return float(np.dot(rule.weights, values))
