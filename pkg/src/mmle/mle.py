"""
Classical maximum likelihood for the gamma, Nakagami-m and beta laws.

These estimators have no closed form and serve as the comparison baseline.
The gamma shape solves ``log(phi) - digamma(phi) = log(mean X) - mean(log X)``
by Newton iteration inside a verified bracket; the beta shapes solve the
two digamma score equations by damped two-dimensional Newton iteration.
All solvers work on arrays so that many samples can be fitted at once.
"""

import math
from dataclasses import dataclass

import numpy as np

from mmle.distributions import POSITIVE, UNIT_INTERVAL, BetaParams, GammaParams
from mmle.errors import DegenerateSample, NonConvergence
from mmle.estimators import _NEAR_DEGENERATE_RTOL, NEAR_DEGENERATE, _report, _require_sample, beta_batch, mean_rows
from mmle.special import digamma, log_beta, log_gamma, log_minus_digamma, log_minus_digamma_slope, trigamma

_BRACKET = (1e-6, 1e6)
_LIMIT = (1e-300, 1e300)


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rules for the Newton solvers.

    `tol` applies to the relative step and to the residual of each score
    equation. `damping` is the initial Newton step fraction; it is halved
    whenever a step leaves the domain or fails to reduce the residual.
    """

    max_iter: int = 100
    tol: float = 1e-12
    damping: float = 1.0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


DEFAULT = SolverConfig()


def solve_gamma_shape(rhs, cfg=DEFAULT):
    """Solve ``log(phi) - digamma(phi) = rhs`` elementwise.

    The left side is positive and strictly decreasing. Each root is
    bracketed before any Newton step: the bracket starts at ``[1e-6, 1e6]``
    and its ends are pushed out by factors of 1000 (up to ``1e-300`` and
    ``1e300``) until ``h(lo) > rhs > h(hi)``. Steps that leave the current
    bracket fall back to geometric bisection.

    Returns
    -------
    phi, converged, residual : ndarray
        Entries whose root cannot be bracketed, or that do not meet the
        tolerance within ``cfg.max_iter`` steps, have ``converged=False``.
    """
    rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
    lo = np.full_like(rhs, _BRACKET[0])
    hi = np.full_like(rhs, _BRACKET[1])
    finite = np.isfinite(rhs) & (rhs > 0)
    while True:
        grow = finite & (log_minus_digamma(hi) >= rhs) & (hi < _LIMIT[1])
        if not grow.any():
            break
        hi[grow] = np.minimum(hi[grow] * 1e3, _LIMIT[1])
    while True:
        grow = finite & (log_minus_digamma(lo) <= rhs) & (lo > _LIMIT[0])
        if not grow.any():
            break
        lo[grow] = np.maximum(lo[grow] * 1e-3, _LIMIT[0])
    bracketed = finite & (log_minus_digamma(lo) > rhs) & (rhs > log_minus_digamma(hi))

    # closed-form starting value, accurate to a few percent
    r = np.where(bracketed, rhs, 1.0)
    phi = (3.0 - r + np.sqrt((r - 3.0) ** 2 + 24.0 * r)) / (12.0 * r)
    phi = np.clip(phi, lo * 2, hi / 2)

    done = ~bracketed
    converged = np.zeros(rhs.shape, dtype=bool)
    for _ in range(cfg.max_iter):
        act = ~done
        if not act.any():
            break
        p = phi[act]
        f = log_minus_digamma(p) - rhs[act]
        # h is decreasing: f > 0 means the root lies above p
        lo[act] = np.where(f > 0, p, lo[act])
        hi[act] = np.where(f > 0, hi[act], p)
        dh = log_minus_digamma_slope(p)
        step = -cfg.damping * f / dh
        new = p + step
        outside = ~((new >= lo[act]) & (new <= hi[act]))
        new = np.where(outside, np.sqrt(lo[act] * hi[act]), new)
        phi[act] = new
        # residual tolerance is relative: h(phi) ~ 1/(2 phi) for large phi
        small = (np.abs(new - p) <= cfg.tol * new) & (np.abs(f) <= cfg.tol * rhs[act])
        small |= f == 0
        idx = np.flatnonzero(act)
        converged[idx[small]] = True
        done[idx[small]] = True
    final = log_minus_digamma(np.clip(phi, *_LIMIT)) - rhs
    resid = np.where(bracketed, final, np.nan)
    return phi, converged, resid


def _gamma_rhs(y, lam):
    # log(mean Y) - mean(log Y) = -mean(log(Y / mean Y)) >= 0
    return -float(np.mean(np.log1p((y - lam) / lam)))


def gamma_fisher_avar(params):
    """Inverse Fisher information of one observation, ``(lam, phi)`` order."""
    lam, phi = params.lam, params.phi
    return np.diag([lam * lam / phi, 1.0 / (trigamma(phi) - 1.0 / phi)])


def mle_power_gamma(sample, alpha0=1.0, cfg=DEFAULT):
    """Maximum likelihood for the gamma law of ``X**alpha0``.

    Raises
    ------
    DegenerateSample
        If all observations are equal.
    NonConvergence
        If the shape root is not found; the exception carries the last
        iterate and residual.
    """
    sample = _require_sample(sample, POSITIVE)
    y = sample.values**alpha0
    n = y.size
    lam = float(mean_rows(y))
    rhs = _gamma_rhs(y, lam)
    if not rhs > 0:
        raise DegenerateSample("log(mean) equals mean(log); the sample is degenerate")
    phi, ok, resid = solve_gamma_shape(np.array([rhs]), cfg)
    if not ok[0]:
        raise NonConvergence("gamma shape equation did not converge", float(phi[0]), float(resid[0]))
    params = GammaParams(lam, float(phi[0]))
    # same threshold as the closed form: shape beyond 1e10 means a clustered sample
    flags = {NEAR_DEGENERATE} if params.phi * _NEAR_DEGENERATE_RTOL > 1.0 else set()
    return _report(params, gamma_fisher_avar(params), n, flags, "power_gamma", "mle", float(alpha0))


def mle_gamma(sample, cfg=DEFAULT):
    return mle_power_gamma(sample, 1.0, cfg)


def mle_nakagami(sample, cfg=DEFAULT):
    """Nakagami-m MLE: gamma MLE of the squared sample."""
    return mle_power_gamma(sample, 2.0, cfg)


def mle_wilson_hilferty(sample, cfg=DEFAULT):
    return mle_power_gamma(sample, 3.0, cfg)


# -- beta -----------------------------------------------------------------

def beta_moments_start(x):
    """Method-of-moments shapes, row-wise; ``(1, 1)`` where undefined."""
    x = np.asarray(x, dtype=float)
    m = x.mean(axis=-1)
    v = x.var(axis=-1, ddof=1) if x.shape[-1] > 1 else np.zeros_like(m)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = m * (1.0 - m) / v - 1.0
    good = np.isfinite(c) & (c > 0)
    return np.where(good, m * c, 1.0), np.where(good, (1.0 - m) * c, 1.0)


def _beta_score(a, b, l1, l2):
    ps = digamma(a + b)
    return digamma(a) - ps - l1, digamma(b) - ps - l2


def solve_beta(l1, l2, a0, b0, cfg=DEFAULT):
    """Solve ``digamma(a) - digamma(a+b) = l1`` and ``digamma(b) - digamma(a+b) = l2``.

    Vectorized damped Newton with the trigamma Jacobian. Each step is
    halved until the iterate stays positive and the squared residual does
    not grow.

    Returns
    -------
    a, b, converged, residual : ndarray
        ``residual`` is the larger absolute score residual.
    """
    l1 = np.atleast_1d(np.asarray(l1, dtype=float))
    l2 = np.atleast_1d(np.asarray(l2, dtype=float))
    a = np.array(np.broadcast_to(a0, l1.shape), dtype=float)
    b = np.array(np.broadcast_to(b0, l1.shape), dtype=float)
    f1, f2 = _beta_score(a, b, l1, l2)
    done = np.zeros(l1.shape, dtype=bool)
    converged = np.zeros(l1.shape, dtype=bool)
    for _ in range(cfg.max_iter):
        res = np.maximum(np.abs(f1), np.abs(f2))
        hit = ~done & (res <= cfg.tol)
        converged |= hit
        done |= hit
        act = np.flatnonzero(~done)
        if act.size == 0:
            break
        aa, bb, g1, g2 = a[act], b[act], f1[act], f2[act]
        ts = trigamma(aa + bb)
        j11 = trigamma(aa) - ts
        j22 = trigamma(bb) - ts
        det = j11 * j22 - ts * ts
        # Jacobian [[j11, -ts], [-ts, j22]]
        da = -(j22 * g1 + ts * g2) / det
        db = -(ts * g1 + j11 * g2) / det
        merit = g1 * g1 + g2 * g2
        t = np.full(act.size, cfg.damping)
        na, nb = aa + t * da, bb + t * db
        pending = np.ones(act.size, dtype=bool)
        n1 = np.empty(act.size)
        n2 = np.empty(act.size)
        for _h in range(60):
            pos = pending & (na > 0) & (nb > 0)
            if pos.any():
                h1, h2 = _beta_score(na[pos], nb[pos], l1[act][pos], l2[act][pos])
                n1[pos], n2[pos] = h1, h2
                accept = np.zeros(act.size, dtype=bool)
                accept[pos] = h1 * h1 + h2 * h2 <= merit[pos]
                pending &= ~accept
            if not pending.any():
                break
            t = np.where(pending, 0.5 * t, t)
            na = np.where(pending, aa + t * da, na)
            nb = np.where(pending, bb + t * db, nb)
        stuck = pending
        a[act[~stuck]] = na[~stuck]
        b[act[~stuck]] = nb[~stuck]
        f1[act[~stuck]] = n1[~stuck]
        f2[act[~stuck]] = n2[~stuck]
        # a step that cannot reduce the residual means we sit at rounding level
        done[act[stuck]] = True
        rel = np.maximum(np.abs(t * da) / na, np.abs(t * db) / nb)
        tiny = ~stuck & (rel <= cfg.tol) & (np.maximum(np.abs(n1), np.abs(n2)) <= 1e3 * cfg.tol)
        converged[act[tiny]] = True
        done[act[tiny]] = True
    res = np.maximum(np.abs(f1), np.abs(f2))
    return a, b, converged, res


def beta_fisher_avar(params):
    """Inverse Fisher information of one observation, ``(alpha, beta)`` order."""
    a, b = params.alpha, params.beta
    ts = trigamma(a + b)
    info = np.array([[trigamma(a) - ts, -ts], [-ts, trigamma(b) - ts]])
    return np.linalg.inv(info)


def beta_start(x):
    """Closed-form estimates where both exceed 2, method of moments elsewhere."""
    x = np.atleast_2d(x)
    a, b = beta_batch(x)
    ma, mb = beta_moments_start(x)
    valid = np.isfinite(a) & np.isfinite(b) & (a > 2) & (b > 2)
    return np.where(valid, a, ma), np.where(valid, b, mb)


def mle_beta(sample, cfg=DEFAULT):
    """Maximum likelihood for the beta shapes.

    Raises
    ------
    DegenerateSample, NonConvergence
    """
    sample = _require_sample(sample, UNIT_INTERVAL)
    x = sample.values
    n = x.size
    l1 = math.fsum(np.log(x)) / n
    l2 = math.fsum(np.log1p(-x)) / n
    a0, b0 = beta_start(x)
    a, b, ok, res = solve_beta(l1, l2, a0, b0, cfg)
    if not ok[0]:
        raise NonConvergence("beta score equations did not converge",
                             np.array([a[0], b[0]]), float(res[0]))
    params = BetaParams(float(a[0]), float(b[0]))
    return _report(params, beta_fisher_avar(params), n, (), "beta", "mle")


# -- log-likelihoods, used by grid-search checks --------------------------------

def gamma_loglik(y, lam, phi):
    """Gamma log-likelihood of `y`; broadcasts over `lam` and `phi`."""
    y = np.asarray(y, dtype=float)
    n = y.size
    lam = np.asarray(lam, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return (n * (phi * np.log(phi / lam) - log_gamma(phi))
            + (phi - 1.0) * math.fsum(np.log(y)) - (phi / lam) * math.fsum(y))


def beta_loglik(x, alpha, beta):
    """Beta log-likelihood of `x`; broadcasts over `alpha` and `beta`."""
    x = np.asarray(x, dtype=float)
    n = x.size
    s1 = math.fsum(np.log(x))
    s2 = math.fsum(np.log1p(-x))
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return (alpha - 1.0) * s1 + (beta - 1.0) * s2 - n * log_beta(alpha, beta)
