"""
Seeded Monte Carlo comparison of the closed-form and maximum likelihood
estimators.

Replication ``r`` at sample size ``n`` draws its sample from its own
generator seeded with ``derive_seed(master_seed, n, r)``. Replications are
processed in fixed-size blocks that may run on any number of threads; the
blocks are reassembled in order before any reduction, so results depend
only on the configuration.
"""

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from mmle.distributions import (
    POWER,
    BetaParams,
    GammaParams,
    _gamma_draws,
    _generator,
    _standard_gamma,
    derive_seed,
)
from mmle.estimators import beta_avar, beta_batch, power_gamma_avar, power_gamma_batch
from mmle.mle import (
    DEFAULT,
    beta_fisher_avar,
    beta_start,
    gamma_fisher_avar,
    solve_beta,
    solve_gamma_shape,
)

FAMILIES = ("gamma", "nakagami", "wilson_hilferty", "beta")
ESTIMATORS = ("mmle", "mle")
CSV_COLUMNS = ("estimator", "parameter", "n", "bias", "rmse", "var_scaled", "failures")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """A Monte Carlo sweep.

    Parameters
    ----------
    family : {"gamma", "nakagami", "wilson_hilferty", "beta"}
    true_params : GammaParams or BetaParams
        For the power-gamma families, the ``(lam, phi)`` of the gamma law
        of ``X**alpha0``.
    n_grid : sequence of int
        Strictly increasing sample sizes, each at least 2.
    replications : int
    master_seed : int
        Unsigned 64-bit seed.
    estimators : sequence of {"mmle", "mle"}
    exclude_flagged : bool
        Leave replications whose closed-form beta estimates fall at or below
        2 out of the closed-form aggregates (the default). The point
        estimates exist there, only their covariance does not, so turning
        this off gives the unconditional bias and RMSE.
    block_size : int
        Replications per work item. Part of the configuration so that the
        partition, and hence every floating-point reduction, is fixed.
    """

    family: str
    true_params: object
    n_grid: tuple
    replications: int = 10_000
    master_seed: int = 0
    estimators: tuple = ESTIMATORS
    exclude_flagged: bool = True
    block_size: int = 512

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(v) for v in self.n_grid))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        want = BetaParams if self.family == "beta" else GammaParams
        if not isinstance(self.true_params, want):
            raise ConfigError(f"{self.family} needs {want.__name__} true parameters")
        if not self.n_grid:
            raise ConfigError("n_grid is empty")
        if min(self.n_grid) < 2 or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid entries must be >= 2 and strictly increasing")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        if not self.estimators or any(e not in ESTIMATORS for e in self.estimators):
            raise ConfigError(f"estimators must be a non-empty subset of {ESTIMATORS}")
        if self.block_size < 1:
            raise ConfigError("block_size must be positive")

    @property
    def param_names(self):
        return ("alpha", "beta") if self.family == "beta" else ("lambda", "phi")

    @property
    def truth(self):
        return self.true_params.as_array()

    def to_dict(self):
        d = asdict(self)
        d["true_params"] = dict(zip(self.param_names, map(float, self.truth)))
        d["n_grid"] = list(self.n_grid)
        d["estimators"] = list(self.estimators)
        return d


@dataclass(frozen=True)
class ResultRow:
    estimator: str
    parameter: str
    n: int
    bias: float
    rmse: float
    var_scaled: float
    failures: int
    flagged: int = 0


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    elapsed: float = 0.0
    _index: dict = field(default=None, repr=False)

    def row(self, estimator, parameter, n):
        if self._index is None:
            self._index = {(r.estimator, r.parameter, r.n): r for r in self.rows}
        return self._index[(estimator, parameter, n)]

    def curve(self, estimator, parameter, metric):
        """Values of `metric` over the n grid, as an array."""
        return np.array([getattr(self.row(estimator, parameter, n), metric) for n in self.config.n_grid])

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.estimator, r.parameter, r.n, _fmt(r.bias), _fmt(r.rmse),
                        _fmt(r.var_scaled), r.failures])
        return buf.getvalue()

    def to_json(self):
        """JSON with the configuration and every row; timing is left out."""
        doc = {"config": self.config.to_dict(), "rows": [asdict(r) for r in self.rows]}
        return json.dumps(doc, indent=2, allow_nan=True) + "\n"


def _fmt(v):
    return repr(float(v))


# -- sampling ---------------------------------------------------------------

def _draw(cfg, n, r):
    seed = derive_seed(cfg.master_seed, n, r)
    p = cfg.true_params
    if cfg.family == "beta":
        rng = _generator(seed)
        g1 = _standard_gamma(rng, p.alpha, n)
        g2 = _standard_gamma(rng, p.beta, n)
        return g1 / (g1 + g2)
    y = _gamma_draws(p.lam, p.phi, n, seed)
    alpha0 = POWER[cfg.family]
    if alpha0 == 1.0:
        return y
    return np.sqrt(y) if alpha0 == 2.0 else np.cbrt(y)


def draw_block(cfg, n, start, stop):
    """Samples for replications ``start..stop-1`` at size `n`, one per row.

    Row ``r - start`` equals the matching public sampler called with seed
    ``derive_seed(cfg.master_seed, n, r)``.
    """
    return np.stack([_draw(cfg, n, r) for r in range(start, stop)])


def _estimate_block(cfg, n, start, stop):
    x = draw_block(cfg, n, start, stop)
    out = {}
    if cfg.family == "beta":
        a, b = beta_batch(x)
        flagged = ~((a > 2) & (b > 2))
        if "mmle" in cfg.estimators:
            out["mmle"] = (np.column_stack([a, b]), flagged)
        if "mle" in cfg.estimators:
            a0, b0 = beta_start(x)
            l1 = np.log(x).mean(axis=1)
            l2 = np.log1p(-x).mean(axis=1)
            ma, mb, ok, _ = solve_beta(l1, l2, a0, b0, DEFAULT)
            est = np.column_stack([ma, mb])
            est[~ok] = np.nan
            out["mle"] = (est, np.zeros(len(x), dtype=bool))
        return out
    y = x ** POWER[cfg.family]
    lam, phi = power_gamma_batch(y)
    none = np.zeros(len(x), dtype=bool)
    if "mmle" in cfg.estimators:
        out["mmle"] = (np.column_stack([lam, phi]), none)
    if "mle" in cfg.estimators:
        with np.errstate(invalid="ignore"):
            rhs = -np.log1p((y - lam[:, None]) / lam[:, None]).mean(axis=1)
        mphi, ok, _ = solve_gamma_shape(rhs, DEFAULT)
        est = np.column_stack([lam, mphi])
        est[~ok] = np.nan
        out["mle"] = (est, none)
    return out


def _workers(workers):
    if workers is None:
        workers = os.cpu_count() or 1
        cap = os.environ.get("MMLE_THREADS")
        if cap:
            workers = min(workers, max(1, int(cap)))
    return max(1, int(workers))


def simulate_estimates(cfg, n_values=None, workers=None):
    """Per-replication estimates.

    Returns
    -------
    dict
        ``{n: {estimator: (estimates, flagged)}}`` with ``estimates`` of
        shape ``(replications, 2)`` (nan rows mark failures) and boolean
        ``flagged`` of shape ``(replications,)``.
    """
    n_values = cfg.n_grid if n_values is None else tuple(n_values)
    R, B = cfg.replications, cfg.block_size
    tasks = [(n, s, min(s + B, R)) for n in n_values for s in range(0, R, B)]
    nw = _workers(workers)
    if nw == 1:
        parts = [_estimate_block(cfg, *t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            parts = list(pool.map(lambda t: _estimate_block(cfg, *t), tasks))
    out = {}
    for (n, _s, _e), part in zip(tasks, parts):
        slot = out.setdefault(n, {k: ([], []) for k in part})
        for k, (est, flg) in part.items():
            slot[k][0].append(est)
            slot[k][1].append(flg)
    return {n: {k: (np.concatenate(e), np.concatenate(f)) for k, (e, f) in d.items()}
            for n, d in out.items()}


def _aggregate(est, truth, n):
    if est.size == 0:
        return math.nan, math.nan, math.nan
    err = est - truth
    bias = float(np.mean(err))
    rmse = float(np.sqrt(np.mean(err * err)))
    var_scaled = float(n * np.var(est, ddof=1)) if est.size > 1 else math.nan
    return bias, rmse, var_scaled


def run_experiment(cfg, workers=None):
    """Bias, RMSE and scaled variance for every estimator, parameter and n.

    Replications where an estimator fails (a non-finite estimate or a
    solver that did not converge), and flagged beta replications when
    ``cfg.exclude_flagged`` is set, are left out of that estimator's
    aggregates and counted in ``failures``; ``flagged`` counts the flagged
    replications either way. The result does not depend on `workers`.
    """
    t0 = time.perf_counter()
    sims = simulate_estimates(cfg, workers=workers)
    truth = cfg.truth
    rows = []
    for est_name in cfg.estimators:
        for j, pname in enumerate(cfg.param_names):
            for n in cfg.n_grid:
                est, flagged = sims[n][est_name]
                ok = np.all(np.isfinite(est), axis=1)
                keep = ok & ~flagged if cfg.exclude_flagged else ok
                failures = int(np.count_nonzero(~keep))
                bias, rmse, vs = _aggregate(est[keep, j], truth[j], n)
                rows.append(ResultRow(est_name, pname, n, bias, rmse, vs, failures,
                                      int(np.count_nonzero(flagged & ok))))
    return ExperimentResult(cfg, rows, time.perf_counter() - t0)


# -- asymptotic normality ---------------------------------------------------

@dataclass(frozen=True)
class NormalityStats:
    parameter: str
    variance: float
    skewness: float
    excess_kurtosis: float
    coverage: float
    count: int


def true_avar(cfg, estimator="mmle"):
    """Asymptotic covariance at the true parameters for `estimator`."""
    p = cfg.true_params
    if cfg.family == "beta":
        return beta_avar(p) if estimator == "mmle" else beta_fisher_avar(p)
    return power_gamma_avar(p) if estimator == "mmle" else gamma_fisher_avar(p)


def normality_check(cfg, n, estimator="mmle", avar=None, workers=None):
    """Distribution of ``sqrt(n) (estimate - truth) / sqrt(avar_ii)`` over replications.

    Parameters
    ----------
    avar : array_like, optional
        Covariance used for standardization; defaults to :func:`true_avar`.

    Returns
    -------
    list of NormalityStats
        One entry per parameter. Under asymptotic normality the variance
        tends to 1 and the coverage of ``[-1.96, 1.96]`` to 0.95.
    """
    if cfg.replications < 1000:
        raise ConfigError("normality_check needs at least 1000 replications")
    if estimator not in cfg.estimators:
        raise ConfigError(f"{estimator} is not among the configured estimators")
    avar = true_avar(cfg, estimator) if avar is None else np.asarray(avar, dtype=float)
    est, _ = simulate_estimates(cfg, (n,), workers)[n][estimator]
    est = est[np.all(np.isfinite(est), axis=1)]
    out = []
    for j, pname in enumerate(cfg.param_names):
        z = math.sqrt(n) * (est[:, j] - cfg.truth[j]) / math.sqrt(avar[j, j])
        out.append(NormalityStats(
            pname,
            float(np.var(z, ddof=1)),
            float(stats.skew(z)),
            float(stats.kurtosis(z)),
            float(np.mean(np.abs(z) <= 1.959963984540054)),
            int(z.size),
        ))
    return out
