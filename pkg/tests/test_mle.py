import numpy as np
import pytest
from scipy import special, stats

from mmle.distributions import BetaParams, GammaParams, NakagamiParams, sample_beta, sample_gamma, sample_nakagami
from mmle.errors import DegenerateSample, NonConvergence
from mmle.estimators import NEAR_DEGENERATE, mmle_gamma, mmle_nakagami
from mmle.mle import (
    SolverConfig,
    beta_fisher_avar,
    beta_moments_start,
    gamma_fisher_avar,
    mle_beta,
    mle_gamma,
    mle_nakagami,
    mle_wilson_hilferty,
    solve_beta,
    solve_gamma_shape,
)
from mmle.special import digamma, log_minus_digamma, trigamma

rng = np.random.default_rng(3)


def _gamma_ll(y, phi):
    # profile log-likelihood: the scale MLE is mean(y) for every shape
    return stats.gamma.logpdf(y[:, None], phi[None, :], scale=y.mean() / phi[None, :]).sum(axis=0)


def _grid_max_1d(f, lo, hi, rounds=6, pts=2001):
    for _ in range(rounds):
        g = np.geomspace(lo, hi, pts)
        v = f(g)
        i = int(np.argmax(v))
        lo, hi = g[max(i - 2, 0)], g[min(i + 2, pts - 1)]
    return float(v[i])


def _beta_ll(x, a, b):
    # sufficient statistics with scipy's betaln as the independent special function
    s1, s2 = np.log(x).sum(), np.log1p(-x).sum()
    a, b = a[:, None], b[None, :]
    return (a - 1) * s1 + (b - 1) * s2 - x.size * special.betaln(a, b)


def _grid_max_2d(x, a_lo, a_hi, b_lo, b_hi, rounds=10, pts=201):
    for _ in range(rounds):
        ga = np.geomspace(a_lo, a_hi, pts)
        gb = np.geomspace(b_lo, b_hi, pts)
        v = _beta_ll(x, ga, gb)
        i, j = np.unravel_index(int(np.argmax(v)), v.shape)
        a_lo, a_hi = ga[max(i - 2, 0)], ga[min(i + 2, pts - 1)]
        b_lo, b_hi = gb[max(j - 2, 0)], gb[min(j + 2, pts - 1)]
    return float(v[i, j])


def test_solver_config_validation():
    SolverConfig()
    with pytest.raises(ValueError):
        SolverConfig(max_iter=0)
    with pytest.raises(ValueError):
        SolverConfig(tol=1.0)
    with pytest.raises(ValueError):
        SolverConfig(damping=0.0)
    with pytest.raises(ValueError):
        SolverConfig(damping=1.5)


def test_gamma_shape_solver_accuracy():
    phi_true = np.geomspace(1e-5, 1e12, 60)
    rhs = log_minus_digamma(phi_true)
    phi, ok, res = solve_gamma_shape(rhs)
    assert ok.all()
    assert np.allclose(phi, phi_true, rtol=1e-10)
    assert np.all(res <= 1e-12 * rhs)


def test_gamma_shape_solver_reports_failure():
    phi, ok, _ = solve_gamma_shape(np.array([1e-3, 1e-9]), SolverConfig(max_iter=1))
    assert not ok.any()
    # no positive root for a non-positive right-hand side
    phi, ok, res = solve_gamma_shape(np.array([0.0, -1.0, np.nan]))
    assert not ok.any() and np.isnan(res).all()


def test_mle_gamma_lambda_equals_mmle_lambda():
    for s in range(20):
        x = sample_gamma(GammaParams(1.5, 2.0), int(rng.integers(2, 200)), s)
        assert mle_gamma(x).params.lam == mmle_gamma(x).params.lam
        y = sample_nakagami(NakagamiParams(10.0, 4.0), 30, s)
        assert mle_nakagami(y).params.lam == mmle_nakagami(y).params.lam


def test_mle_gamma_solves_score_equation():
    x = sample_gamma(GammaParams(1.5, 2.0), 500, 1).values
    r = mle_gamma(x)
    lhs = np.log(r.params.phi) - digamma(r.params.phi)
    assert lhs == pytest.approx(np.log(x.mean()) - np.log(x).mean(), rel=1e-11)
    assert np.allclose(r.avar, gamma_fisher_avar(r.params))
    assert r.method == "mle"


def test_mle_gamma_consistency():
    x = sample_gamma(GammaParams(1.5, 2.0), 100_000, 17)
    assert 1.9 < mle_gamma(x).params.phi < 2.1
    y = sample_nakagami(NakagamiParams(10.0, 4.0), 100_000, 17)
    assert 3.9 < mle_nakagami(y).params.phi < 4.1


def test_squaring_equivalence():
    for s in range(10):
        y = sample_nakagami(NakagamiParams(10.0, 4.0), 40, s).values
        a = mle_nakagami(y)
        b = mle_gamma(y**2)
        assert a.params == b.params
        x = y ** (2 / 3)
        assert mle_wilson_hilferty(x).params == mle_gamma(x**3).params


def test_mle_gamma_errors():
    with pytest.raises(DegenerateSample):
        mle_gamma([3.0, 3.0, 3.0])
    with pytest.raises(DegenerateSample):
        mle_nakagami([1.0, 1.0])
    with pytest.raises(NonConvergence) as exc:
        mle_gamma(sample_gamma(GammaParams(1.5, 2.0), 20, 1), SolverConfig(max_iter=1))
    assert exc.value.last_iterate is not None


def test_mle_gamma_near_degenerate_large_shape():
    r = mle_gamma([1.0, 1.001])
    assert r.params.phi == pytest.approx(4.004e6, rel=1e-3)
    assert NEAR_DEGENERATE not in r.flags
    r = mle_gamma([1.0, 1.0 + 1e-7])
    assert r.params.phi > 1e14 and NEAR_DEGENERATE in r.flags


def test_mle_gamma_grid_oracle():
    for s in range(50):
        lam, phi = rng.uniform(0.2, 10), rng.uniform(0.5, 10)
        y = sample_gamma(GammaParams(lam, phi), 25, 1000 + s).values
        r = mle_gamma(y)
        best = _grid_max_1d(lambda g: _gamma_ll(y, g), 1e-3, 1e4)
        at = float(_gamma_ll(y, np.array([r.params.phi]))[0])
        assert at >= best - 1e-6


def test_mle_beta_grid_oracle():
    for s in range(50):
        a, b = rng.uniform(0.5, 8, 2)
        x = sample_beta(BetaParams(a, b), 25, 2000 + s).values
        r = mle_beta(x)
        best = _grid_max_2d(x, 1e-2, 1e3, 1e-2, 1e3)
        at = float(_beta_ll(x, np.array([r.params.alpha]), np.array([r.params.beta]))[0, 0])
        assert at >= best - 1e-6


def test_mle_beta_score_and_avar():
    x = sample_beta(BetaParams(3.0, 2.5), 300, 5).values
    r = mle_beta(x)
    a, b = r.params.alpha, r.params.beta
    assert digamma(a) - digamma(a + b) == pytest.approx(np.log(x).mean(), abs=1e-12)
    assert digamma(b) - digamma(a + b) == pytest.approx(np.log1p(-x).mean(), abs=1e-12)
    ts = trigamma(a + b)
    info = np.array([[trigamma(a) - ts, -ts], [-ts, trigamma(b) - ts]])
    assert np.allclose(r.avar @ info, np.eye(2), atol=1e-12)
    assert np.allclose(r.avar, beta_fisher_avar(r.params))


def test_mle_beta_consistency():
    x = sample_beta(BetaParams(3.0, 2.5), 100_000, 23)
    r = mle_beta(x)
    assert abs(r.params.alpha - 3.0) < 0.1 and abs(r.params.beta - 2.5) < 0.1
    u = sample_beta(BetaParams(1.0, 1.0), 100_000, 23)
    r = mle_beta(u)
    assert abs(r.params.alpha - 1.0) < 0.05 and abs(r.params.beta - 1.0) < 0.05


def test_mle_beta_reflection():
    for s in range(10):
        x = sample_beta(BetaParams(*rng.uniform(0.4, 6, 2)), 40, s).values
        a = mle_beta(x)
        b = mle_beta(1 - x)
        assert a.params.alpha == pytest.approx(b.params.beta, rel=1e-9)
        assert a.params.beta == pytest.approx(b.params.alpha, rel=1e-9)


def test_mle_beta_small_shapes_start_from_moments():
    x = sample_beta(BetaParams(0.6, 0.7), 60, 4).values
    r = mle_beta(x)
    ref = stats.beta.fit(x, floc=0, fscale=1)
    assert r.params.alpha == pytest.approx(ref[0], rel=1e-4)
    assert r.params.beta == pytest.approx(ref[1], rel=1e-4)


def test_solve_beta_iterates_stay_positive():
    # a far-off start forces step halving
    x = sample_beta(BetaParams(0.3, 0.4), 200, 8).values
    l1, l2 = np.log(x).mean(), np.log1p(-x).mean()
    a, b, ok, res = solve_beta(l1, l2, 50.0, 0.01)
    assert ok[0] and a[0] > 0 and b[0] > 0 and res[0] <= 1e-12


def test_mle_beta_errors():
    with pytest.raises(DegenerateSample):
        mle_beta([0.4, 0.4])
    with pytest.raises(NonConvergence):
        mle_beta(sample_beta(BetaParams(3.0, 2.5), 50, 1), SolverConfig(max_iter=1))


def test_moments_start():
    a, b = beta_moments_start(np.array([[0.2, 0.4, 0.6]]))
    m, v = 0.4, 0.04
    c = m * (1 - m) / v - 1
    assert a[0] == pytest.approx(m * c) and b[0] == pytest.approx((1 - m) * c)
