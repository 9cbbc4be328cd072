import math

import mpmath
import numpy as np
import pytest

from mmle.errors import DomainError, QuadratureError
from mmle.special import (
    QuadratureRule,
    digamma,
    expectation_quadrature,
    gauss_laguerre,
    gauss_legendre,
    log_beta,
    log_gamma,
    log_minus_digamma,
    trigamma,
)

mpmath.mp.dps = 40
EULER = 0.57721566490153286061

rng = np.random.default_rng(20240101)
POINTS = np.concatenate([rng.uniform(0.0, 100.0, 44), [1e-3, 0.01, 0.5, 5.999, 6.0, 100.0]])


@pytest.mark.parametrize("x", POINTS)
def test_digamma_trigamma_against_series_oracle(x):
    assert abs(digamma(x) - float(mpmath.psi(0, x))) <= 1e-10
    assert abs(trigamma(x) - float(mpmath.psi(1, x))) <= 1e-10


@pytest.mark.parametrize("x", [1e-3, 0.3, 1.0, 2.5, 7.0, 55.5, 100.0, 1e4])
def test_log_gamma_against_oracle(x):
    assert log_gamma(x) == pytest.approx(float(mpmath.loggamma(x)), rel=1e-13, abs=1e-14)


def test_known_values():
    assert digamma(1.0) == pytest.approx(-EULER, abs=1e-14)
    assert trigamma(1.0) == pytest.approx(math.pi**2 / 6, abs=1e-14)
    assert trigamma(3.0) == pytest.approx(math.pi**2 / 6 - 1.25, abs=1e-14)
    assert abs(log_gamma(1.0)) < 1e-14 and abs(log_gamma(2.0)) < 1e-14
    assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), abs=1e-14)
    # zeta(2) partial sums with the integral tail as an independent check
    k = np.arange(1, 200001, dtype=float)
    assert trigamma(1.0) == pytest.approx(np.sum(1 / k[::-1] ** 2) + 1 / 200000.5, abs=1e-12)


def test_recurrences():
    x = rng.uniform(1e-3, 100.0, 200)
    assert np.max(np.abs(digamma(x + 1) - digamma(x) - 1 / x)) <= 1e-12
    assert np.max(np.abs(trigamma(x + 1) - trigamma(x) + 1 / x**2)) <= 1e-12 * np.maximum(1, 1 / x**2).max()
    y = rng.uniform(0.5, 100.0, 200)
    assert np.max(np.abs(trigamma(y + 1) - trigamma(y) + 1 / y**2)) <= 1e-12
    assert np.max(np.abs(log_gamma(x + 1) - log_gamma(x) - np.log(x))) <= 1e-12


def test_trigamma_positive_and_log_gamma_convex():
    x = np.geomspace(1e-3, 1e3, 500)
    assert np.all(trigamma(x) > 0)
    h = 0.5 * x * rng.uniform(0.01, 0.99, x.size)
    assert np.all(log_gamma(x - h) + log_gamma(x + h) >= 2 * log_gamma(x) - 1e-12)


def test_derivative_consistency():
    x = np.linspace(0.5, 50.0, 100)
    h = 1e-5
    fd = (log_gamma(x + h) - log_gamma(x - h)) / (2 * h)
    assert np.max(np.abs(fd - digamma(x))) <= 1e-6
    fd2 = (digamma(x + h) - digamma(x - h)) / (2 * h)
    assert np.max(np.abs(fd2 - trigamma(x)) / trigamma(x)) <= 1e-6


def test_log_minus_digamma_matches_and_is_decreasing():
    x = np.geomspace(1e-3, 1e8, 400)
    v = log_minus_digamma(x)
    assert np.all(np.diff(v) < 0) and np.all(v > 0)
    for t in [0.01, 1.0, 5.9, 6.0, 30.0, 1e6]:
        ref = float(mpmath.log(t) - mpmath.psi(0, t))
        assert log_minus_digamma(t) == pytest.approx(ref, rel=1e-12)


def test_log_beta():
    assert log_beta(2.0, 2.0) == pytest.approx(-math.log(6.0), abs=1e-14)
    assert log_beta(3.0, 2.5) == pytest.approx(float(mpmath.log(mpmath.beta(3, 2.5))), abs=1e-14)


def test_scalar_in_scalar_out_and_shapes():
    assert isinstance(digamma(2.0), float)
    assert digamma(np.ones((2, 3))).shape == (2, 3)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
def test_rejects_bad_input(bad):
    for f in (log_gamma, digamma, trigamma):
        with pytest.raises(DomainError):
            f(bad)
    with pytest.raises(DomainError):
        digamma(np.array([1.0, bad]))


def test_legendre_integrates_polynomials():
    rule = gauss_legendre(64, 0.0, 2.0)
    assert len(rule) == 64
    assert expectation_quadrature(lambda x: x**5, rule) == pytest.approx(64 / 6, rel=1e-14)
    comp = gauss_legendre(16, -1.0, 1.0, panels=4)
    assert len(comp) == 64
    assert expectation_quadrature(np.cos, comp) == pytest.approx(2 * math.sin(1.0), rel=1e-14)


def test_laguerre_gamma_mean():
    # E[X] with shape phi=2, scale lam/phi: X = (lam/phi) U with U ~ Gamma(2, 1)
    lam, phi = 1.5, 2.0
    rule = gauss_laguerre(64, alpha=phi - 1.0)
    val = expectation_quadrature(lambda u: (lam / phi) * u / math.gamma(phi), rule)
    assert val == pytest.approx(1.5, abs=1e-8)
    plain = gauss_laguerre(64)
    assert expectation_quadrature(lambda u: u**3, plain) == pytest.approx(6.0, rel=1e-12)


def test_beta_normalization_plain_legendre_is_limited():
    # endpoint behaviour (1-x)**1.5 limits a single 64-node rule to about 1e-9;
    # the library integrates beta expectations in the logit instead
    rule = gauss_legendre(64, 0.0, 1.0)
    dens = lambda x: np.exp(2 * np.log(x) + 1.5 * np.log1p(-x) - log_beta(3.0, 2.5))
    assert abs(expectation_quadrature(dens, rule) - 1.0) < 1e-8


def test_quadrature_rejects_non_finite():
    rule = gauss_legendre(8, 0.0, 1.0)
    with pytest.raises(QuadratureError):
        expectation_quadrature(lambda x: np.where(x > 0.5, np.inf, 1.0), rule)


def test_rule_invariants():
    with pytest.raises(ValueError):
        QuadratureRule([0.0, 1.0], [1.0, -1.0], "legendre")
    with pytest.raises(ValueError):
        QuadratureRule([1.0, 0.0], [1.0, 1.0], "legendre")
    with pytest.raises(ValueError):
        QuadratureRule([0.0, 1.0], [1.0, 1.0], "hermite")
    rule = gauss_legendre(4)
    with pytest.raises(ValueError):
        rule.nodes[0] = 3.0
