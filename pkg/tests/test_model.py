import math

import numpy as np
import pytest

from robust_bayes.distributions import RngStream
from robust_bayes.errors import ConfigError, DimensionError, ParameterDomainError
from robust_bayes.model import (
    Dataset,
    GibbsConfig,
    GibbsState,
    PosteriorDraws,
    PriorHyperparams,
    l2_error,
    prior_expected_signal,
)


def test_dataset_validates_shapes():
    X = np.ones((5, 2))
    with pytest.raises(DimensionError):
        Dataset(X, np.ones(4))
    with pytest.raises(DimensionError):
        Dataset(np.ones((2, 2)), np.ones(2))  # p must be < n
    with pytest.raises(DimensionError):
        Dataset(np.ones(5), np.ones(5))
    with pytest.raises(DimensionError):
        Dataset(X, np.ones(5), beta0=np.ones(3))
    d = Dataset(X, np.arange(5))
    assert (d.n, d.p, d.has_truth) == (5, 2, False)


def test_scaled_hyperparams_values():
    n, kappa = 500, 0.3
    h = PriorHyperparams.scaled(n, kappa)
    assert h.alpha_phi == 30 and h.alpha1 == 2 and h.alpha2 == 2 and h.lambda_theta == 1
    assert h.gamma_phi == pytest.approx(30 * (3 * kappa * math.log(n) - 1))
    assert h.gamma1 == pytest.approx(math.log(n) / n)
    assert h.gamma2 == pytest.approx(n**-1.5)


@pytest.mark.parametrize("n,kappa", [(500, 0.1), (500, 0.3), (2500, 0.5)])
def test_scaled_prior_means(n, kappa):
    h = PriorHyperparams.scaled(n, kappa)
    assert h.mean_phi_frac == pytest.approx(1 / (3 * kappa * math.log(n)))
    assert h.mean_delta1_sq == pytest.approx(math.log(n) / n)
    assert h.mean_delta2_sq == pytest.approx(n**-1.5)
    # expected count of large coefficients: p * E(phi_frac) = n / (3 log n)
    assert kappa * n * h.mean_phi_frac == pytest.approx(n / (3 * math.log(n)))


def test_scaled_prior_means_monte_carlo():
    h = PriorHyperparams.scaled(500, 0.3)
    g = RngStream(1).generator()
    phi = g.beta(h.alpha_phi, h.gamma_phi, 100_000)
    assert abs(phi.mean() - h.mean_phi_frac) <= 3 * phi.std() / math.sqrt(phi.size)


def test_hyperparams_positive():
    with pytest.raises(ParameterDomainError):
        PriorHyperparams(1, 1, 1, 0.0, 1, 1)
    with pytest.raises(ParameterDomainError):
        PriorHyperparams.scaled(3, 0.1)  # 3 kappa log n < 1
    with pytest.raises(ParameterDomainError):
        PriorHyperparams.scaled(500, 1.2)


def test_prior_expected_signal_examples():
    assert prior_expected_signal(0, 1.0, 0.0, 10) == 0
    assert prior_expected_signal(7, 0.25, 3.0, 7) == pytest.approx(1.75)
    n = 500
    phi = n / (3 * math.log(n))
    d1, d2 = math.log(n) / n, n**-1.5
    value = prior_expected_signal(phi, d1, d2, 150)
    # the large-coefficient term equals 1/3 exactly at these means
    assert phi * d1 == pytest.approx(1 / 3)
    assert value == pytest.approx(1 / 3 + (150 - phi) * d2)
    assert value == pytest.approx(0.3444, abs=1e-4)


def test_l2_error():
    assert l2_error([1.0, 2.0], [1.0, 2.0]) == 0
    assert l2_error([1.0, 0.0], [0.0, 1.0]) == 2
    assert l2_error([0.5, -0.5, 1.0], [0, 0, 0]) == pytest.approx(1.5)
    with pytest.raises(DimensionError):
        l2_error([1.0], [1.0, 2.0])


def _state(seed=0, n=6, p=3):
    g = np.random.default_rng(seed)
    return GibbsState(g.standard_normal(p), np.array([1, 2, 2], dtype=np.int8)[:p],
                      g.exponential(size=n), 0.7, 0.1 + 1 / 3, 1e-5 * math.pi, 0.123456789)


def test_state_round_trip_exact():
    s = _state()
    back = GibbsState.from_json(s.to_json())
    assert back == s
    assert back.beta.tobytes() == s.beta.tobytes()
    assert back.T.dtype == s.T.dtype


def test_state_check():
    s = _state()
    s.check()
    for attr, bad in [("phi_frac", 1.0), ("theta2", 0.0), ("delta2_sq", -1.0)]:
        t = s.copy()
        setattr(t, attr, bad)
        with pytest.raises(ParameterDomainError):
            t.check()
    t = s.copy()
    t.T[0] = 3
    with pytest.raises(ParameterDomainError):
        t.check()


def test_copy_is_deep():
    s = _state()
    t = s.copy()
    t.beta[0] += 1
    assert s != t


def test_config_defaults_and_validation():
    c = GibbsConfig(iterations=1000)
    assert c.burn_in == 500 and c.n_retained == 500
    assert GibbsConfig(iterations=10, burn_in=3, thin=3).n_retained == 2
    for kwargs in [dict(iterations=0), dict(iterations=10, burn_in=10), dict(thin=0),
                   dict(theta_shape="other")]:
        with pytest.raises(ConfigError):
            GibbsConfig(**kwargs)


def test_posterior_draw_reducers():
    g = np.random.default_rng(3)
    m, p = 40, 3
    beta = g.standard_normal((m, p))
    T = g.integers(1, 3, (m, p)).astype(np.int8)
    draws = PosteriorDraws(beta, T, g.random(m), g.random(m), g.random(m), g.random(m))
    assert np.allclose(draws.beta_mean, beta.sum(0) / m)
    assert np.allclose(draws.inclusion_frequency, (T == 1).mean(0))
    q = draws.beta_quantiles((0.5,))
    assert np.allclose(q[0], np.median(beta, axis=0))
    assert len(draws.states()) == m
    summary = draws.summary()
    assert summary["n_draws"] == m and len(summary["beta_mean"]) == p
