"""Property-based checks with hypothesis."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_bayes.baselines import PenaltySpec, fit_lad, fit_ls, fit_penalized, objective
from robust_bayes.gibbs import label_probability
from robust_bayes.model import GibbsState, l2_error

seeds = st.integers(0, 2**32 - 1)
finite = st.floats(-1e6, 1e6, allow_nan=False)
positive = st.floats(1e-8, 1e6)


def problem(seed, n, p):
    g = np.random.default_rng(seed)
    X = g.standard_normal((n, p))
    return X, X @ g.standard_normal(p) + g.laplace(size=n)


@given(st.lists(finite, min_size=1, max_size=20), seeds)
def test_l2_error_is_a_squared_distance(values, seed):
    a = np.array(values)
    b = a + np.random.default_rng(seed).standard_normal(a.size)
    assert l2_error(a, a) == 0
    assert l2_error(a, b) == l2_error(b, a) > 0


@given(seeds, st.integers(1, 8), st.floats(1e-300, 1e300), st.floats(1e-6, 1 - 1e-6))
def test_state_json_round_trip(seed, p, scale, phi):
    g = np.random.default_rng(seed)
    s = GibbsState(g.standard_normal(p) * scale, g.integers(1, 3, p).astype(np.int8),
                   g.exponential(size=p + 3) * scale + 1e-300, scale, scale, 1 / scale, phi)
    assert GibbsState.from_json(s.to_json()) == s


@given(finite, st.floats(1e-6, 1 - 1e-6), positive, positive)
def test_label_probability_bounded_and_even(beta, phi, d1, d2):
    pr = label_probability(np.array([beta, -beta]), phi, d1, d2)
    assert np.all((pr >= 0) & (pr <= 1))
    assert pr[0] == pr[1]


@given(st.floats(-5, 5), st.floats(1e-4, 0.5), st.floats(1e-4, 0.5))
def test_label_probability_is_bayes_rule(beta, phi, d1):
    d2 = d1 / 50
    dens = lambda v: np.exp(-beta**2 / (2 * v)) / np.sqrt(v)
    num = phi * dens(d1)
    den = num + (1 - phi) * dens(d2)
    if den > 1e-300:
        assert np.isclose(label_probability(np.array([beta]), phi, d1, d2)[0], num / den,
                          rtol=1e-9, atol=1e-300)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(3, 6))
def test_ls_shift_equivariance(seed, p):
    X, Y = problem(seed, 4 * p, p)
    b = np.random.default_rng(seed + 1).standard_normal(p)
    assert np.allclose(fit_ls(X, Y + X @ b), fit_ls(X, Y) + b, atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 4), st.floats(0.1, 10.0))
def test_lad_scale_equivariance(seed, p, c):
    X, Y = problem(seed, 6 * p, p)
    spec = PenaltySpec("absolute", "none")
    base = objective(X, Y, fit_lad(X, Y), spec)
    scaled = objective(X, c * Y, fit_lad(X, c * Y), spec)
    assert np.isclose(scaled, c * base, rtol=1e-7)


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from(["squared", "absolute"]), st.sampled_from(["l1", "l2"]),
       st.floats(0.01, 30.0))
def test_penalized_fit_beats_perturbations(seed, loss, penalty, lam):
    X, Y = problem(seed, 30, 4)
    spec = PenaltySpec(loss, penalty, lam)
    beta = fit_penalized(X, spec, Y)
    best = objective(X, Y, beta, spec)
    g = np.random.default_rng(seed)
    for _ in range(20):
        trial = beta + g.standard_normal(4) * 10.0 ** g.uniform(-4, 0)
        assert objective(X, Y, trial, spec) >= best - 1e-7 * max(best, 1.0)
    assert objective(X, Y, np.zeros(4), spec) >= best - 1e-7 * max(best, 1.0)
