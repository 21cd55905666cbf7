"""Self-checks: joint-distribution test of the sampler and sampler moments.

The joint test compares two ways of drawing (parameters, data) from the same
joint law.  Marginal-conditional draws take the parameters straight from the
prior.  Successive-conditional draws alternate one Gibbs sweep with a fresh
response drawn from the likelihood.  With correct kernels both give the same
parameter marginals, so the means of any test function agree up to Monte
Carlo error.
"""

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (
    RngStream,
    sample_beta,
    sample_gamma,
    sample_inverse_gamma,
    sample_inverse_gaussian,
    sample_laplace,
)
from .errors import ConditioningError, ConfigError, ParameterDomainError
from .gibbs import SamplerContext, sweep
from .model import GibbsState, PriorHyperparams
from .simulate import draw_prior_coefficients

__all__ = [
    "GEWEKE_HYPER",
    "DEFAULT_TEST_FUNCTIONS",
    "GewekeResult",
    "geweke_joint_test",
    "batch_means_se",
    "MomentCheck",
    "moment_suite",
]

# Finite fourth moments for every test function (the scaled working prior
# has alpha = 2, so delta^2 and beta^2 would have infinite variance).
GEWEKE_HYPER = PriorHyperparams(alpha1=6.0, gamma1=5.0, alpha2=6.0, gamma2=0.05,
                                alpha_phi=2.0, gamma_phi=3.0, lambda_theta=1.0)

DEFAULT_TEST_FUNCTIONS = {
    "beta1": lambda s: s.beta[0],
    "beta1_sq": lambda s: s.beta[0] ** 2,
    "theta2": lambda s: s.theta2,
    "delta1_sq": lambda s: s.delta1_sq,
    "phi_frac": lambda s: s.phi_frac,
    "n_large": lambda s: float(np.count_nonzero(s.T == 1)),
}


def batch_means_se(x, batches=50):
    """Standard error of the mean of a correlated series by batch means."""
    x = np.asarray(x, dtype=float)
    size = x.shape[0] // batches
    if size < 1:
        raise ConfigError("series shorter than the number of batches")
    means = x[: size * batches].reshape(batches, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))


@dataclass
class GewekeResult:
    z: dict
    mc_mean: dict
    sc_mean: dict
    n_cycles: int
    diverged_at: int = None

    @property
    def max_abs_z(self):
        return max(abs(v) for v in self.z.values())


def _prior_state(hyper, X, rng):
    n, p = X.shape
    phi, d1, d2, T, beta = draw_prior_coefficients(hyper, p, rng)
    theta2 = rng.exponential(1.0 / hyper.lambda_theta)
    sigma2 = rng.exponential(2.0 / theta2, size=n)
    return GibbsState(beta, T, sigma2, float(theta2), float(d1), float(d2), float(phi))


def _regenerate(ctx, rng):
    s = ctx.state
    ctx.Y = ctx.X @ s.beta + np.sqrt(s.sigma2) * rng.standard_normal(ctx.X.shape[0])


def geweke_joint_test(n_small=20, p_small=5, n_cycles=100_000, test_functions=None,
                      hyper=None, theta_shape="joint", seed=0, batches=50):
    """z-scores comparing marginal-conditional and successive-conditional means.

    Parameters
    ----------
    n_small, p_small : int
        Size of the fixed standard-normal design.
    n_cycles : int
        Draws on each side.
    test_functions : dict of name -> callable(GibbsState) -> float
    hyper : PriorHyperparams, optional
        Defaults to :data:`GEWEKE_HYPER`.
    theta_shape : {"joint", "paper-literal"}
        Forwarded to the sampler, so a wrong theta^2 kernel can be exercised.
    """
    if n_cycles < 1:
        raise ConfigError("n_cycles must be positive")
    if n_cycles < 2 * batches:
        raise ConfigError(f"n_cycles must be at least {2 * batches} for batch means")
    hyper = hyper or GEWEKE_HYPER
    funcs = test_functions or DEFAULT_TEST_FUNCTIONS
    stream = RngStream(seed)
    X = stream.generator(0).standard_normal((n_small, p_small))

    # marginal-conditional: independent prior draws
    rng = stream.generator(1)
    phi, d1, d2, T, beta = draw_prior_coefficients(hyper, p_small, rng, size=n_cycles)
    theta2 = rng.exponential(1.0 / hyper.lambda_theta, size=n_cycles)
    mc_vals = {name: [] for name in funcs}
    for k in range(n_cycles):
        s = GibbsState(beta[k], T[k], np.ones(n_small), float(theta2[k]), float(d1[k]),
                       float(d2[k]), float(phi[k]))
        for name, f in funcs.items():
            mc_vals[name].append(f(s))

    # successive-conditional: Gibbs sweep, then new data
    rng = stream.generator(2)
    state = _prior_state(hyper, X, rng)
    ctx = SamplerContext(X, np.zeros(n_small), hyper, state, rng, theta_shape)
    _regenerate(ctx, rng)
    sc_vals = {name: np.empty(n_cycles) for name in funcs}
    diverged_at = None
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        for k in range(n_cycles):
            try:
                sweep(ctx)
                _regenerate(ctx, rng)
                ctx.state.check()
                if not np.all(np.isfinite(ctx.Y)):
                    raise ParameterDomainError("response is not finite")
            except (ParameterDomainError, ConditioningError):
                # a chain that leaves the parameter space cannot target the prior
                diverged_at = k
                break
            for name, f in funcs.items():
                sc_vals[name][k] = f(ctx.state)
    done = n_cycles if diverged_at is None else diverged_at

    z, mc_mean, sc_mean = {}, {}, {}
    for name in funcs:
        mc = np.asarray(mc_vals[name], dtype=float)
        sc = sc_vals[name][:done]
        mc_mean[name] = float(mc.mean())
        sc_mean[name] = float(sc.mean()) if done else float("nan")
        if done < 2 * batches:
            z[name] = math.inf
            continue
        se = math.hypot(mc.std(ddof=1) / math.sqrt(n_cycles), batch_means_se(sc, batches))
        z[name] = (mc_mean[name] - sc_mean[name]) / se if se > 0 else math.inf
    return GewekeResult(z, mc_mean, sc_mean, n_cycles, diverged_at)


# ------------------------------------------------------------ moment suite

@dataclass
class MomentCheck:
    name: str
    mean: float
    var: float
    target_mean: float
    target_var: float
    z_mean: float
    z_var: float

    @property
    def passed(self):
        return abs(self.z_mean) <= 3.0 and abs(self.z_var) <= 3.0


def _moments(name, x, mu, var):
    x = np.asarray(x, dtype=float)
    N = x.shape[0]
    m, v = x.mean(), x.var(ddof=1)
    c = x - m
    m4 = np.mean(c**4)
    se_m = math.sqrt(v / N)
    se_v = math.sqrt(max(m4 - v * v, 0.0) / N)
    return MomentCheck(name, m, v, mu, var, (m - mu) / se_m, (v - var) / se_v)


def moment_suite(n_draws=100_000, seed=0):
    """Two-moment checks of every sampler at three parameter settings each.

    Settings keep the fourth moment finite so the variance test is valid.
    """
    s = RngStream(seed)
    g = lambda k: s.generator(k)
    out = []
    for k, (a, b) in enumerate([(1.0, 1.0), (4.0, 2.0), (0.5, 5.0)]):
        out.append(_moments(f"inverse_gaussian a={a} b={b}",
                            sample_inverse_gaussian(a, b, g(k), size=n_draws), b, b**3 / a))
    for k, (sh, rt) in enumerate([(1.0, 1.0), (3.0, 2.0), (0.5, 4.0)]):
        out.append(_moments(f"gamma shape={sh} rate={rt}",
                            sample_gamma(sh, rt, g(10 + k), size=n_draws), sh / rt, sh / rt**2))
    for k, (al, ga) in enumerate([(6.0, 1.0), (7.0, 4.0), (9.0, 0.5)]):
        out.append(_moments(f"inverse_gamma shape={al} scale={ga}",
                            sample_inverse_gamma(al, ga, g(20 + k), size=n_draws),
                            ga / (al - 1), ga**2 / ((al - 1) ** 2 * (al - 2))))
    for k, (a, b) in enumerate([(1.0, 1.0), (2.0, 2.0), (30.0, 137.8)]):
        out.append(_moments(f"beta a={a} b={b}", sample_beta(a, b, g(30 + k), size=n_draws),
                            a / (a + b), a * b / ((a + b) ** 2 * (a + b + 1))))
    for k, th in enumerate([1.0, 2.0, 0.5]):
        out.append(_moments(f"laplace theta={th}", sample_laplace(th, g(40 + k), size=n_draws),
                            0.0, 2.0 / th**2))
    return out
