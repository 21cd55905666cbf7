"""Synthetic data from the prior hierarchy and the large-coefficient diagnostic.

Each dataset draws from separate sub-streams of its :class:`RngStream`
(design, coefficients, error scale, errors).  Replications sharing a stream
therefore share their error scale and most coefficient draws across sample
sizes and ratios, which pairs comparisons between cells.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import RngStream
from .errors import ConfigError, DimensionError, ParameterDomainError
from .model import Dataset, PriorHyperparams

__all__ = [
    "SimDesign",
    "generate_dataset",
    "draw_prior_coefficients",
    "LargeCoefCheck",
    "check_large_coef_proportion",
    "XI",
]

# tail exponent fixed by the small-component scale gamma2 = n^-1.5
XI = 1.5

_SUB_X, _SUB_COEF, _SUB_THETA, _SUB_EPS = 0, 1, 2, 3


def dimension(n, kappa):
    """p = ceil(kappa * n), guarding against float round-up (0.3 * 500 = 150.00000000000003)."""
    return math.ceil(round(kappa * n, 9))


@dataclass(frozen=True)
class SimDesign:
    """Simulation cell: sample size, ratio and stream.

    ``theta_prior`` picks the law of the error scale: ``"theta2"`` draws
    theta^2 ~ Exp(lambda_theta) as in the model hierarchy, ``"theta"`` draws
    theta ~ Exp(1).  ``theta0`` freezes the scale for every replication.
    """

    n: int
    kappa: float
    stream: RngStream = field(default_factory=lambda: RngStream(0))
    hyper: PriorHyperparams = None
    theta_prior: str = "theta2"
    theta0: float = None

    def __post_init__(self):
        if not 0 < self.kappa < 1:
            raise ParameterDomainError(f"kappa must lie in (0, 1), got {self.kappa}")
        p = dimension(self.n, self.kappa)
        if not 1 <= p < self.n:
            raise DimensionError(f"need 1 <= p < n, got n={self.n}, p={p}")
        if self.hyper is None:
            object.__setattr__(self, "hyper", PriorHyperparams.scaled(self.n, self.kappa))
        if self.theta_prior not in ("theta2", "theta"):
            raise ConfigError(f"unknown theta_prior {self.theta_prior!r}")
        if self.theta0 is not None and not self.theta0 > 0:
            raise ParameterDomainError("theta0 must be positive")

    @property
    def p(self):
        return dimension(self.n, self.kappa)

    def with_stream(self, stream):
        return SimDesign(self.n, self.kappa, stream, self.hyper, self.theta_prior, self.theta0)


def draw_prior_coefficients(hyper, p, rng, size=None):
    """Coefficients from the hierarchy: phi_frac, deltas, labels, beta.

    With ``size`` every output gains a leading replication axis.
    """
    reps = () if size is None else (size,)
    phi_frac = rng.beta(hyper.alpha_phi, hyper.gamma_phi, size=reps or None)
    d1 = 1.0 / rng.gamma(hyper.alpha1, 1.0 / hyper.gamma1, size=reps or None)
    d2 = 1.0 / rng.gamma(hyper.alpha2, 1.0 / hyper.gamma2, size=reps or None)
    phi_col = np.asarray(phi_frac)[..., None]
    T = np.where(rng.random(reps + (p,)) < phi_col, 1, 2).astype(np.int8)
    sd = np.where(T == 1, np.sqrt(np.asarray(d1))[..., None], np.sqrt(np.asarray(d2))[..., None])
    beta = sd * rng.standard_normal(reps + (p,))
    return phi_frac, d1, d2, T, beta


def generate_dataset(design):
    """Simulate ``(X, Y)`` with truth; deterministic in the design's stream."""
    n, p, h = design.n, design.p, design.hyper
    s = design.stream
    X = s.generator(_SUB_X).standard_normal((n, p))
    _, _, _, T, beta = draw_prior_coefficients(h, p, s.generator(_SUB_COEF))
    if design.theta0 is not None:
        theta = float(design.theta0)
    elif design.theta_prior == "theta2":
        theta = math.sqrt(s.generator(_SUB_THETA).exponential(1.0 / h.lambda_theta))
    else:
        theta = float(s.generator(_SUB_THETA).exponential(1.0))
    eps = s.generator(_SUB_EPS).laplace(0.0, 1.0 / theta, size=n)
    return Dataset(X, X @ beta + eps, beta0=beta, theta0=theta, T0=T)


@dataclass(frozen=True)
class LargeCoefCheck:
    mean_B: float
    mean_phi_frac: float
    mean_rel_dev: float
    max_rel_dev: float
    threshold: float


def check_large_coef_proportion(design, C, eta, reps=1000):
    """Monte Carlo look at the share of coefficients above ``C n^(-eta/2)``.

    For each of ``reps`` prior draws computes B = mean(|beta_j| > threshold)
    and compares it with the drawn mixing fraction through
    ``|B - phi_frac| / phi_frac``.
    """
    if not 1 <= eta < XI:
        raise ParameterDomainError(f"eta must lie in [1, {XI}), got {eta}")
    if reps < 100:
        raise ConfigError("reps must be at least 100")
    if C < 0:
        raise ParameterDomainError("C must be non-negative")
    threshold = C * design.n ** (-eta / 2.0)
    phi_frac, _, _, _, beta = draw_prior_coefficients(
        design.hyper, design.p, design.stream.generator(_SUB_COEF), size=reps)
    B = (np.abs(beta) > threshold).mean(axis=1)
    rel = np.abs(B - phi_frac) / phi_frac
    return LargeCoefCheck(float(B.mean()), float(phi_frac.mean()), float(rel.mean()),
                          float(rel.max()), threshold)
