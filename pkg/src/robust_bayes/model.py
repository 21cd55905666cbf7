"""Shared model types: data, prior hyperparameters, chain state and draws."""

import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .distributions import RngStream
from .errors import ConfigError, DimensionError, ParameterDomainError

__all__ = [
    "Dataset",
    "PriorHyperparams",
    "GibbsState",
    "GibbsConfig",
    "PosteriorDraws",
    "prior_expected_signal",
    "l2_error",
]


@dataclass(frozen=True)
class Dataset:
    """Design ``X`` (n x p), response ``Y`` and optional simulation truth."""

    X: np.ndarray
    Y: np.ndarray
    beta0: np.ndarray = None
    theta0: float = None
    T0: np.ndarray = None

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        Y = np.ascontiguousarray(self.Y, dtype=float).reshape(-1)
        if X.ndim != 2:
            raise DimensionError(f"X must be 2-D, got shape {X.shape}")
        n, p = X.shape
        if Y.shape[0] != n:
            raise DimensionError(f"Y has length {Y.shape[0]} but X has {n} rows")
        if not (n >= 1 and 1 <= p < n):
            raise DimensionError(f"need 1 <= p < n, got n={n}, p={p}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        if self.beta0 is not None:
            beta0 = np.asarray(self.beta0, dtype=float).reshape(-1)
            if beta0.shape[0] != p:
                raise DimensionError(f"beta0 has length {beta0.shape[0]}, expected {p}")
            object.__setattr__(self, "beta0", beta0)
        if self.T0 is not None:
            object.__setattr__(self, "T0", np.asarray(self.T0, dtype=np.int8).reshape(-1))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def has_truth(self):
        return self.beta0 is not None

    def subset(self, rows):
        return Dataset(self.X[rows], self.Y[rows])


@dataclass(frozen=True)
class PriorHyperparams:
    """Hyperparameters of the hierarchy.

    ``alpha1, gamma1`` and ``alpha2, gamma2`` are the Inverse-Gamma
    (shape, scale) pairs for the two mixture variances, ``alpha_phi,
    gamma_phi`` the Beta prior of the large-component fraction and
    ``lambda_theta`` the rate of the exponential prior on theta^2.
    """

    alpha1: float
    gamma1: float
    alpha2: float
    gamma2: float
    alpha_phi: float
    gamma_phi: float
    lambda_theta: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (np.isfinite(value) and value > 0):
                raise ParameterDomainError(f"{f.name} must be positive, got {value!r}")

    @classmethod
    def scaled(cls, n, kappa):
        """Working priors at sample size ``n`` and ratio ``kappa = p/n``.

        Chosen so that E(phi) = n / (3 log n), E(delta1^2) = log(n)/n and
        E(delta2^2) = n^{-1.5}.
        """
        if not 0 < kappa < 1:
            raise ParameterDomainError(f"kappa must lie in (0, 1), got {kappa}")
        logn = math.log(n)
        gamma_phi = 30.0 * (3.0 * kappa * logn - 1.0)
        if gamma_phi <= 0:
            raise ParameterDomainError(f"3*kappa*log(n) must exceed 1 (n={n}, kappa={kappa})")
        return cls(
            alpha1=2.0,
            gamma1=logn / n,
            alpha2=2.0,
            gamma2=n**-1.5,
            alpha_phi=30.0,
            gamma_phi=gamma_phi,
            lambda_theta=1.0,
        )

    @property
    def mean_delta1_sq(self):
        return self.gamma1 / (self.alpha1 - 1) if self.alpha1 > 1 else math.inf

    @property
    def mean_delta2_sq(self):
        return self.gamma2 / (self.alpha2 - 1) if self.alpha2 > 1 else math.inf

    @property
    def mean_phi_frac(self):
        return self.alpha_phi / (self.alpha_phi + self.gamma_phi)

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def prior_expected_signal(phi, delta1_sq, delta2_sq, p):
    """E(||beta||^2 | phi, delta1, delta2) = phi*delta1^2 + (p - phi)*delta2^2."""
    return phi * delta1_sq + (p - phi) * delta2_sq


def l2_error(beta_hat, beta0):
    """Squared Euclidean distance ``||beta_hat - beta0||^2``."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    if beta_hat.shape != beta0.shape:
        raise DimensionError(f"length mismatch: {beta_hat.shape} vs {beta0.shape}")
    d = beta_hat - beta0
    return float(d @ d)


@dataclass
class GibbsState:
    """One point of the chain.  ``T`` holds labels in {1, 2}."""

    beta: np.ndarray
    T: np.ndarray
    sigma2: np.ndarray
    theta2: float
    delta1_sq: float
    delta2_sq: float
    phi_frac: float

    def copy(self):
        return GibbsState(
            self.beta.copy(), self.T.copy(), self.sigma2.copy(),
            self.theta2, self.delta1_sq, self.delta2_sq, self.phi_frac,
        )

    def check(self):
        """Raise ``ParameterDomainError`` if any state invariant is broken."""
        if not np.all(self.sigma2 > 0):
            raise ParameterDomainError("sigma2 must be positive")
        if not (self.theta2 > 0 and self.delta1_sq > 0 and self.delta2_sq > 0):
            raise ParameterDomainError("theta2 and deltas must be positive")
        if not 0 < self.phi_frac < 1:
            raise ParameterDomainError(f"phi_frac must lie in (0, 1), got {self.phi_frac}")
        if not np.all((self.T == 1) | (self.T == 2)):
            raise ParameterDomainError("labels must be 1 or 2")
        if not np.all(np.isfinite(self.beta)):
            raise ParameterDomainError("beta has non-finite entries")

    def to_dict(self):
        # python floats round-trip exactly through json's repr
        return {
            "beta": self.beta.tolist(),
            "T": self.T.astype(int).tolist(),
            "sigma2": self.sigma2.tolist(),
            "theta2": float(self.theta2),
            "delta1_sq": float(self.delta1_sq),
            "delta2_sq": float(self.delta2_sq),
            "phi_frac": float(self.phi_frac),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            beta=np.asarray(d["beta"], dtype=float),
            T=np.asarray(d["T"], dtype=np.int8),
            sigma2=np.asarray(d["sigma2"], dtype=float),
            theta2=float(d["theta2"]),
            delta1_sq=float(d["delta1_sq"]),
            delta2_sq=float(d["delta2_sq"]),
            phi_frac=float(d["phi_frac"]),
        )

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, GibbsState):
            return NotImplemented
        return (
            np.array_equal(self.beta, other.beta)
            and np.array_equal(self.T, other.T)
            and np.array_equal(self.sigma2, other.sigma2)
            and (self.theta2, self.delta1_sq, self.delta2_sq, self.phi_frac)
            == (other.theta2, other.delta1_sq, other.delta2_sq, other.phi_frac)
        )


@dataclass(frozen=True)
class GibbsConfig:
    """Chain length settings.  ``burn_in=None`` means half the iterations.

    ``theta_shape`` selects the shape of the theta^2 conditional: ``"joint"``
    uses n + 1 (derived from the mixing density), ``"paper-literal"`` uses
    n/2 + 1.
    """

    iterations: int = 1000
    burn_in: int = None
    thin: int = 1
    stream: RngStream = field(default_factory=lambda: RngStream(0))
    theta_shape: str = "joint"
    keep_sigma2: bool = False

    def __post_init__(self):
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.iterations // 2)
        if self.iterations < 1:
            raise ConfigError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ConfigError(f"burn_in must lie in [0, iterations), got {self.burn_in}")
        if self.thin < 1:
            raise ConfigError("thin must be positive")
        if self.theta_shape not in ("joint", "paper-literal"):
            raise ConfigError(f"unknown theta_shape {self.theta_shape!r}")

    @property
    def n_retained(self):
        return (self.iterations - self.burn_in) // self.thin

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "burn_in": self.burn_in,
            "thin": self.thin,
            "seed": self.stream.seed,
            "stream_id": self.stream.stream_id,
            "theta_shape": self.theta_shape,
        }


@dataclass
class PosteriorDraws:
    """Retained (post burn-in, thinned) draws stored column-wise.

    ``sigma2`` is kept only when requested since it is n wide per draw.
    """

    beta: np.ndarray
    T: np.ndarray
    theta2: np.ndarray
    delta1_sq: np.ndarray
    delta2_sq: np.ndarray
    phi_frac: np.ndarray
    sigma2: np.ndarray = None
    config: GibbsConfig = None

    def __len__(self):
        return self.beta.shape[0]

    def state(self, k):
        sigma2 = self.sigma2[k] if self.sigma2 is not None else np.empty(0)
        return GibbsState(
            self.beta[k].copy(), self.T[k].copy(), np.array(sigma2, copy=True),
            float(self.theta2[k]), float(self.delta1_sq[k]),
            float(self.delta2_sq[k]), float(self.phi_frac[k]),
        )

    def states(self):
        return [self.state(k) for k in range(len(self))]

    @property
    def beta_mean(self):
        """Posterior mean of beta: the Bayes point estimate."""
        return self.beta.mean(axis=0)

    def beta_quantiles(self, q=(0.025, 0.5, 0.975)):
        return np.quantile(self.beta, q, axis=0)

    @property
    def inclusion_frequency(self):
        return (self.T == 1).mean(axis=0)

    def scalar_means(self):
        return {
            "theta2": float(self.theta2.mean()),
            "delta1_sq": float(self.delta1_sq.mean()),
            "delta2_sq": float(self.delta2_sq.mean()),
            "phi_frac": float(self.phi_frac.mean()),
        }

    def summary(self, q=(0.025, 0.5, 0.975)):
        quant = self.beta_quantiles(q)
        return {
            "n_draws": len(self),
            "beta_mean": self.beta_mean.tolist(),
            "beta_quantiles": {str(level): row.tolist() for level, row in zip(q, quant)},
            "inclusion_frequency": self.inclusion_frequency.tolist(),
            "means": self.scalar_means(),
            "config": self.config.to_dict() if self.config is not None else None,
        }

    def __eq__(self, other):
        if not isinstance(other, PosteriorDraws):
            return NotImplemented
        names = ("beta", "T", "theta2", "delta1_sq", "delta2_sq", "phi_frac")
        same = all(np.array_equal(getattr(self, k), getattr(other, k)) for k in names)
        if self.sigma2 is None or other.sigma2 is None:
            return same and self.sigma2 is other.sigma2
        return same and np.array_equal(self.sigma2, other.sigma2)
