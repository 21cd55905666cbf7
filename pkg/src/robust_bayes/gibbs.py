"""Blocked Gibbs sampler for linear regression with Laplace errors.

Laplace errors are written as a scale mixture of normals,
``eps_i | sigma_i^2 ~ N(0, sigma_i^2)`` with ``sigma_i^2 ~ Exp(rate theta^2/2)``.
Coefficients follow a two-component normal mixture with labels ``t_j``:
``beta_j ~ N(0, delta_{t_j}^2)`` and ``P(t_j = 1) = phi_frac``.  Every full
conditional can then be sampled directly:

==========  =============================================================
theta^2     Gamma(n + 1, rate lambda_theta + sum(sigma^2)/2)
sigma_i^-2  Inverse-Gaussian(shape theta^2, mean theta/|Y_i - X_i beta|)
beta        N(A^{-1} X^T G^{-1} Y, A^{-1}),  A = X^T G^{-1} X + V^{-1}
t_j         two-point law with weights phi*N(beta_j; 0, delta_1^2) etc.
delta_k^2   Inverse-Gamma(alpha_k + N_k/2, gamma_k + sum_{t_j=k} beta_j^2/2)
phi_frac    Beta(alpha_phi + N_1, gamma_phi + N_2)
==========  =============================================================

Sweeps run in the order listed.
"""

import io
import json
import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .distributions import (
    as_generator,
    sample_inverse_gaussian,
    sample_mvn_precision,
)
from .errors import ConditioningError, ConfigError, DimensionError
from .model import GibbsConfig, GibbsState, PosteriorDraws

__all__ = [
    "SamplerContext",
    "update_theta2",
    "update_sigma2",
    "update_beta",
    "update_t",
    "update_delta2",
    "update_phi",
    "sweep",
    "initial_state",
    "run_chain",
    "save_checkpoint",
    "load_checkpoint",
    "RESIDUAL_CLAMP",
]

RESIDUAL_CLAMP = 1e-10
SIGMA2_INIT_FLOOR = 1e-4


@dataclass
class SamplerContext:
    """Everything one sweep needs.  ``state`` is updated in place.

    ``X`` and ``Y`` are plain arrays (not a :class:`Dataset`) so kernels can
    be exercised on degenerate inputs such as n = 0.
    """

    X: np.ndarray
    Y: np.ndarray
    hyper: object
    state: GibbsState
    rng: np.random.Generator
    theta_shape: str = "joint"

    def __post_init__(self):
        self.rng = as_generator(self.rng)
        n, p = self.X.shape
        if self.Y.shape[0] != n:
            raise DimensionError("X and Y disagree on n")
        if self.state.beta.shape[0] != p or self.state.sigma2.shape[0] != n:
            raise DimensionError("state dimensions do not match the data")

    @classmethod
    def from_dataset(cls, data, hyper, state, rng, theta_shape="joint"):
        return cls(data.X, data.Y, hyper, state, rng, theta_shape)


def theta2_shape(n, rule="joint"):
    if rule == "joint":
        return n + 1.0
    if rule == "paper-literal":
        return n / 2.0 + 1.0
    raise ConfigError(f"unknown theta_shape {rule!r}")


def update_theta2(ctx):
    s = ctx.state
    shape = theta2_shape(s.sigma2.shape[0], ctx.theta_shape)
    rate = ctx.hyper.lambda_theta + 0.5 * s.sigma2.sum()
    s.theta2 = float(ctx.rng.gamma(shape, 1.0 / rate))
    return s.theta2


def update_sigma2(ctx):
    s = ctx.state
    theta = math.sqrt(s.theta2)
    resid = np.maximum(np.abs(ctx.Y - ctx.X @ s.beta), RESIDUAL_CLAMP)
    precision = sample_inverse_gaussian(s.theta2, theta / resid, ctx.rng)
    s.sigma2 = 1.0 / np.atleast_1d(precision)
    return s.sigma2


def beta_conditional(X, Y, sigma2, prior_var):
    """Precision matrix ``A`` and linear term ``c`` of the beta conditional."""
    w = 1.0 / sigma2
    Xw = X * w[:, None]
    A = X.T @ Xw
    A[np.diag_indices_from(A)] += 1.0 / prior_var
    return A, Xw.T @ Y


def update_beta(ctx):
    s = ctx.state
    prior_var = np.where(s.T == 1, s.delta1_sq, s.delta2_sq)
    A, c = beta_conditional(ctx.X, ctx.Y, s.sigma2, prior_var)
    s.beta = sample_mvn_precision(A, c, ctx.rng)
    return s.beta


def label_probability(beta, phi_frac, delta1_sq, delta2_sq):
    """P(t_j = 1 | beta_j, ...) computed on the log scale."""
    beta2 = np.square(beta)
    log1 = math.log(phi_frac) - 0.5 * math.log(delta1_sq) - beta2 / (2.0 * delta1_sq)
    log2 = math.log1p(-phi_frac) - 0.5 * math.log(delta2_sq) - beta2 / (2.0 * delta2_sq)
    return expit(log1 - log2)


def update_t(ctx):
    s = ctx.state
    prob = label_probability(s.beta, s.phi_frac, s.delta1_sq, s.delta2_sq)
    u = ctx.rng.random(prob.shape)
    s.T = np.where(u < prob, 1, 2).astype(np.int8)
    return s.T


def update_delta2(ctx):
    s, h = ctx.state, ctx.hyper
    large = s.T == 1
    b2 = np.square(s.beta)
    n1 = int(large.sum())
    n2 = s.T.shape[0] - n1
    ss1 = float(b2[large].sum())
    ss2 = float(b2[~large].sum())
    s.delta1_sq = 1.0 / ctx.rng.gamma(h.alpha1 + 0.5 * n1, 1.0 / (h.gamma1 + 0.5 * ss1))
    s.delta2_sq = 1.0 / ctx.rng.gamma(h.alpha2 + 0.5 * n2, 1.0 / (h.gamma2 + 0.5 * ss2))
    return s.delta1_sq, s.delta2_sq


_PHI_EPS = np.finfo(float).tiny


def update_phi(ctx):
    s, h = ctx.state, ctx.hyper
    n1 = int((s.T == 1).sum())
    n2 = s.T.shape[0] - n1
    draw = ctx.rng.beta(h.alpha_phi + n1, h.gamma_phi + n2)
    # keep the open-interval invariant when the Beta draw rounds to 0 or 1
    s.phi_frac = float(min(max(draw, _PHI_EPS), 1.0 - np.finfo(float).epsneg))
    return s.phi_frac


UPDATES = (update_theta2, update_sigma2, update_beta, update_t, update_delta2, update_phi)


def sweep(ctx):
    for update in UPDATES:
        update(ctx)
    return ctx.state


def initial_state(data, hyper):
    """Ridge start with residual-based sigma^2 and prior-mean hyperparameters."""
    X, Y = data.X, data.Y
    p = X.shape[1]
    G = X.T @ X
    G[np.diag_indices_from(G)] += 1.0
    beta = np.linalg.solve(G, X.T @ Y)
    sigma2 = np.maximum(np.square(Y - X @ beta), SIGMA2_INIT_FLOOR)

    def prior_mean(alpha, gamma):
        return gamma / (alpha - 1.0) if alpha > 1 else gamma / (alpha + 1.0)

    phi_frac = hyper.mean_phi_frac
    n_large = min(p, math.ceil(p * phi_frac))
    T = np.full(p, 2, dtype=np.int8)
    T[np.argsort(-np.abs(beta), kind="stable")[:n_large]] = 1
    return GibbsState(
        beta=beta,
        T=T,
        sigma2=sigma2,
        theta2=1.0,
        delta1_sq=prior_mean(hyper.alpha1, hyper.gamma1),
        delta2_sq=prior_mean(hyper.alpha2, hyper.gamma2),
        phi_frac=phi_frac,
    )


class _DrawBuffer:
    def __init__(self, m, n, p, keep_sigma2):
        self.beta = np.empty((m, p))
        self.T = np.empty((m, p), dtype=np.int8)
        self.scalars = np.empty((m, 4))
        self.sigma2 = np.empty((m, n)) if keep_sigma2 else None
        self.count = 0

    def add(self, s):
        k = self.count
        self.beta[k] = s.beta
        self.T[k] = s.T
        self.scalars[k] = (s.theta2, s.delta1_sq, s.delta2_sq, s.phi_frac)
        if self.sigma2 is not None:
            self.sigma2[k] = s.sigma2
        self.count += 1

    def arrays(self):
        out = {"beta": self.beta, "T": self.T, "scalars": self.scalars}
        if self.sigma2 is not None:
            out["sigma2"] = self.sigma2
        return out

    def restore(self, arrays, count):
        self.count = count
        self.beta[:count] = arrays["beta"][:count]
        self.T[:count] = arrays["T"][:count]
        self.scalars[:count] = arrays["scalars"][:count]
        if self.sigma2 is not None:
            self.sigma2[:count] = arrays["sigma2"][:count]

    def draws(self, config):
        sc = self.scalars
        return PosteriorDraws(
            beta=self.beta, T=self.T, theta2=sc[:, 0].copy(), delta1_sq=sc[:, 1].copy(),
            delta2_sq=sc[:, 2].copy(), phi_frac=sc[:, 3].copy(), sigma2=self.sigma2,
            config=config,
        )


def run_chain(data, hyper, config=None, *, init=None, checkpoint=None, checkpoint_every=0,
              resume=False, validate=False):
    """Run the sampler and return the retained draws.

    Parameters
    ----------
    data : Dataset
    hyper : PriorHyperparams
    config : GibbsConfig
        Iterations, burn-in, thinning and the random stream.
    init : GibbsState, optional
        Starting point; defaults to :func:`initial_state`.
    checkpoint : path-like, optional
        File written every ``checkpoint_every`` sweeps.  With ``resume`` an
        existing checkpoint is loaded first and the chain continues from it;
        the result is identical to an uninterrupted run.
    validate : bool
        Check the state invariants after every sweep.

    Raises
    ------
    ConditioningError
        When the beta precision matrix cannot be factorized; ``iteration`` is
        set on the exception.
    """
    config = config or GibbsConfig()
    rng = config.stream.generator()
    state = (init or initial_state(data, hyper)).copy()
    buf = _DrawBuffer(config.n_retained, data.n, data.p, config.keep_sigma2)
    start = 0
    if resume and checkpoint is not None:
        try:
            ck = load_checkpoint(checkpoint)
        except FileNotFoundError:
            ck = None
        if ck is not None:
            if ck["config"] != config.to_dict():
                raise ConfigError("checkpoint was written with a different chain configuration")
            state = ck["state"]
            rng.bit_generator.state = ck["rng_state"]
            buf.restore(ck["arrays"], ck["retained"])
            start = ck["iteration"]
    ctx = SamplerContext(data.X, data.Y, hyper, state, rng, config.theta_shape)
    for it in range(start, config.iterations):
        try:
            sweep(ctx)
        except ConditioningError as exc:
            exc.iteration = it
            raise
        if validate:
            ctx.state.check()
        kept = it - config.burn_in
        if kept >= 0 and kept % config.thin == 0 and buf.count < config.n_retained:
            buf.add(ctx.state)
        if checkpoint is not None and checkpoint_every and (it + 1) % checkpoint_every == 0:
            save_checkpoint(checkpoint, ctx.state, it + 1, config, rng, buf)
    return buf.draws(config)


# ------------------------------------------------------------- checkpoints

_MAGIC = b"RBGIBBS\0"
_VERSION = 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return {"__array__": obj.tolist(), "dtype": str(obj.dtype)}
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _from_jsonable(obj):
    if isinstance(obj, dict):
        if "__array__" in obj:
            return np.array(obj["__array__"], dtype=obj["dtype"])
        return {k: _from_jsonable(v) for k, v in obj.items()}
    return obj


def save_checkpoint(path, state, iteration, config, rng, buf):
    """Binary checkpoint: magic, version, JSON header length, JSON, npz payload."""
    header = json.dumps({
        "iteration": iteration,
        "retained": buf.count,
        "config": config.to_dict(),
        "state": state.to_dict(),
        "rng_state": _jsonable(rng.bit_generator.state),
    }).encode()
    payload = io.BytesIO()
    np.savez(payload, **buf.arrays())
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HQ", _VERSION, len(header)))
        fh.write(header)
        fh.write(payload.getvalue())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ConfigError(f"{path} is not a chain checkpoint")
        version, size = struct.unpack("<HQ", fh.read(10))
        if version != _VERSION:
            raise ConfigError(f"unsupported checkpoint version {version}")
        header = json.loads(fh.read(size))
        arrays = dict(np.load(io.BytesIO(fh.read())))
    return {
        "iteration": header["iteration"],
        "retained": header["retained"],
        "config": header["config"],
        "state": GibbsState.from_dict(header["state"]),
        "rng_state": _from_jsonable(header["rng_state"]),
        "arrays": arrays,
    }
