"""Random variate generators used by the sampler and the simulator.

Every sampler takes an ``rng`` argument which may be a
:class:`numpy.random.Generator`, an :class:`RngStream`, an integer seed or
``None``.  Gamma-type laws are parameterized by (shape, rate) throughout.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ConditioningError, ParameterDomainError

__all__ = [
    "RngStream",
    "as_generator",
    "sample_inverse_gaussian",
    "sample_mvn_precision",
    "sample_gamma",
    "sample_inverse_gamma",
    "sample_beta",
    "sample_laplace",
    "cholesky_with_jitter",
]

_UINT64 = 2**64


@dataclass(frozen=True)
class RngStream:
    """A reproducible, splittable source of randomness.

    ``(seed, stream_id)`` identifies the stream.  Streams are built on
    Philox seeded through :class:`numpy.random.SeedSequence` with the stream
    id in the spawn key, so distinct ids give independent streams by
    construction.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= value < _UINT64:
                raise ParameterDomainError(f"{name} must be a 64-bit unsigned integer, got {value!r}")

    def generator(self, *subkeys):
        """Fresh generator for this stream (or for a sub-stream of it)."""
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), *map(int, subkeys)))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, stream_id):
        return RngStream(self.seed, stream_id)


def as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return np.random.default_rng(rng)


def _check_positive(**params):
    for name, value in params.items():
        arr = np.asarray(value, dtype=float)
        if not np.all(arr > 0) or not np.all(np.isfinite(arr)):
            raise ParameterDomainError(f"{name} must be positive and finite, got {value!r}")


def sample_inverse_gaussian(a, b, rng=None, size=None):
    """Draw from the Inverse-Gaussian law with shape ``a`` and mean ``b``.

    Density ``sqrt(a/2pi) t^{-3/2} exp(-a (t-b)^2 / (2 b^2 t))`` on t > 0,
    mean ``b`` and variance ``b**3 / a``.  Uses the transformation with
    multiple roots (Michael, Schucany and Haas, 1976): the smaller root of
    the chi-square equation is taken with probability b / (b + x).

    ``a`` and ``b`` broadcast against each other and ``size``.
    """
    _check_positive(a=a, b=b)
    gen = as_generator(rng)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    shape = np.broadcast_shapes(a.shape, b.shape) if size is None else size
    nu = gen.standard_normal(shape)
    u = gen.random(shape)
    w = b * nu * nu / a
    # smaller root x = b * (1 + w/2 - sqrt(w + w^2/4)), rewritten to avoid cancellation
    x = b / (1.0 + 0.5 * w + np.sqrt(w + 0.25 * w * w))
    out = np.where(u * (b + x) <= b, x, b * b / x)
    return out if out.ndim else float(out)


def cholesky_with_jitter(A, start=1e-10, stop=1e-6):
    """Lower Cholesky factor of ``A``, adding diagonal jitter on failure.

    Jitter starts at ``start * mean(diag(A))`` and grows tenfold up to
    ``stop * mean(diag(A))``.
    """
    try:
        return linalg.cholesky(A, lower=True, check_finite=False)
    except linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(A)))
    tried = []
    level = start
    while level <= stop * (1 + 1e-9):
        eps = level * scale
        tried.append(eps)
        try:
            return linalg.cholesky(A + eps * np.eye(A.shape[0]), lower=True, check_finite=False)
        except linalg.LinAlgError:
            level *= 10
    raise ConditioningError(f"Cholesky failed after jitter levels {tried}", jitters=tried)


def sample_mvn_precision(A, c, rng=None):
    """Draw from N(A^{-1} c, A^{-1}) given the precision matrix ``A``.

    One Cholesky factorization ``A = L L^T`` and two triangular solves:
    ``L m = c`` then ``L^T v = m + z`` with ``z ~ N(0, I)``.
    """
    A = np.asarray(A, dtype=float)
    c = np.asarray(c, dtype=float)
    gen = as_generator(rng)
    L = cholesky_with_jitter(A)
    m = linalg.solve_triangular(L, c, lower=True, check_finite=False)
    z = gen.standard_normal(c.shape[0])
    return linalg.solve_triangular(L, m + z, lower=True, trans="T", check_finite=False)


def sample_gamma(shape, rate, rng=None, size=None):
    """Gamma(shape, rate); mean shape/rate."""
    _check_positive(shape=shape, rate=rate)
    out = as_generator(rng).gamma(shape, 1.0 / np.asarray(rate, dtype=float), size=size)
    return out if np.ndim(out) else float(out)


def sample_inverse_gamma(shape, scale, rng=None, size=None):
    """Inverse-Gamma(shape, scale): reciprocal of a Gamma(shape, rate=scale) draw."""
    _check_positive(shape=shape, scale=scale)
    g = as_generator(rng).gamma(shape, 1.0 / np.asarray(scale, dtype=float), size=size)
    out = 1.0 / g
    return out if np.ndim(out) else float(out)


def sample_beta(a, b, rng=None, size=None):
    _check_positive(a=a, b=b)
    out = as_generator(rng).beta(a, b, size=size)
    return out if np.ndim(out) else float(out)


def sample_laplace(theta, rng=None, size=None):
    """Laplace errors with density ``theta/2 * exp(-theta |t|)``; variance 2/theta^2."""
    _check_positive(theta=theta)
    out = as_generator(rng).laplace(0.0, 1.0 / np.asarray(theta, dtype=float), size=size)
    return out if np.ndim(out) else float(out)
