"""Frequentist comparison estimators.

All objectives use the plain sum over observations,

    f(beta) = sum_i rho(Y_i - X_i^T beta) + P_lambda(beta),

with rho(x) = x^2 (squared) or |x| (absolute) and P_lambda = lambda*||beta||_1
or lambda*||beta||^2.

Solvers
-------
* squared + none: normal equations via a Cholesky/QR solve.
* squared + l2: eigendecomposition of X^T X (closed form for any lambda).
* squared + l1: cyclic coordinate descent with covariance updates, then an
  exact solve on the selected support.
* absolute + none / l1: exact vertex solution of the dual linear program
  (HiGHS dual simplex), hot-started along lambda paths.
* absolute + l2: ADMM on the split r = Y - X beta, finished by an exact
  active-set solve that certifies the KKT conditions.
"""

import logging
from dataclasses import dataclass

import highspy
import numba
import numpy as np
from scipy import linalg, sparse

from .distributions import as_generator
from .errors import ConfigError, ConvergenceError, ParameterDomainError, SingularDesignError
from .model import Dataset

__all__ = [
    "PenaltySpec",
    "CvConfig",
    "ESTIMATORS",
    "objective",
    "fit_ls",
    "fit_lad",
    "fit_penalized",
    "lambda_max",
    "lambda_grid",
    "cross_validate",
    "fit_estimator",
]

log = logging.getLogger(__name__)

LOSSES = ("squared", "absolute")
PENALTIES = ("none", "l1", "l2")


@dataclass(frozen=True)
class PenaltySpec:
    loss: str = "squared"
    penalty: str = "none"
    lam: object = 0.0  # float or "cross-validate"

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}")
        if self.penalty not in PENALTIES:
            raise ConfigError(f"unknown penalty {self.penalty!r}")
        if self.lam != "cross-validate":
            if not np.isfinite(self.lam) or self.lam < 0:
                raise ParameterDomainError(f"lambda must be >= 0, got {self.lam!r}")

    @property
    def cv(self):
        return self.lam == "cross-validate"

    def with_lambda(self, lam):
        return PenaltySpec(self.loss, self.penalty, float(lam))


@dataclass(frozen=True)
class CvConfig:
    """K-fold cross-validation over a log-spaced, descending lambda grid.

    ``grid`` overrides the automatic grid from ``lambda_max`` down to
    ``ratio * lambda_max`` with ``n_lambdas`` points.
    """

    folds: int = 5
    n_lambdas: int = 50
    ratio: float = 1e-4
    grid: tuple = None

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.grid is not None:
            g = np.asarray(self.grid, dtype=float)
            if g.size == 0:
                raise ConfigError("lambda grid is empty")
            if np.any(g <= 0) or np.any(np.diff(g) >= 0):
                raise ConfigError("lambda grid must be positive and strictly descending")
        elif self.n_lambdas < 1:
            raise ConfigError("lambda grid is empty")


# name -> (loss, penalty); lambda is chosen by cross-validation for penalized ones
L2_SCALE = 1000.0

ESTIMATORS = {
    "ls": ("squared", "none"),
    "lad": ("absolute", "none"),
    "lasso-ls": ("squared", "l1"),
    "lasso-lad": ("absolute", "l1"),
    "ridge-ls": ("squared", "l2"),
    "ridge-lad": ("absolute", "l2"),
}


def _xy(data, Y=None):
    if isinstance(data, Dataset):
        return data.X, data.Y
    return np.asarray(data, dtype=float), np.asarray(Y, dtype=float)


def objective(X, Y, beta, spec):
    r = Y - X @ beta
    loss = r @ r if spec.loss == "squared" else np.abs(r).sum()
    if spec.penalty == "l1":
        return float(loss + spec.lam * np.abs(beta).sum())
    if spec.penalty == "l2":
        return float(loss + spec.lam * beta @ beta)
    return float(loss)


# ---------------------------------------------------------------- squared loss


def fit_ls(data, Y=None):
    """Least squares via a Cholesky solve of the normal equations."""
    X, Y = _xy(data, Y)
    G = X.T @ X
    try:
        c = linalg.cho_factor(G, lower=True, check_finite=False)
    except linalg.LinAlgError:
        raise SingularDesignError("X^T X is not positive definite") from None
    if np.linalg.cond(G) > 1e12:
        raise SingularDesignError("X^T X is numerically singular")
    beta = linalg.cho_solve(c, X.T @ Y, check_finite=False)
    # one step of iterative refinement keeps X^T r at rounding level
    beta += linalg.cho_solve(c, X.T @ (Y - X @ beta), check_finite=False)
    return beta


class _Gram:
    """Cached eigendecomposition of X^T X for repeated ridge solves."""

    def __init__(self, X):
        self.evals, self.Q = np.linalg.eigh(X.T @ X)
        self.evals = np.maximum(self.evals, 0.0)

    def solve(self, shift, rhs, scale=1.0):
        """Solve (scale * X^T X + shift * I) b = rhs."""
        return self.Q @ ((self.Q.T @ rhs) / (scale * self.evals + shift))


def _ridge_ls(X, Y, lam, gram=None):
    gram = gram or _Gram(X)
    if lam == 0:
        return fit_ls(X, Y)
    return gram.solve(lam, X.T @ Y)


@numba.njit(cache=True)
def _cd_lasso(G, c, lam, beta, tol, max_sweeps):
    # minimize b'Gb - 2c'b + lam*||b||_1, grad kept as c - G b
    p = beta.shape[0]
    grad = c - G @ beta
    half = 0.5 * lam
    for sweep in range(max_sweeps):
        max_change = 0.0
        for j in range(p):
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            z = grad[j] + gjj * beta[j]
            if z > half:
                new = (z - half) / gjj
            elif z < -half:
                new = (z + half) / gjj
            else:
                new = 0.0
            delta = new - beta[j]
            if delta != 0.0:
                beta[j] = new
                for k in range(p):
                    grad[k] -= G[k, j] * delta
                if abs(delta) > max_change:
                    max_change = abs(delta)
        if max_change < tol:
            return beta, sweep + 1, True
    return beta, max_sweeps, False


def _lasso_ls(X, Y, lam, beta0=None, tol=1e-7, max_sweeps=100000, gram=None):
    G = X.T @ X if gram is None else gram
    c = X.T @ Y
    beta = np.zeros(X.shape[1]) if beta0 is None else np.array(beta0, dtype=float)
    beta, sweeps, ok = _cd_lasso(G, c, float(lam), beta, tol, max_sweeps)
    if not ok:
        raise ConvergenceError(
            f"coordinate descent did not converge in {sweeps} sweeps",
            objective=objective(X, Y, beta, PenaltySpec("squared", "l1", lam)),
            iterations=sweeps,
        )
    return _lasso_finish(G, c, lam, beta)


def _lasso_finish(G, c, lam, beta):
    """Exact solve on the support found by coordinate descent.

    Kept only when the signs hold and the inactive coordinates still satisfy
    the optimality bound; otherwise the descent iterate is returned.
    """
    active = beta != 0
    if not active.any():
        return beta
    s = np.sign(beta[active])
    try:
        b = np.linalg.solve(G[np.ix_(active, active)], c[active] - 0.5 * lam * s)
    except np.linalg.LinAlgError:
        return beta
    if np.any(np.sign(b) != s):
        return beta
    out = np.zeros_like(beta)
    out[active] = b
    grad = c - G @ out
    if np.any(np.abs(grad[~active]) > 0.5 * lam * (1 + 1e-10)):
        return beta
    return out


def cd_objective_trace(X, Y, lam, max_sweeps=50):
    """Objective after each coordinate-descent sweep (for monotonicity checks)."""
    spec = PenaltySpec("squared", "l1", lam)
    G, c = X.T @ X, X.T @ Y
    beta = np.zeros(X.shape[1])
    trace = [objective(X, Y, beta, spec)]
    for _ in range(max_sweeps):
        beta, _, ok = _cd_lasso(G, c, float(lam), beta, 1e-7, 1)
        trace.append(objective(X, Y, beta, spec))
        if ok:
            break
    return np.array(trace)


# --------------------------------------------------------------- absolute loss


class _LadDual:
    """LAD / LAD-lasso through the dual linear program

        max Y^T s  s.t.  -lam <= X^T s <= lam,  -1 <= s <= 1,

    solved by the HiGHS dual simplex.  Changing lambda only moves row
    bounds, so successive solves along a path restart from the previous
    optimal basis.  The primal coefficients are the row duals.
    """

    def __init__(self, X, Y):
        self.X, self.Y = X, Y
        n, p = X.shape
        A = sparse.csc_matrix(X.T)
        lp = highspy.HighsLp()
        lp.num_col_, lp.num_row_ = n, p
        lp.sense_ = highspy.ObjSense.kMaximize
        lp.col_cost_ = Y.astype(float)
        lp.col_lower_ = -np.ones(n)
        lp.col_upper_ = np.ones(n)
        lp.row_lower_ = np.zeros(p)
        lp.row_upper_ = np.zeros(p)
        lp.a_matrix_.format_ = highspy.MatrixFormat.kColwise
        lp.a_matrix_.start_ = A.indptr
        lp.a_matrix_.index_ = A.indices
        lp.a_matrix_.value_ = A.data
        self.highs = highspy.Highs()
        self.highs.setOptionValue("output_flag", False)
        self.highs.setOptionValue("solver", "simplex")
        self.highs.passModel(lp)
        self._rows = np.arange(p, dtype=np.int32)

    def solve(self, lam):
        p = self.X.shape[1]
        self.highs.changeRowsBounds(p, self._rows, np.full(p, -lam), np.full(p, lam))
        self.highs.run()
        status = self.highs.getModelStatus()
        if status != highspy.HighsModelStatus.kOptimal:
            raise ConvergenceError(f"LP solver stopped with status {self.highs.modelStatusToString(status)}")
        beta = np.array(self.highs.getSolution().row_dual)
        return _refine_vertex(self.X, self.Y, beta, lam)


def _lad_lp(X, Y, lam=0.0):
    return _LadDual(X, Y).solve(lam)


def _refine_vertex(X, Y, beta, lam):
    """Re-solve the interpolation system of a vertex solution to full precision.

    The refined point is kept only if it does not raise the objective.
    """
    p = X.shape[1]
    tiny = 1e-10 * (1.0 + np.abs(beta).max())
    active = np.flatnonzero(np.abs(beta) > tiny)
    beta = np.where(np.abs(beta) > tiny, beta, 0.0)
    r = Y - X @ beta
    zero_rows = np.flatnonzero(np.abs(r) <= 1e-7 * (1.0 + np.abs(Y).max()))
    if active.size == 0 or zero_rows.size < active.size:
        return beta
    sol, *_ = np.linalg.lstsq(X[np.ix_(zero_rows, active)], Y[zero_rows], rcond=None)
    refined = np.zeros(p)
    refined[active] = sol
    spec = PenaltySpec("absolute", "l1" if lam > 0 else "none", lam)
    if objective(X, Y, refined, spec) <= objective(X, Y, beta, spec):
        return refined
    return beta


def fit_lad(data, Y=None):
    """Least absolute deviations fit (exact vertex solution)."""
    X, Y = _xy(data, Y)
    if X.shape[0] <= X.shape[1]:
        raise ParameterDomainError("LAD needs n > p")
    return _lad_lp(X, Y, 0.0)


def _soft(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


@dataclass
class _AdmmState:
    beta: np.ndarray
    r: np.ndarray
    u: np.ndarray
    rho: float = 1.0
    iterations: int = 0
    exact_r: np.ndarray = None


def _admm_lad(X, Y, l1=0.0, l2=0.0, gram=None, state=None, tol=1e-6, max_iter=2000,
              polish=True, relax=1.6, check_every=10):
    """ADMM for sum|Ya - Xa b| + l2*||b||^2 with Xa = [X; l1*I], Ya = [Y; 0].

    Split r = Ya - Xa b; the b-step is a ridge solve through the cached Gram
    eigendecomposition, the r-step a soft threshold at 1/rho.  rho starts at
    1 and is rebalanced against the primal/dual residuals.  With ``polish``
    the iterate is periodically handed to an exact active-set solve; the
    run stops as soon as that solve passes the KKT check.

    Returns (beta, state, certified).
    """
    n, p = X.shape
    aug = l1 > 0
    m = n + p if aug else n
    Ya = np.concatenate([Y, np.zeros(p)]) if aug else Y
    gram = gram or _Gram(X)

    def Xa_mul(b):
        return np.concatenate([X @ b, l1 * b]) if aug else X @ b

    def XaT_mul(v):
        return X.T @ v[:n] + l1 * v[n:] if aug else X.T @ v

    if state is None or state.r.shape[0] != m:
        beta0 = np.zeros(p) if state is None else state.beta
        state = _AdmmState(beta0.copy(), Ya - Xa_mul(beta0), np.zeros(m))
    beta, r, u, rho = state.beta, state.r, state.u, state.rho
    scale_y = max(np.linalg.norm(Ya), 1.0)
    certified = False
    k = 0
    for k in range(1, max_iter + 1):
        rhs = rho * XaT_mul(Ya - r - u)
        beta = gram.solve(2.0 * l2 + rho * l1 * l1, rhs, scale=rho)
        Xb = Xa_mul(beta)
        h = relax * Xb - (1.0 - relax) * (r - Ya)
        r_old = r
        r = _soft(Ya - h - u, 1.0 / rho)
        u = u + h + r - Ya
        if k % check_every:
            continue
        if polish:
            ok, exact = _polish(X, Y, l1, l2, r, max_rounds=3)
            if ok:
                beta, certified = exact, True
                break
        prim = np.linalg.norm(Xb + r - Ya)
        dual = rho * np.linalg.norm(XaT_mul(r - r_old))
        eps_p = tol * max(np.linalg.norm(Xb), np.linalg.norm(r), scale_y)
        eps_d = tol * max(rho * np.linalg.norm(XaT_mul(u)), 1.0)
        if prim <= eps_p and dual <= eps_d and not polish:
            break
        if prim > 10 * dual:
            rho *= 2.0
            u = u / 2.0
        elif dual > 10 * prim:
            rho /= 2.0
            u = u * 2.0
    else:
        k = max_iter
    state = _AdmmState(beta, r, u, rho, state.iterations + k)
    return beta, state, certified, k < max_iter or certified


def _polish(X, Y, l1, l2, r, tol=1e-9, max_rounds=50):
    """Exact solve on a zero-residual set, corrected by active-set rounds.

    Starting from the zero set Z and residual signs of an ADMM iterate, the
    subgradient on Z and the coefficients follow from linear equations.
    Points whose subgradient leaves [-1, 1] are released from Z with that
    sign, points whose residual disagrees with their sign join Z, and the
    solve is repeated.  Returns ``(True, beta)`` only when every KKT
    condition checks out, in which case ``beta`` is an exact minimizer (the
    problem is convex).
    """
    n, p = X.shape
    aug = l1 > 0
    Xa = np.vstack([X, l1 * np.eye(p)]) if aug else X
    Ya = np.concatenate([Y, np.zeros(p)]) if aug else Y
    inZ = r == 0
    sign = np.sign(r)
    seen = set()
    for _ in range(max_rounds):
        key = inZ.tobytes() + sign.tobytes()
        if key in seen:
            break
        seen.add(key)
        Z, Zc = np.flatnonzero(inZ), np.flatnonzero(~inZ)
        s = np.where(inZ, 0.0, sign)
        XZ = Xa[Z]
        try:
            if l2 > 0:
                # stationarity: Xa^T s = 2*l2*beta; interpolation on Z
                base = Xa[Zc].T @ s[Zc]
                if Z.size:
                    s[Z] = linalg.lstsq(XZ @ XZ.T, 2.0 * l2 * Ya[Z] - XZ @ base,
                                        check_finite=False)[0]
                beta = (base + XZ.T @ s[Z]) / (2.0 * l2)
            else:
                if Z.size != p:
                    return False, None
                beta = linalg.solve(XZ, Ya[Z], check_finite=False)
                s[Z] = linalg.solve(XZ.T, -(Xa[Zc].T @ s[Zc]), check_finite=False)
        except (linalg.LinAlgError, ValueError):
            return False, None
        if not np.all(np.isfinite(beta)):
            return False, None
        res = Ya - Xa @ beta
        scale = tol * max(1.0, np.abs(Ya).max())
        out_of_box = inZ & (np.abs(s) > 1.0 + tol)
        off_zero = inZ & (np.abs(res) > scale)
        wrong_sign = ~inZ & (res * sign < -scale)
        if not (out_of_box.any() or off_zero.any() or wrong_sign.any()):
            return True, beta
        if l2 == 0:
            return False, None
        inZ = (inZ & ~out_of_box) | wrong_sign
        sign = np.where(out_of_box, np.sign(s), sign)
        sign = np.where(inZ, 0.0, sign)
    return False, None


def _exact_residual(X, Y, beta, tol=1e-9):
    r = Y - X @ beta
    r[np.abs(r) <= tol * max(1.0, np.abs(Y).max())] = 0.0
    return r


def _lad_ridge(X, Y, lam, gram=None, state=None, max_iter=20000):
    """LAD-ridge fit; ``state`` carries warm-start information along a path.

    The zero-residual set of the previous exact solution seeds the active-set
    solve first; ADMM runs only when that does not certify.
    """
    if lam == 0:
        return fit_lad(X, Y), None
    if state is not None and state.exact_r is not None:
        ok, beta = _polish(X, Y, 0.0, lam, state.exact_r)
        if ok:
            state.exact_r = _exact_residual(X, Y, beta)
            state.beta = beta
            return beta, state
    beta, state, certified, _ = _admm_lad(X, Y, l2=lam, gram=gram, state=state, max_iter=max_iter)
    if not certified:
        spec = PenaltySpec("absolute", "l2", lam)
        raise ConvergenceError(
            f"LAD-ridge ADMM not certified after {state.iterations} iterations",
            objective=objective(X, Y, beta, spec),
            iterations=state.iterations,
        )
    state.exact_r = _exact_residual(X, Y, beta)
    return beta, state


# ------------------------------------------------------------------ dispatch


def fit_penalized(data, spec, Y=None):
    """Minimize sum rho(Y - X beta) + P_lambda(beta) for an explicit lambda."""
    X, Y = _xy(data, Y)
    if spec.cv:
        raise ConfigError("fit_penalized needs an explicit lambda; use cross_validate")
    lam = float(spec.lam)
    if spec.loss == "squared":
        if spec.penalty == "none" or lam == 0:
            return fit_ls(X, Y)
        if spec.penalty == "l2":
            return _ridge_ls(X, Y, lam)
        return _lasso_ls(X, Y, lam)
    if spec.penalty == "none" or lam == 0:
        return fit_lad(X, Y)
    if spec.penalty == "l1":
        return _lad_lp(X, Y, lam)
    return _lad_ridge(X, Y, lam)[0]


def lambda_max(X, Y, spec):
    """Top of the default grid.

    For l1 penalties this is the smallest lambda whose solution is all zeros.
    For l2 it is 1000 times the l1 value (ridge never zeroes coefficients,
    at this level the fit is shrunk by about three orders of magnitude).
    """
    if spec.loss == "squared":
        base = 2.0 * np.abs(X.T @ Y).max()
    else:
        base = np.abs(X.T @ np.sign(Y)).max()
    base = max(base, np.finfo(float).tiny)
    return base if spec.penalty == "l1" else L2_SCALE * base


def lambda_grid(X, Y, spec, cv):
    if cv.grid is not None:
        return np.asarray(cv.grid, dtype=float)
    top = lambda_max(X, Y, spec)
    return top * np.logspace(0.0, np.log10(cv.ratio), cv.n_lambdas)


def _path(X, Y, spec, grid, cv):
    """Coefficients along a descending lambda grid, warm-started."""
    out = np.empty((len(grid), X.shape[1]))
    if spec.loss == "squared" and spec.penalty == "l2":
        gram = _Gram(X)
        XtY = X.T @ Y
        for i, lam in enumerate(grid):
            out[i] = gram.solve(lam, XtY)
    elif spec.loss == "squared":
        G = X.T @ X
        beta = np.zeros(X.shape[1])
        for i, lam in enumerate(grid):
            beta = _lasso_ls(X, Y, lam, beta0=beta, gram=G)
            out[i] = beta
    elif spec.penalty == "l2":
        gram, state = _Gram(X), None
        for i, lam in enumerate(grid):
            out[i], state = _lad_ridge(X, Y, lam, gram=gram, state=state)
    else:
        lp = _LadDual(X, Y)
        for i, lam in enumerate(grid):
            out[i] = lp.solve(lam)
    return out


def _fold_ids(n, folds, rng):
    perm = as_generator(rng).permutation(n)
    ids = np.empty(n, dtype=int)
    for k, chunk in enumerate(np.array_split(perm, folds)):
        ids[chunk] = k
    return ids


def cross_validate(data, spec, cv=None, rng=None, Y=None, return_curve=False):
    """K-fold choice of lambda followed by a refit on all data.

    The held-out loss matches the fitting loss.  Among grid points with the
    minimal mean loss the smallest lambda wins.  Returns ``(lam, beta)``, or
    ``(lam, beta, grid, curve)`` with ``return_curve``.
    """
    X, Y = _xy(data, Y)
    cv = cv or CvConfig()
    if spec.penalty == "none":
        raise ConfigError("cross-validation needs a penalty")
    n = X.shape[0]
    if cv.folds > n:
        raise ConfigError(f"folds ({cv.folds}) exceed n ({n})")
    grid = lambda_grid(X, Y, spec, cv)
    if len(grid) == 0:
        raise ConfigError("lambda grid is empty")
    ids = _fold_ids(n, cv.folds, rng)
    losses = np.zeros((cv.folds, len(grid)))
    for k in range(cv.folds):
        train, test = ids != k, ids == k
        coefs = _path(X[train], Y[train], spec, grid, cv)
        resid = Y[test][None, :] - coefs @ X[test].T
        per = resid**2 if spec.loss == "squared" else np.abs(resid)
        losses[k] = per.mean(axis=1)
    curve = losses.mean(axis=0)
    best = np.flatnonzero(curve <= curve.min())[-1]
    lam = float(grid[best])
    beta = fit_penalized(X, spec.with_lambda(lam), Y)
    if return_curve:
        return lam, beta, grid, curve
    return lam, beta


def fit_estimator(name, data, cv=None, rng=None, lam=None):
    """Fit one of the named baseline estimators (see ``ESTIMATORS``)."""
    try:
        loss, penalty = ESTIMATORS[name]
    except KeyError:
        raise ConfigError(f"unknown estimator {name!r}") from None
    if penalty == "none":
        return fit_ls(data) if loss == "squared" else fit_lad(data)
    if lam is not None:
        return fit_penalized(data, PenaltySpec(loss, penalty, lam))
    return cross_validate(data, PenaltySpec(loss, penalty, "cross-validate"), cv, rng)[1]
