"""Penalized linear regression: closed-form ridge, coordinate-descent
lasso and elastic net, with metrics, cross-validated penalty selection,
path tracing, and subgradient optimality checks.

Objective conventions (shared by every solver and by kkt_check):

    ols:          sum_i (y_i - yhat_i)^2
    ridge:        sum_i (y_i - yhat_i)^2 + lam  * sum_j beta_j^2
    lasso:        sum_i (y_i - yhat_i)^2 + lam  * sum_j |beta_j|
    elastic net:  sum_i (y_i - yhat_i)^2 + lam1 * sum_j |beta_j|
                                         + lam2 * sum_j beta_j^2

The residual sum of squares is unscaled (no 1/n or 1/2 factor), so
penalty weights are comparable across sample sizes at face value. The
intercept is never penalized: fits center y and the columns of X, solve
for beta, then restore the intercept from the means. Columns are not
rescaled unless standardize=True is requested.

Coordinate updates follow directly from the objective: for column j with
partial residual correlation rho_j,

    beta_j = soft_threshold(rho_j, lam1 / 2) / (sum_i x_ij^2 + lam2)

which reduces to the lasso update at lam2 = 0 and to a smooth shrinkage
at lam1 = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RegressionError

NONZERO_TOL = 1e-10
PENALTY_KINDS = ("ridge", "lasso", "elastic_net")


@dataclass(frozen=True)
class DesignMatrix:
    """Samples-by-regressors design with a target vector and column names."""

    x: np.ndarray  # shape (n, p)
    y: np.ndarray  # shape (n,)
    column_names: tuple[str, ...]

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise RegressionError(f"design matrix must be n x p with n,p >= 1, got {x.shape}")
        if y.shape[0] != x.shape[0]:
            raise RegressionError(f"target length {y.shape[0]} != sample count {x.shape[0]}")
        if len(self.column_names) != x.shape[1]:
            raise RegressionError("column name count does not match regressor count")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise RegressionError("design matrix entries must be finite")
        x.setflags(write=False)
        y.setflags(write=False)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def subset(self, rows: np.ndarray) -> "DesignMatrix":
        return DesignMatrix(self.x[rows], self.y[rows], self.column_names)


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty kind plus its weights.

    ridge/lasso use lam; elastic_net uses (lam1, lam2) with the mixing
    ratio alpha = lam1 / (lam1 + lam2) when the total is positive."""

    kind: str
    lam: float = 0.0
    lam1: float = 0.0
    lam2: float = 0.0

    def __post_init__(self):
        if self.kind not in PENALTY_KINDS:
            raise RegressionError(f"unknown penalty kind {self.kind!r}")
        if min(self.lam, self.lam1, self.lam2) < 0:
            raise RegressionError("penalty weights must be >= 0")

    @property
    def alpha(self) -> float | None:
        if self.kind != "elastic_net" or self.lam1 + self.lam2 == 0:
            return None
        return self.lam1 / (self.lam1 + self.lam2)

    @classmethod
    def ridge(cls, lam: float) -> "PenaltySpec":
        return cls("ridge", lam=lam)

    @classmethod
    def lasso(cls, lam: float) -> "PenaltySpec":
        return cls("lasso", lam=lam)

    @classmethod
    def elastic_net(cls, lam1: float, lam2: float) -> "PenaltySpec":
        return cls("elastic_net", lam1=lam1, lam2=lam2)

    @classmethod
    def elastic_net_total(cls, total: float, alpha: float) -> "PenaltySpec":
        if not 0.0 <= alpha <= 1.0:
            raise RegressionError("alpha must be in [0, 1]")
        return cls("elastic_net", lam1=alpha * total, lam2=(1.0 - alpha) * total)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lambda": self.lam,
            "lambda1": self.lam1,
            "lambda2": self.lam2,
            "alpha": self.alpha,
        }


@dataclass(frozen=True)
class LinearModel:
    """Fitted intercept and coefficient vector with its penalty."""

    intercept: float
    coefficients: np.ndarray
    penalty: PenaltySpec | None
    column_names: tuple[str, ...]
    converged: bool = True
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        beta = np.asarray(self.coefficients, dtype=float).ravel()
        object.__setattr__(self, "coefficients", beta)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        if len(self.column_names) != beta.shape[0]:
            raise RegressionError("column name count does not match coefficient count")
        if not (np.isfinite(self.intercept) and np.all(np.isfinite(beta))):
            raise RegressionError("model parameters must be finite")
        beta.setflags(write=False)

    @property
    def p(self) -> int:
        return self.coefficients.shape[0]

    def to_dict(self) -> dict:
        return {
            "intercept": float(self.intercept),
            "coefficients": {
                name: float(v) for name, v in zip(self.column_names, self.coefficients)
            },
            "penalty": None if self.penalty is None else self.penalty.to_dict(),
            "converged": self.converged,
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class FitReport:
    """Training metrics of a fitted model on a design."""

    mse: float
    r2: float
    sparsity: float
    residuals: np.ndarray
    y_hat: np.ndarray
    y_bar: float

    def to_dict(self) -> dict:
        return {
            "mse": float(self.mse),
            "r2": float(self.r2),
            "sparsity": float(self.sparsity),
            "residuals": [float(v) for v in self.residuals],
            "y_hat": [float(v) for v in self.y_hat],
            "y_bar": float(self.y_bar),
        }


@dataclass(frozen=True)
class PathReport:
    """Coefficients and training metrics along an ascending penalty grid."""

    lambdas: tuple[float, ...]
    coefficient_matrix: np.ndarray  # shape (len(lambdas), p)
    r2: tuple[float, ...]
    mse: tuple[float, ...]
    column_names: tuple[str, ...]

    def rows(self) -> list[list]:
        """Rows for the `lambda,<coef names...>,r2,mse` CSV export."""
        out = []
        for i, lam in enumerate(self.lambdas):
            out.append([lam, *self.coefficient_matrix[i].tolist(), self.r2[i], self.mse[i]])
        return out

    def header(self) -> list[str]:
        return ["lambda", *self.column_names, "r2", "mse"]


def _center(d: DesignMatrix, fit_intercept: bool):
    if fit_intercept:
        x_mean = d.x.mean(axis=0)
        y_mean = float(d.y.mean())
        return d.x - x_mean, d.y - y_mean, x_mean, y_mean
    return d.x, d.y, np.zeros(d.p), 0.0


def _scale_columns(xc: np.ndarray):
    scale = xc.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return xc / scale, scale


def soft_threshold(z: float, gamma: float) -> float:
    """sign(z) * max(|z| - gamma, 0); the coordinate-wise L1 minimizer."""
    if gamma < 0:
        raise RegressionError("gamma must be >= 0")
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def fit_ols(d: DesignMatrix, fit_intercept: bool = True) -> LinearModel:
    """Least squares baseline (no penalty).

    Singular systems fall back to the minimum-norm solution and the model
    is flagged 'singular_system'."""
    xc, yc, x_mean, y_mean = _center(d, fit_intercept)
    beta, _, rank, _ = np.linalg.lstsq(xc, yc, rcond=None)
    flags = ("singular_system",) if rank < d.p else ()
    intercept = y_mean - float(x_mean @ beta)
    return LinearModel(intercept, beta, None, d.column_names, converged=True, flags=flags)


def fit_ridge(
    d: DesignMatrix,
    lam: float,
    fit_intercept: bool = True,
    standardize: bool = False,
) -> LinearModel:
    """Closed-form ridge: solves (X'X + lam*I) beta = X'y on centered data."""
    if lam < 0:
        raise RegressionError("lambda must be >= 0")
    xc, yc, x_mean, y_mean = _center(d, fit_intercept)
    scale = np.ones(d.p)
    if standardize:
        xc, scale = _scale_columns(xc)
    flags: tuple[str, ...] = ("standardized",) if standardize else ()
    if lam == 0:
        beta, _, rank, _ = np.linalg.lstsq(xc, yc, rcond=None)
        if rank < d.p:
            flags = flags + ("singular_system",)
    else:
        gram = xc.T @ xc + lam * np.eye(d.p)
        beta = np.linalg.solve(gram, xc.T @ yc)
    beta = beta / scale
    intercept = y_mean - float(x_mean @ beta)
    return LinearModel(intercept, beta, PenaltySpec.ridge(lam), d.column_names, flags=flags)


def _polish_active_set(
    gram: np.ndarray,
    corr: np.ndarray,
    lam1: float,
    lam2: float,
    active: np.ndarray,
    signs: np.ndarray,
    slack: float,
) -> np.ndarray | None:
    """Exact stationary point for a fixed active sign pattern, or None.

    Solves (G_AA + lam2*I) b = c_A - (lam1/2)*s_A and accepts the candidate
    only if the solved coefficients keep the assumed signs and the full
    KKT conditions hold within the numerical slack."""
    p = corr.shape[0]
    sub = gram[np.ix_(active, active)] + lam2 * np.eye(active.size)
    rhs = corr[active] - 0.5 * lam1 * signs
    try:
        b = np.linalg.solve(sub, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(b)) or np.any(b * signs <= 0):
        return None
    candidate = np.zeros(p)
    candidate[active] = b
    g = -2.0 * (corr - gram @ candidate)
    stationarity = np.abs(g[active] + lam1 * signs + 2.0 * lam2 * b)
    if stationarity.max(initial=0.0) > slack:
        return None
    inactive = np.setdiff1d(np.arange(p), active, assume_unique=True)
    if inactive.size and np.abs(g[inactive]).max() > lam1 + slack:
        return None
    return candidate


def _coordinate_descent(
    x: np.ndarray,
    y: np.ndarray,
    lam1: float,
    lam2: float,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, bool, int]:
    """Cyclic coordinate descent for RSS + lam1*L1 + lam2*L2 (no intercept).

    Stops when the largest coefficient change in a sweep drops below tol.
    Once the active sign pattern is stable across two sweeps, an exact
    solve on the active set is attempted and accepted only when the full
    KKT conditions verify; this short-circuits the slow tail on poorly
    conditioned designs without changing the limit point. Zero-norm
    columns (centered constants) keep a zero coefficient."""
    n, p = x.shape
    gram = x.T @ x
    corr = x.T @ y
    col_norm2 = np.diag(gram).copy()
    denom = col_norm2 + lam2
    thresh = lam1 / 2.0
    scale = max(1.0, float(np.abs(corr).max(initial=0.0)), float(np.abs(gram).max(initial=0.0)))
    slack = max(1e-12, 10.0 * tol) * scale
    beta = np.zeros(p)
    prev_pattern: tuple | None = None
    failed_pattern: tuple | None = None
    for sweep in range(max_iter):
        q = gram @ beta  # refreshed each sweep so incremental drift cannot build up
        max_delta = 0.0
        for j in range(p):
            if denom[j] == 0.0:
                continue
            rho = corr[j] - q[j] + gram[j, j] * beta[j]
            new = soft_threshold(float(rho), thresh) / denom[j]
            delta = new - beta[j]
            if delta != 0.0:
                q += gram[:, j] * delta
                beta[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        if max_delta < tol:
            return beta, True, sweep + 1
        active = np.nonzero(beta)[0]
        pattern = tuple((int(j), 1 if beta[j] > 0 else -1) for j in active)
        if pattern and pattern == prev_pattern and pattern != failed_pattern:
            signs = np.array([s for _, s in pattern], dtype=float)
            candidate = _polish_active_set(gram, corr, lam1, lam2, active, signs, slack)
            if candidate is not None:
                return candidate, True, sweep + 1
            failed_pattern = pattern
        prev_pattern = pattern
    return beta, False, max_iter


def fit_lasso(
    d: DesignMatrix,
    lam: float,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    fit_intercept: bool = True,
    standardize: bool = False,
) -> LinearModel:
    """L1-penalized fit by cyclic coordinate descent.

    Non-convergence within max_iter is flagged on the returned model
    (converged=False, flag 'non_converged'), never silently accepted."""
    if lam < 0:
        raise RegressionError("lambda must be >= 0")
    return _fit_cd(d, lam1=lam, lam2=0.0, spec=PenaltySpec.lasso(lam), tol=tol,
                   max_iter=max_iter, fit_intercept=fit_intercept, standardize=standardize)


def fit_elastic_net(
    d: DesignMatrix,
    lam1: float,
    lam2: float,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    fit_intercept: bool = True,
    standardize: bool = False,
) -> LinearModel:
    """Combined L1/L2 penalty by cyclic coordinate descent.

    Reduces exactly to the lasso at lam2=0 and to ridge at lam1=0."""
    if lam1 < 0 or lam2 < 0:
        raise RegressionError("lambda1 and lambda2 must be >= 0")
    return _fit_cd(d, lam1=lam1, lam2=lam2, spec=PenaltySpec.elastic_net(lam1, lam2),
                   tol=tol, max_iter=max_iter, fit_intercept=fit_intercept,
                   standardize=standardize)


def _fit_cd(d, lam1, lam2, spec, tol, max_iter, fit_intercept, standardize) -> LinearModel:
    if tol <= 0:
        raise RegressionError("tol must be > 0")
    if max_iter < 1:
        raise RegressionError("max_iter must be >= 1")
    xc, yc, x_mean, y_mean = _center(d, fit_intercept)
    scale = np.ones(d.p)
    flags: tuple[str, ...] = ()
    if standardize:
        xc, scale = _scale_columns(xc)
        flags = ("standardized",)
    beta, converged, _ = _coordinate_descent(xc, yc, lam1, lam2, tol, max_iter)
    if not converged:
        flags = flags + ("non_converged",)
    beta = beta / scale
    intercept = y_mean - float(x_mean @ beta)
    return LinearModel(intercept, beta, spec, d.column_names, converged=converged, flags=flags)


def fit_penalized(
    d: DesignMatrix,
    spec: PenaltySpec,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    fit_intercept: bool = True,
    standardize: bool = False,
) -> LinearModel:
    """Dispatch a fit from a PenaltySpec."""
    if spec.kind == "ridge":
        return fit_ridge(d, spec.lam, fit_intercept=fit_intercept, standardize=standardize)
    if spec.kind == "lasso":
        return fit_lasso(d, spec.lam, tol=tol, max_iter=max_iter,
                         fit_intercept=fit_intercept, standardize=standardize)
    return fit_elastic_net(d, spec.lam1, spec.lam2, tol=tol, max_iter=max_iter,
                           fit_intercept=fit_intercept, standardize=standardize)


def kkt_check(model: LinearModel, d: DesignMatrix) -> float:
    """Largest violation of the subgradient optimality conditions.

    With g_j = -2 x_j'(y - yhat): an L1-penalized coefficient at zero must
    satisfy |g_j| <= lam1 (excess is the violation); a nonzero one must
    satisfy g_j + lam1*sign(beta_j) + 2*lam2*beta_j = 0. Ridge and OLS use
    the smooth stationarity residual. Applies to unstandardized fits."""
    if model.p != d.p:
        raise RegressionError("model and design have different regressor counts")
    if "standardized" in model.flags:
        raise RegressionError("kkt_check applies to unstandardized fits")
    residual = d.y - predict(model, d.x)
    g = -2.0 * (d.x.T @ residual)
    spec = model.penalty
    if spec is None:
        lam1, lam2 = 0.0, 0.0
    elif spec.kind == "ridge":
        lam1, lam2 = 0.0, spec.lam
    elif spec.kind == "lasso":
        lam1, lam2 = spec.lam, 0.0
    else:
        lam1, lam2 = spec.lam1, spec.lam2
    worst = 0.0
    for j in range(d.p):
        beta_j = model.coefficients[j]
        if lam1 > 0 and beta_j == 0.0:
            v = max(abs(g[j]) - lam1, 0.0)
        else:
            v = abs(g[j] + lam1 * np.sign(beta_j) + 2.0 * lam2 * beta_j)
        worst = max(worst, float(v))
    return worst


def lasso_lambda_max(d: DesignMatrix, fit_intercept: bool = True) -> float:
    """Smallest L1 weight at which the lasso solution is identically zero:
    max_j |2 x_j'(y - ybar)|."""
    xc, yc, _, _ = _center(d, fit_intercept)
    return float(np.max(np.abs(2.0 * (xc.T @ yc))))


def compute_mse(y, y_hat) -> float:
    """Mean squared difference between observed and predicted values."""
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y.shape != y_hat.shape:
        raise RegressionError("y and y_hat lengths differ")
    return float(np.mean((y - y_hat) ** 2))


def compute_r2(y, y_hat) -> float:
    """Proportion of target variance explained: 1 - RSS/TSS.

    Raises when the target has zero variance (the ratio is undefined)."""
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y.shape != y_hat.shape:
        raise RegressionError("y and y_hat lengths differ")
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss == 0.0:
        raise RegressionError("R^2 undefined: target has zero variance")
    rss = float(np.sum((y - y_hat) ** 2))
    return 1.0 - rss / tss


def compute_sparsity(model: LinearModel) -> float:
    """Fraction of coefficients with |beta_j| > 1e-10."""
    return float(np.count_nonzero(np.abs(model.coefficients) > NONZERO_TOL)) / model.p


def predict(model: LinearModel, x_new) -> np.ndarray:
    """yhat = intercept + x_new @ beta for rows of width p."""
    x_new = np.atleast_2d(np.asarray(x_new, dtype=float))
    if x_new.shape[1] != model.p:
        raise RegressionError(
            f"prediction rows have width {x_new.shape[1]}, model expects {model.p}"
        )
    return model.intercept + x_new @ model.coefficients


def fit_report(model: LinearModel, d: DesignMatrix) -> FitReport:
    """Training metrics (MSE, R^2, sparsity, residuals) of a model on d."""
    y_hat = predict(model, d.x)
    residuals = d.y - y_hat
    return FitReport(
        mse=compute_mse(d.y, y_hat),
        r2=compute_r2(d.y, y_hat),
        sparsity=compute_sparsity(model),
        residuals=residuals,
        y_hat=y_hat,
        y_bar=float(d.y.mean()),
    )


def _spec_for(kind: str, lam: float, alpha: float) -> PenaltySpec:
    if kind == "ridge":
        return PenaltySpec.ridge(lam)
    if kind == "lasso":
        return PenaltySpec.lasso(lam)
    if kind == "elastic_net":
        return PenaltySpec.elastic_net_total(lam, alpha)
    raise RegressionError(f"unknown penalty kind {kind!r}")


def cross_validate(
    d: DesignMatrix,
    kind: str,
    lambda_grid,
    folds: int = 5,
    alpha: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    fit_intercept: bool = True,
    standardize: bool = False,
) -> tuple[PenaltySpec, list[tuple[float, float]]]:
    """Pick the penalty weight minimizing mean validation MSE.

    Folds are contiguous blocks in sample order (the samples are ordered
    years, so shuffling would leak time structure). Ties break toward the
    larger lambda. For elastic_net the grid holds total weights split as
    lam1 = alpha*total, lam2 = (1-alpha)*total. Returns the winning spec
    and the full (lambda, cv_mse) table in grid order."""
    grid = [float(v) for v in lambda_grid]
    if not grid:
        raise RegressionError("lambda grid is empty")
    if folds < 2:
        raise RegressionError("folds must be >= 2")
    if d.n < folds:
        raise RegressionError(f"need at least {folds} samples for {folds} folds, got {d.n}")
    blocks = np.array_split(np.arange(d.n), folds)
    table: list[tuple[float, float]] = []
    for lam in grid:
        spec = _spec_for(kind, lam, alpha)
        fold_mse = []
        for block in blocks:
            train = np.setdiff1d(np.arange(d.n), block)
            model = fit_penalized(d.subset(train), spec, tol=tol, max_iter=max_iter,
                                  fit_intercept=fit_intercept, standardize=standardize)
            y_hat = predict(model, d.x[block])
            fold_mse.append(compute_mse(d.y[block], y_hat))
        table.append((lam, float(np.mean(fold_mse))))
    best_lam, best_mse = table[0]
    for lam, m in table[1:]:
        if m < best_mse or (m == best_mse and lam > best_lam):
            best_lam, best_mse = lam, m
    return _spec_for(kind, best_lam, alpha), table


def iterate_lambda(
    d: DesignMatrix,
    kind: str,
    grid,
    alpha: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    fit_intercept: bool = True,
    standardize: bool = False,
) -> PathReport:
    """Fit at every grid value (ascending) and record the trajectories.

    Every point is a cold-start fit, so each path row matches a one-off
    call with the same penalty exactly."""
    grid = [float(v) for v in grid]
    if not grid:
        raise RegressionError("lambda grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise RegressionError("lambda grid must be strictly ascending")
    coefs = np.zeros((len(grid), d.p))
    r2s: list[float] = []
    mses: list[float] = []
    for i, lam in enumerate(grid):
        model = fit_penalized(d, _spec_for(kind, lam, alpha), tol=tol, max_iter=max_iter,
                              fit_intercept=fit_intercept, standardize=standardize)
        coefs[i] = model.coefficients
        report = fit_report(model, d)
        r2s.append(report.r2)
        mses.append(report.mse)
    return PathReport(tuple(grid), coefs, tuple(r2s), tuple(mses), d.column_names)
