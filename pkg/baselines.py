"""
Comparison methods: coordinate-descent Lasso, adaptive Huber regression and
the shrinkage (truncate-then-Lasso) estimator, plus an l1-penalized logistic
regression fitted by proximal gradient for classification comparisons.

All penalized objectives use the 1/n-scaled loss plus lam * ||theta||_1.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Union

import numpy as np

from components import Dataset, MultiResponseDataset
from errors import DivergenceError, InvalidParameterError
from models import log1pexp, sigmoid
from samplers import RngStream

logger = logging.getLogger(__name__)

CV = "cv"
AUTO = "auto"
DIVERGENCE_CAP = 1e15


def soft_threshold(a, lam: float):
    """sign(a) * max(|a| - lam, 0), element-wise."""
    if lam < 0:
        raise InvalidParameterError(f"lam must be >= 0, got {lam}")
    out = np.sign(a) * np.maximum(np.abs(a) - lam, 0.0)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class PenalizedFit:
    coef: np.ndarray
    lam: float
    iterations: int
    converged: bool
    tau: Optional[float] = None
    objective_trace: Optional[List[float]] = None


@dataclass(frozen=True)
class LassoConfig:
    lam: Union[float, str] = CV
    max_sweeps: int = 1000
    tol: float = 1e-10
    folds: int = 10
    grid_size: int = 50
    grid_ratio: float = 1e-4
    seed: int = 0
    record_objective: bool = False

    def __post_init__(self):
        if self.lam != CV and not float(self.lam) >= 0:
            raise InvalidParameterError(f"lasso lam must be >= 0 or 'cv', got {self.lam}")


@dataclass(frozen=True)
class HuberConfig:
    tau: Union[float, str] = AUTO
    lam: Union[float, str] = CV
    step_size: Optional[float] = None  # None uses 1/L
    iterations: int = 5000
    tol: float = 1e-10
    quantile: float = 0.95
    validation_fraction: float = 0.2
    grid_size: int = 50
    grid_ratio: float = 1e-4
    seed: int = 0
    pilot: LassoConfig = field(default_factory=LassoConfig)

    def __post_init__(self):
        if self.tau != AUTO and not float(self.tau) > 0:
            raise InvalidParameterError(f"huber tau must be > 0 or 'auto', got {self.tau}")
        if self.lam != CV and not float(self.lam) >= 0:
            raise InvalidParameterError(f"huber lam must be >= 0 or 'cv', got {self.lam}")


@dataclass(frozen=True)
class ShrinkageConfig:
    quantile_x: float = 0.95
    quantile_y: float = 0.95
    lasso: LassoConfig = field(default_factory=LassoConfig)

    def __post_init__(self):
        for q in (self.quantile_x, self.quantile_y):
            if not 0.0 < q <= 1.0:
                raise InvalidParameterError(f"truncation quantiles must lie in (0, 1], got {q}")


@dataclass(frozen=True)
class LogisticLassoConfig:
    lam: Union[float, str] = CV
    iterations: int = 5000
    tol: float = 1e-10
    validation_fraction: float = 0.2
    grid_size: int = 50
    grid_ratio: float = 1e-4
    seed: int = 0


def lambda_grid(lam_max: float, size: int = 50, ratio: float = 1e-4) -> np.ndarray:
    """Log-spaced penalties from lam_max down to ratio * lam_max."""
    if lam_max <= 0:
        return np.zeros(1)
    return np.geomspace(lam_max, ratio * lam_max, size)


def _shuffled_rows(n: int, seed: int) -> np.ndarray:
    return RngStream(seed, 0, (7,)).generator.permutation(n)


def train_validation_split(n: int, fraction: float, seed: int):
    """Seeded disjoint (train, validation) row indices; validation gets round(fraction * n) rows."""
    order = _shuffled_rows(n, seed)
    n_val = int(round(fraction * n))
    if n_val < 1 or n_val >= n:
        raise InvalidParameterError(f"cannot hold out {fraction} of {n} rows")
    return np.sort(order[n_val:]), np.sort(order[:n_val])


# ---------------------------------------------------------------------------
# Lasso
# ---------------------------------------------------------------------------

class _Gram:
    """Covariance-update state: G = X^T X / n, c = X^T y / n."""

    def __init__(self, X: np.ndarray, y: np.ndarray):
        n = X.shape[0]
        self.G = X.T @ X / n
        self.c = X.T @ y / n
        self.yy = float(y @ y) / n
        self.diag = np.diag(self.G).copy()

    def objective(self, theta: np.ndarray, lam: float) -> float:
        smooth = 0.5 * self.yy - self.c @ theta + 0.5 * theta @ self.G @ theta
        return float(smooth + lam * np.sum(np.abs(theta)))


def _sweep(gram: _Gram, theta: np.ndarray, r: np.ndarray, coords, lam: float) -> float:
    """One pass of coordinate updates; r = c - G theta is kept current. Returns max |change|."""
    biggest = 0.0
    for j in coords:
        d = gram.diag[j]
        if d <= 0.0:
            continue
        old = theta[j]
        z = r[j] + d * old
        new = soft_threshold(z, lam) / d
        if new != old:
            r -= gram.G[:, j] * (new - old)
            theta[j] = new
            biggest = max(biggest, abs(new - old))
    return biggest


def _coordinate_descent(gram: _Gram, lam: float, theta0: np.ndarray, cfg: LassoConfig):
    theta = theta0.copy()
    r = gram.c - gram.G @ theta
    p = theta.shape[0]
    trace = [gram.objective(theta, lam)] if cfg.record_objective else None
    full, converged, sweeps = True, False, 0
    while sweeps < cfg.max_sweeps:
        coords = range(p) if full else np.flatnonzero(theta)
        change = _sweep(gram, theta, r, coords, lam)
        sweeps += 1
        if trace is not None:
            trace.append(gram.objective(theta, lam))
        if change <= cfg.tol * max(1.0, float(np.max(np.abs(theta)))):
            if full:
                converged = True
                break
            full = True
        else:
            full = False
    return theta, sweeps, converged, trace


def lasso_fixed(X: np.ndarray, y: np.ndarray, lam: float, cfg: LassoConfig = LassoConfig(),
                theta0: Optional[np.ndarray] = None) -> PenalizedFit:
    """Lasso at one penalty level by cyclic coordinate descent with active-set sweeps."""
    gram = _Gram(X, y)
    start = np.zeros(X.shape[1]) if theta0 is None else theta0
    theta, sweeps, converged, trace = _coordinate_descent(gram, float(lam), start, cfg)
    if not converged:
        logger.warning("[LASSO] no convergence after %d sweeps at lam=%.4g", sweeps, lam)
    return PenalizedFit(theta, float(lam), sweeps, converged, objective_trace=trace)


def lasso_path(X: np.ndarray, y: np.ndarray, lambdas, cfg: LassoConfig = LassoConfig()) -> List[np.ndarray]:
    """Warm-started solutions along a decreasing penalty grid."""
    gram = _Gram(X, y)
    theta = np.zeros(X.shape[1])
    path = []
    for lam in lambdas:
        theta, _, _, _ = _coordinate_descent(gram, float(lam), theta, cfg)
        path.append(theta.copy())
    return path


def cross_validate_lasso(X: np.ndarray, y: np.ndarray, cfg: LassoConfig = LassoConfig()) -> float:
    """Penalty minimizing the mean held-out MSE over seeded contiguous folds."""
    n = X.shape[0]
    folds = min(cfg.folds, n)
    if folds < 2:
        raise InvalidParameterError(f"cross-validation needs n >= 2, got n={n}")
    grid = lambda_grid(float(np.max(np.abs(X.T @ y))) / n, cfg.grid_size, cfg.grid_ratio)
    order = _shuffled_rows(n, cfg.seed)
    scores = np.zeros(grid.shape[0])
    for held in np.array_split(order, folds):
        train = np.setdiff1d(order, held)
        path = lasso_path(X[train], y[train], grid, cfg)
        for i, theta in enumerate(path):
            residual = y[held] - X[held] @ theta
            scores[i] += float(residual @ residual) / held.shape[0]
    best = float(grid[int(np.argmin(scores))])
    logger.debug("[LASSO] %d-fold CV picked lam=%.4g", folds, best)
    return best


def lasso_solve(data: Dataset, cfg: LassoConfig = LassoConfig()) -> PenalizedFit:
    """
    Lasso on data; with lam='cv' the penalty is chosen by k-fold CV and the
    model refit on all rows.
    """
    X, y = data.features, data.response
    lam = cross_validate_lasso(X, y, cfg) if cfg.lam == CV else float(cfg.lam)
    return lasso_fixed(X, y, lam, cfg)


# ---------------------------------------------------------------------------
# Proximal gradient (Huber, logistic)
# ---------------------------------------------------------------------------

def _proximal_gradient(gradient: Callable[[np.ndarray], np.ndarray], step: float, lam: float,
                       theta0: np.ndarray, iterations: int, tol: float, name: str):
    """ISTA: theta <- soft(theta - step * grad, step * lam)."""
    theta = theta0.copy()
    for t in range(1, iterations + 1):
        updated = soft_threshold(theta - step * gradient(theta), step * lam)
        if not np.all(np.isfinite(updated)):
            raise DivergenceError(t, solver=name)
        peak = float(np.max(np.abs(updated))) if updated.size else 0.0
        if peak > DIVERGENCE_CAP:
            raise DivergenceError(t, peak, solver=name)
        change = float(np.max(np.abs(updated - theta))) if updated.size else 0.0
        theta = updated
        if change <= tol * max(1.0, peak):
            return theta, t, True
    return theta, iterations, False


def _spectral_bound(X: np.ndarray) -> float:
    """||X||_2^2 / n, the Lipschitz constant of the squared-loss gradient."""
    return float(np.linalg.norm(X, 2) ** 2) / X.shape[0]


def huber_loss(residual, tau: float) -> np.ndarray:
    a = np.abs(residual)
    return np.where(a <= tau, 0.5 * a * a, tau * a - 0.5 * tau * tau)


def huber_score(residual, tau: float) -> np.ndarray:
    """Derivative of the Huber loss: the residual clipped to [-tau, tau]."""
    return np.clip(residual, -tau, tau)


def huber_objective(X, y, theta, tau: float, lam: float) -> float:
    return float(np.mean(huber_loss(y - X @ theta, tau)) + lam * np.sum(np.abs(theta)))


def huber_gradient(X, y, theta, tau: float) -> np.ndarray:
    return -X.T @ huber_score(y - X @ theta, tau) / X.shape[0]


def huber_fixed(X: np.ndarray, y: np.ndarray, tau: float, lam: float, cfg: HuberConfig = HuberConfig(),
                theta0: Optional[np.ndarray] = None) -> PenalizedFit:
    step = cfg.step_size if cfg.step_size is not None else 1.0 / max(_spectral_bound(X), 1e-300)
    start = np.zeros(X.shape[1]) if theta0 is None else theta0
    theta, iterations, converged = _proximal_gradient(
        lambda th: huber_gradient(X, y, th, tau), step, lam, start, cfg.iterations, cfg.tol, "huber")
    return PenalizedFit(theta, float(lam), iterations, converged, tau=float(tau))


def residual_quantile_tau(data: Dataset, quantile: float = 0.95, pilot: LassoConfig = LassoConfig()) -> float:
    """Huber threshold from the absolute residuals of a pilot Lasso fit."""
    fit = lasso_solve(data, pilot)
    residual = np.abs(data.response - data.features @ fit.coef)
    return max(float(np.quantile(residual, quantile)), 1e-8)


def huber_solve(data: Dataset, cfg: HuberConfig = HuberConfig()) -> PenalizedFit:
    """
    l1-penalized Huber regression by proximal gradient.
    tau='auto' takes the residual quantile of a pilot Lasso; lam='cv' picks
    the penalty on a seeded validation split and refits on all rows.
    """
    X, y = data.features, data.response
    tau = residual_quantile_tau(data, cfg.quantile, cfg.pilot) if cfg.tau == AUTO else float(cfg.tau)
    if cfg.lam == CV:
        train, val = train_validation_split(data.n, cfg.validation_fraction, cfg.seed)
        lam_max = float(np.max(np.abs(X[train].T @ huber_score(y[train], tau)))) / train.shape[0]
        theta = np.zeros(data.p)
        best_lam, best_score = 0.0, np.inf
        for lam in lambda_grid(lam_max, cfg.grid_size, cfg.grid_ratio):
            theta = huber_fixed(X[train], y[train], tau, lam, cfg, theta).coef
            residual = y[val] - X[val] @ theta
            score = float(residual @ residual) / val.shape[0]
            if score < best_score:
                best_lam, best_score = float(lam), score
        lam = best_lam
    else:
        lam = float(cfg.lam)
    fit = huber_fixed(X, y, tau, lam, cfg)
    if not fit.converged:
        logger.warning("[LASSO] huber fit stopped at %d iterations without converging", fit.iterations)
    return fit


# ---------------------------------------------------------------------------
# Shrinkage
# ---------------------------------------------------------------------------

def truncate_columns(values: np.ndarray, quantile: float) -> np.ndarray:
    """Clip each column at the given quantile of its absolute values."""
    if quantile >= 1.0:
        return values.copy()
    levels = np.quantile(np.abs(values), quantile, axis=0)
    return np.clip(values, -levels, levels)


def shrinkage_solve(data: Dataset, cfg: ShrinkageConfig = ShrinkageConfig()) -> PenalizedFit:
    """Truncate features and responses at their quantiles, then run the Lasso."""
    X = truncate_columns(data.features, cfg.quantile_x)
    y = truncate_columns(data.response[:, None], cfg.quantile_y)[:, 0]
    return lasso_solve(Dataset(X, y), cfg.lasso)


# ---------------------------------------------------------------------------
# l1 logistic regression
# ---------------------------------------------------------------------------

def logistic_gradient_batch(X, y, theta) -> np.ndarray:
    return X.T @ (sigmoid(X @ theta) - y) / X.shape[0]


def logistic_deviance(X, y, theta) -> float:
    eta = X @ theta
    return float(np.mean(log1pexp(eta) - y * eta))


def logistic_lasso_fixed(X, y, lam: float, cfg: LogisticLassoConfig = LogisticLassoConfig(),
                         theta0: Optional[np.ndarray] = None) -> PenalizedFit:
    step = 4.0 / max(_spectral_bound(X), 1e-300)
    start = np.zeros(X.shape[1]) if theta0 is None else theta0
    theta, iterations, converged = _proximal_gradient(
        lambda th: logistic_gradient_batch(X, y, th), step, lam, start, cfg.iterations, cfg.tol, "logistic-lasso")
    return PenalizedFit(theta, float(lam), iterations, converged)


def logistic_lasso_solve(data: Dataset, cfg: LogisticLassoConfig = LogisticLassoConfig()) -> PenalizedFit:
    """l1-penalized logistic regression; lam='cv' uses held-out deviance on a validation split."""
    X, y = data.features, data.response
    if cfg.lam == CV:
        train, val = train_validation_split(data.n, cfg.validation_fraction, cfg.seed)
        lam_max = float(np.max(np.abs(X[train].T @ (0.5 - y[train])))) / train.shape[0]
        theta = np.zeros(data.p)
        best_lam, best_score = 0.0, np.inf
        for lam in lambda_grid(lam_max, cfg.grid_size, cfg.grid_ratio):
            theta = logistic_lasso_fixed(X[train], y[train], lam, cfg, theta).coef
            score = logistic_deviance(X[val], y[val], theta)
            if score < best_score:
                best_lam, best_score = float(lam), score
        lam = best_lam
    else:
        lam = float(cfg.lam)
    return logistic_lasso_fixed(X, y, lam, cfg)


def logistic_shrinkage_solve(data: Dataset, cfg: ShrinkageConfig = ShrinkageConfig(),
                             inner: LogisticLassoConfig = LogisticLassoConfig()) -> PenalizedFit:
    """Feature truncation followed by l1 logistic regression (labels are left as they are)."""
    return logistic_lasso_solve(Dataset(truncate_columns(data.features, cfg.quantile_x), data.response), inner)


def columnwise(solve: Callable[[Dataset], PenalizedFit], data: MultiResponseDataset) -> np.ndarray:
    """Apply a single-response estimator to every response column; returns the p x m estimate."""
    return np.column_stack([solve(data.column(j)).coef for j in range(data.m)])
