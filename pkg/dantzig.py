"""
Robust Dantzig selector: entry-wise truncated second moments and the l1
minimization

    min ||theta||_1  s.t.  ||Sigma_x(tau_x) theta - sigma_yx(tau_yx)||_inf <= R

solved as a linear program in the split variables theta = theta+ - theta-.
Used as the initializer for RIGHT.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from baselines import AUTO, LassoConfig, lasso_fixed, lasso_solve
from components import Dataset, MultiResponseDataset
from errors import DimensionMismatchError, InvalidParameterError
from simplex import DEFAULT_MAX_ITERATIONS, solve_lp

logger = logging.getLogger(__name__)

MAX_DIMENSION = 600
# rows used for the automatic truncation quantile when n p^2 exceeds _CHUNK_ELEMENTS
_QUANTILE_ROWS = 256
# elements per chunk of the n x p x p product tensor
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class DantzigConfig:
    """Truncation levels and constraint radius; 'auto' resolves them from the data."""
    tau_x: Union[float, str] = AUTO
    tau_yx: Union[float, str] = AUTO
    radius: Union[float, str] = AUTO
    quantile: float = 0.95
    radius_inflation: float = 1.1
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    pilot: LassoConfig = field(default_factory=LassoConfig)

    def __post_init__(self):
        for name in ("tau_x", "tau_yx", "radius"):
            value = getattr(self, name)
            if value != AUTO and not float(value) > 0:
                raise InvalidParameterError(f"{name} must be > 0 or 'auto', got {value}")
        if not 0.0 < self.quantile <= 1.0:
            raise InvalidParameterError(f"quantile must lie in (0, 1], got {self.quantile}")


@dataclass(frozen=True)
class TruncatedMoments:
    sigma: np.ndarray  # p x p, symmetric
    cross: np.ndarray  # p, or p x m for several responses
    tau_x: float
    tau_yx: float


def truncate(a, tau: float):
    """sign(a) * min(|a|, tau), element-wise; tau may be infinite."""
    if not tau > 0:
        raise InvalidParameterError(f"truncation level must be > 0, got {tau}")
    out = np.sign(a) * np.minimum(np.abs(a), tau)
    return out if np.ndim(out) else float(out)


def _quantile_rows(n: int, p: int) -> np.ndarray:
    """Every row when the n x p x p products fit one chunk, else evenly spaced rows."""
    if n * p * p <= _CHUNK_ELEMENTS:
        return np.arange(n)
    count = max(1, min(_QUANTILE_ROWS, _CHUNK_ELEMENTS // max(p * p, 1)))
    if n <= count:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, count).astype(np.int64))


def _auto_tau_x(X: np.ndarray, quantile: float) -> float:
    """
    Quantile of |x_ij x_ik| over all rows, or over at most _QUANTILE_ROWS
    evenly spaced rows for large n p^2.
    """
    rows = X[_quantile_rows(*X.shape)]
    products = np.abs(np.einsum("ni,nj->nij", rows, rows))
    return max(float(np.quantile(products, quantile)), 1e-12)


def _auto_tau_yx(X: np.ndarray, y: np.ndarray, quantile: float) -> float:
    return max(float(np.quantile(np.abs(y[:, None] * X), quantile)), 1e-12)


def truncated_sigma(X: np.ndarray, tau_x: float) -> np.ndarray:
    """(1/n) sum_i T(x_i x_i^T, tau_x), accumulated in row chunks."""
    n, p = X.shape
    chunk = max(1, _CHUNK_ELEMENTS // max(p * p, 1))
    total = np.zeros((p, p))
    for start in range(0, n, chunk):
        rows = X[start:start + chunk]
        total += truncate(np.einsum("ni,nj->nij", rows, rows), tau_x).sum(axis=0)
    return total / n


def truncated_cross(X: np.ndarray, y: np.ndarray, tau_yx: float) -> np.ndarray:
    """(1/n) sum_i T(y_i x_i, tau_yx)."""
    return truncate(y[:, None] * X, tau_yx).mean(axis=0)


def truncated_moments(data: Union[Dataset, MultiResponseDataset],
                      cfg: DantzigConfig = DantzigConfig()) -> TruncatedMoments:
    """
    Truncated covariance and cross-moment of a dataset. Several responses
    give a p x m cross-moment, one column per response.
    """
    X = data.features
    if data.n < 1:
        raise InvalidParameterError("truncated moments need n >= 1")
    tau_x = _auto_tau_x(X, cfg.quantile) if cfg.tau_x == AUTO else float(cfg.tau_x)
    sigma = truncated_sigma(X, tau_x)
    if isinstance(data, MultiResponseDataset):
        responses = [np.ascontiguousarray(data.response[:, j]) for j in range(data.m)]
    else:
        responses = [data.response]
    levels = [_auto_tau_yx(X, y, cfg.quantile) if cfg.tau_yx == AUTO else float(cfg.tau_yx)
              for y in responses]
    columns = [truncated_cross(X, y, tau) for y, tau in zip(responses, levels)]
    cross = np.column_stack(columns) if isinstance(data, MultiResponseDataset) else columns[0]
    return TruncatedMoments(sigma=sigma, cross=cross, tau_x=tau_x, tau_yx=max(levels))


def dantzig_solve(moments: TruncatedMoments, radius: float,
                  max_iterations: int = DEFAULT_MAX_ITERATIONS) -> np.ndarray:
    """
    Minimum-l1 point of {theta : ||Sigma theta - sigma||_inf <= R} by the
    dense simplex on the variables (theta+, theta-) >= 0.

    Raises:
        InfeasibleProblemError when no theta satisfies the constraint
        IterationLimitError when the pivot cap is reached
    """
    sigma, cross = moments.sigma, moments.cross
    if cross.ndim != 1:
        raise DimensionMismatchError("dantzig_solve takes a single cross-moment vector")
    p = cross.shape[0]
    if sigma.shape != (p, p):
        raise DimensionMismatchError(f"Sigma {sigma.shape} vs cross-moment of length {p}")
    if p > MAX_DIMENSION:
        raise InvalidParameterError(f"dense LP limited to p <= {MAX_DIMENSION}, got {p}")
    if not radius >= 0:
        raise InvalidParameterError(f"radius must be >= 0, got {radius}")

    A = np.block([[sigma, -sigma], [-sigma, sigma]])
    b = np.concatenate([radius + cross, radius - cross])
    solution = solve_lp(np.ones(2 * p), A, b, max_iterations=max_iterations)
    theta = solution.x[:p] - solution.x[p:]
    logger.debug("[DANTZIG] p=%d R=%.4g: ||theta||_1=%.6g after %d pivots",
                 p, radius, solution.objective, solution.iterations)
    return theta


def auto_radius(data: Dataset, moments: TruncatedMoments, cfg: DantzigConfig = DantzigConfig()) -> float:
    """
    Constraint radius from a pilot Lasso theta0: inflation * ||Sigma theta0 - sigma||_inf.
    Small samples that cannot be cross-validated use lam = lam_max / 10.
    """
    if data.n >= 2 * cfg.pilot.folds:
        pilot = lasso_solve(data, cfg.pilot).coef
    else:
        lam_max = float(np.max(np.abs(data.features.T @ data.response))) / data.n
        pilot = lasso_fixed(data.features, data.response, lam_max / 10.0, cfg.pilot).coef
    gap = float(np.max(np.abs(moments.sigma @ pilot - moments.cross)))
    return max(cfg.radius_inflation * gap, 1e-12)


def dantzig_init(data: Dataset, cfg: DantzigConfig = DantzigConfig(),
                 moments: Optional[TruncatedMoments] = None) -> np.ndarray:
    """Truncated moments followed by the Dantzig LP: the recommended RIGHT start point."""
    if moments is None:
        moments = truncated_moments(data, cfg)
    radius = auto_radius(data, moments, cfg) if cfg.radius == AUTO else float(cfg.radius)
    return dantzig_solve(moments, radius, cfg.max_iterations)


def multi_dantzig_init(data: MultiResponseDataset, cfg: DantzigConfig = DantzigConfig()) -> np.ndarray:
    """
    Column-by-column Dantzig programs for a p x m parameter: each response
    gets its own l1 problem with the shared truncated covariance.
    """
    tau_x = _auto_tau_x(data.features, cfg.quantile) if cfg.tau_x == AUTO else float(cfg.tau_x)
    sigma = truncated_sigma(data.features, tau_x)
    columns = []
    for j in range(data.m):
        column = data.column(j)
        tau_yx = _auto_tau_yx(column.features, column.response, cfg.quantile) \
            if cfg.tau_yx == AUTO else float(cfg.tau_yx)
        moments = TruncatedMoments(sigma, truncated_cross(column.features, column.response, tau_yx),
                                   tau_x, tau_yx)
        columns.append(dantzig_init(column, cfg, moments))
    return np.column_stack(columns)
