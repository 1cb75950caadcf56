"""
RIGHT (iterative hard thresholding with a robust gradient oracle), vanilla
IHT, the convergence-constant calculator and empirical curvature/stability
diagnostics.
"""
import itertools
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np

from baselines import train_validation_split
from components import AnyDataset, OracleKind, PartitionMode
from errors import DimensionMismatchError, DivergenceError, InvalidParameterError
from linalg import hard_threshold, norm_l2, parameter_error, row_hard_threshold, threshold
from models import RegressionModel
from mom import GradientOracle, MeanGradientOracle, MedianOfMeansOracle, partition

logger = logging.getLogger(__name__)

# any iterate coordinate beyond this magnitude counts as divergence
DIVERGENCE_CAP = 1e15

DEFAULT_RIGHT_STEP = 0.02
DEFAULT_IHT_STEP = 0.001


class BlockRule(Enum):
    """Block-count recipes: K = c log(p log n) or K = c log(p log(n / log p))."""
    LOG_P_LOG_N = "log_p_log_n"
    LOG_P_LOG_N_OVER_LOG_P = "log_p_log_n_over_log_p"


@dataclass(frozen=True)
class RightConfig:
    """Inputs of one RIGHT/IHT run."""
    s: int
    step_size: float = DEFAULT_RIGHT_STEP
    iterations: int = 250
    blocks: int = 1
    init: Optional[np.ndarray] = None  # None starts from zero
    oracle_kind: OracleKind = OracleKind.MOM
    record_trajectory: bool = False
    partition_mode: PartitionMode = PartitionMode.CONTIGUOUS
    divergence_cap: float = DIVERGENCE_CAP

    def __post_init__(self):
        if self.s < 1:
            raise InvalidParameterError(f"sparsity s must be >= 1, got {self.s}")
        if not self.step_size > 0:
            raise InvalidParameterError(f"step size must be > 0, got {self.step_size}")
        if self.iterations < 0:
            raise InvalidParameterError(f"iteration count must be >= 0, got {self.iterations}")
        if self.blocks < 1:
            raise InvalidParameterError(f"block count must be >= 1, got {self.blocks}")


@dataclass(frozen=True)
class SolveResult:
    estimate: np.ndarray
    iterations: int
    oracle_kind: OracleKind
    trajectory: Optional[List[np.ndarray]] = None
    per_iteration_error: Optional[List[float]] = None  # entry t is ||theta^t - theta*||, t = 0..T


@dataclass(frozen=True)
class ConvergenceConstants:
    a: float
    b: float
    eta0: float
    phi_var: float
    c0: float
    c1: float
    c2: float

    @property
    def step_size(self) -> float:
        """The step size eta = 2 a eta0 the contraction statement is made for."""
        return 2.0 * self.a * self.eta0

    def stability_threshold(self) -> float:
        """Largest multiplicative SRS coefficient allowed: phi < 1 / c2."""
        return 1.0 / self.c2

    def admits(self, phi_mult: float) -> bool:
        return phi_mult < self.stability_threshold()

    def min_sparsity(self, s_star: int) -> int:
        """Smallest integer s with s > c0 s*."""
        return int(math.floor(self.c0 * s_star)) + 1


@dataclass(frozen=True)
class SrsEstimate:
    phi_mult: float
    gamma_add: float
    probe_count: int


@dataclass(frozen=True)
class SrcgProbe:
    a_hat: float
    b_hat: float
    kappa_minus: float
    kappa_plus: float
    supports_checked: int


def suggested_iterations(n: int, p: int, c: float = 1.0) -> int:
    """T = ceil(c ln(n / ln p)), at least one."""
    if p < 2:
        return max(1, int(math.ceil(c * math.log(max(n, 2)))))
    return max(1, int(math.ceil(c * math.log(max(n / math.log(p), 1.0 + 1e-12)))))


def suggested_block_count(n: int, p: int, rule: BlockRule = BlockRule.LOG_P_LOG_N, c: float = 1.0) -> int:
    """Block count from one of the two log recipes, clamped to [1, n]."""
    if rule == BlockRule.LOG_P_LOG_N:
        inner = p * math.log(max(n, 2))
    else:
        inner = p * math.log(max(n / math.log(max(p, 2)), math.e))
    K = int(round(c * math.log(max(inner, 1.0))))
    return min(max(K, 1), n)


def build_oracle(model: RegressionModel, data: AnyDataset, cfg: RightConfig, rng=None) -> GradientOracle:
    if cfg.oracle_kind == OracleKind.MEAN:
        return MeanGradientOracle(model, data)
    blocks = partition(data.n, cfg.blocks, cfg.partition_mode, rng)
    return MedianOfMeansOracle(model, data, blocks)


def _initial_point(model: RegressionModel, data: AnyDataset, cfg: RightConfig) -> np.ndarray:
    zero = model.zero_parameter(data)
    if cfg.init is None:
        return zero
    init = np.array(cfg.init, dtype=np.float64)
    if init.shape != zero.shape:
        raise DimensionMismatchError(f"init of shape {init.shape}, parameter shape {zero.shape}")
    return init


def right_solve(model: RegressionModel, data: AnyDataset, cfg: RightConfig,
                truth: Optional[np.ndarray] = None, rng=None) -> SolveResult:
    """
    Run exactly T iterations of theta <- P_s(theta - eta g(theta; K)).

    Args:
        model: loss/gradient provider
        data: observations
        cfg: sparsity, step size, iterations, block count, oracle kind, start point
        truth: optional theta*, enables per-iteration errors
        rng: RngStream, needed only for shuffled partitions

    Returns:
        SolveResult with the final iterate (and trajectory when requested)

    Raises:
        DivergenceError: an iterate became non-finite or exceeded the divergence cap
    """
    model.validate(data)
    theta = _initial_point(model, data, cfg)
    if truth is not None and np.shape(truth) != theta.shape:
        raise DimensionMismatchError("truth does not match the parameter shape")
    trajectory = [theta.copy()] if cfg.record_trajectory else None
    errors = [parameter_error(theta, truth)] if truth is not None else None
    if cfg.iterations == 0:
        return SolveResult(theta, 0, cfg.oracle_kind, trajectory, errors)

    oracle = build_oracle(model, data, cfg, rng)
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(1, cfg.iterations + 1):
            gradient = oracle(theta).value
            theta = threshold(theta - cfg.step_size * gradient, cfg.s)
            if not np.all(np.isfinite(theta)):
                raise DivergenceError(t, solver=cfg.oracle_kind.value)
            peak = float(np.max(np.abs(theta)))
            if peak > cfg.divergence_cap:
                raise DivergenceError(t, peak, solver=cfg.oracle_kind.value)
            if trajectory is not None:
                trajectory.append(theta.copy())
            if errors is not None:
                errors.append(parameter_error(theta, truth))

    logger.debug("[SOLVER] %s finished %d iterations, ||theta||_2 = %.4g",
                 cfg.oracle_kind.value, cfg.iterations, norm_l2(theta))
    return SolveResult(theta, cfg.iterations, cfg.oracle_kind, trajectory, errors)


def iht_solve(model: RegressionModel, data: AnyDataset, cfg: RightConfig,
              truth: Optional[np.ndarray] = None) -> SolveResult:
    """Vanilla IHT: RIGHT with the empirical-mean gradient."""
    return right_solve(model, data, replace(cfg, oracle_kind=OracleKind.MEAN), truth)


def tune_block_count(model: RegressionModel, data: AnyDataset, cfg: RightConfig,
                     rule: BlockRule = BlockRule.LOG_P_LOG_N_OVER_LOG_P,
                     multipliers: Sequence[float] = (0.5, 1.0, 2.0),
                     validation_fraction: float = 0.2, seed: int = 0, rng=None) -> int:
    """
    Pick K = c log(...) over the multipliers by validation loss on a seeded
    holdout; diverged candidates lose. Returns the block count for the full sample.
    Shuffled partitions draw candidate i from rng.fork(i).
    """
    train, val = train_validation_split(data.n, validation_fraction, seed)
    fit_data, val_data = data.subset(train), data.subset(val)
    best_c, best_loss = multipliers[0], math.inf
    for i, c in enumerate(multipliers):
        K = suggested_block_count(fit_data.n, data.p, rule, c)
        try:
            estimate = right_solve(model, fit_data, replace(cfg, blocks=K),
                                   rng=None if rng is None else rng.fork(i)).estimate
        except DivergenceError:
            continue
        loss = model.mean_loss(val_data.features, val_data.response, estimate)
        if loss < best_loss:
            best_c, best_loss = c, loss
    K = suggested_block_count(data.n, data.p, rule, best_c)
    logger.debug("[SOLVER] block tuning chose c=%s (K=%d)", best_c, K)
    return K


def theorem1_constants(a: float, b: float, eta0: float) -> ConvergenceConstants:
    """
    Contraction constants for curvature (a, b) and step scale eta0:
    phi = sqrt(1 - 4 a b eta0), c1 = (3 + phi) / 4, c2 = 4 a eta0 (1 + phi) / (phi - phi^2),
    c0 = 1 + 64 phi^4 / (-3 phi^2 + 2 phi + 1)^2.
    """
    if not a > 0:
        raise InvalidParameterError(f"a must be > 0, got {a}")
    if not 0 < b <= 1.0 / (4.0 * a):
        raise InvalidParameterError(f"b must lie in (0, 1/(4a)] = (0, {1.0 / (4.0 * a):.6g}], got {b}")
    if not 0 < eta0 <= 1:
        raise InvalidParameterError(f"eta0 must lie in (0, 1], got {eta0}")
    product = 4.0 * a * b * eta0
    if product >= 1.0:
        raise InvalidParameterError(f"4 a b eta0 = {product:.6g} >= 1 leaves c2 undefined")
    phi = math.sqrt(1.0 - product)
    c1 = (3.0 + phi) / 4.0
    c2 = 4.0 * a * eta0 * (1.0 + phi) / (phi - phi * phi)
    c0 = 1.0 + 64.0 * phi ** 4 / (-3.0 * phi * phi + 2.0 * phi + 1.0) ** 2
    return ConvergenceConstants(a=a, b=b, eta0=eta0, phi_var=phi, c0=c0, c1=c1, c2=c2)


def linear_population_gradient(sigma: np.ndarray, truth: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """E[grad L(theta)] = Sigma_x (theta - theta*) for linear and multi-response models."""
    return lambda theta: sigma @ (theta - truth)


def surrogate_population_gradient(model: RegressionModel, large: AnyDataset) -> Callable[[np.ndarray], np.ndarray]:
    """Mean gradient over a large independent sample, for models without a closed form."""
    return lambda theta: model.mean_gradient(large.features, large.response, theta)


def _srs_envelope(distances: np.ndarray, deviations: np.ndarray, grid_size: int = 201):
    """Smallest gamma dominating every probe for each slope on a grid; pick argmin phi + gamma."""
    if distances.shape[0] == 1:
        return 0.0, float(deviations[0])
    positive = distances > 0
    top = float(np.max(deviations[positive] / distances[positive])) if np.any(positive) else 0.0
    best = (0.0, float(np.max(deviations)))
    for phi in np.linspace(0.0, top, grid_size) if top > 0 else [0.0]:
        gamma = float(max(np.max(deviations - phi * distances), 0.0))
        if phi + gamma < best[0] + best[1]:
            best = (float(phi), gamma)
    return best


def probe_srs(model: RegressionModel, data: AnyDataset, probes: Sequence[np.ndarray], K: int,
              s: int, s_star: int, truth: np.ndarray,
              population_gradient: Callable[[np.ndarray], np.ndarray]) -> SrsEstimate:
    """
    Fit (phi, gamma) so that ||g(theta)_S - E grad L(theta)_S||_2 <= phi ||theta - theta*||_2 + gamma
    over the given probes, with S the worst index set of size 2s + s*.
    Synthetic use only: needs theta* and the population gradient.
    """
    if len(probes) == 0:
        raise InvalidParameterError("probe_srs needs at least one probe")
    oracle = MedianOfMeansOracle(model, data, partition(data.n, K))
    size = 2 * s + s_star
    distances, deviations = [], []
    for theta in probes:
        theta = np.asarray(theta, dtype=np.float64)
        deviation = oracle(theta).value - population_gradient(theta)
        worst = hard_threshold(deviation, size) if deviation.ndim == 1 else row_hard_threshold(deviation, size)
        distances.append(parameter_error(theta, truth))
        deviations.append(norm_l2(worst))
    phi, gamma = _srs_envelope(np.array(distances), np.array(deviations))
    return SrsEstimate(phi_mult=phi, gamma_add=gamma, probe_count=len(probes))


def _dominant_eigenvalue(A: np.ndarray, start: np.ndarray, tol: float = 1e-11,
                         max_iter: int = 100000) -> float:
    """Power iteration for the largest eigenvalue of a symmetric PSD matrix."""
    v = start / np.linalg.norm(start)
    scale = max(float(np.max(np.sum(np.abs(A), axis=1))), 1e-300)
    rho = 0.0
    for _ in range(max_iter):
        w = A @ v
        rho = float(v @ w)
        if np.linalg.norm(w - rho * v) <= tol * scale:
            return rho
        length = np.linalg.norm(w)
        if length == 0.0:
            return 0.0
        v = w / length
    logger.warning("[SOLVER] power iteration stopped at the cap; eigenvalue %.6g may be inexact", rho)
    return rho


def _extreme_eigenvalues(A: np.ndarray, start: np.ndarray):
    """(lambda_min, lambda_max) of a symmetric matrix via shifted power iterations."""
    shift = float(np.max(np.sum(np.abs(A), axis=1)))  # Gershgorin bound on |lambda|
    eye = np.eye(A.shape[0])
    lam_max = _dominant_eigenvalue(A + shift * eye, start) - shift
    lam_min = lam_max - _dominant_eigenvalue(lam_max * eye - A, start)
    return lam_min, lam_max


def probe_srcg(sigma: np.ndarray, s: int, s_star: int, n_supports: int = 200, rng=None,
               exhaustive: bool = False) -> SrcgProbe:
    """
    Sparse-eigenvalue estimates of Sigma over supports of size 2(s + s*),
    mapped to curvature parameters a = kappa_- / (2 kappa_+^2), b = kappa_- / 2.

    Args:
        sigma: symmetric p x p matrix
        s, s_star: solver and true sparsity
        n_supports: random supports to sample (ignored when exhaustive)
        rng: RngStream for support sampling and start vectors
        exhaustive: enumerate every support instead of sampling
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise DimensionMismatchError(f"Sigma must be square, got {sigma.shape}")
    if not np.allclose(sigma, sigma.T, rtol=1e-10, atol=1e-12):
        raise InvalidParameterError("Sigma must be symmetric")
    p = sigma.shape[0]
    size = min(p, 2 * (s + s_star))
    if exhaustive:
        supports = list(itertools.combinations(range(p), size))
    else:
        if rng is None:
            raise InvalidParameterError("sampled supports need an RngStream")
        supports = [tuple(np.sort(rng.generator.choice(p, size, replace=False))) for _ in range(n_supports)]
    start_rng = np.random.default_rng(0) if rng is None else rng.fork(1).generator

    kappa_minus, kappa_plus = math.inf, -math.inf
    for support in supports:
        sub = sigma[np.ix_(support, support)]
        start = 1.0 + 0.1 * start_rng.standard_normal(size)
        lam_min, lam_max = _extreme_eigenvalues(sub, start)
        kappa_minus = min(kappa_minus, lam_min)
        kappa_plus = max(kappa_plus, lam_max)
    if kappa_minus <= 0:
        logger.warning("[SOLVER] restricted minimum eigenvalue %.3g <= 0: curvature condition fails", kappa_minus)
    return SrcgProbe(a_hat=kappa_minus / (2.0 * kappa_plus ** 2), b_hat=kappa_minus / 2.0,
                     kappa_minus=kappa_minus, kappa_plus=kappa_plus, supports_checked=len(supports))
