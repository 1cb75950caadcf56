"""
Monte-Carlo experiments: rate adaptation to the noise tail, sample complexity
of the median-of-means gradient, and method comparisons; slope fitting on the
log-log error curves and the theoretical exponents they are compared with.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from components import (DistributionKind, DistributionSpec, ExperimentKind, ModelKind,
                        TailSetting, TrialRecord)
from errors import InvalidParameterError
from scenarios import (DESK_N_GRID, ExperimentSpec, TailTarget, TruthKind, design_tail_index,
                       noise_tail_index, scenario_for)
from solvers import BlockRule
from systems import run_harness

logger = logging.getLogger(__name__)

RATE_NOISE_DOF = (1.2, 1.4, 1.6, 1.8, 2.5, 6.0)
GRADIENT_DESIGN_DOF = (2.2, 2.4, 2.8, 3.2, 3.6, 22.0, 32.0)
PAPER_N_GRID = (300, 366, 600, 1000, 2000, 4000, 8000, 12000, 20006)
ALL_METHODS = ("right", "iht", "lasso", "huber", "shrinkage")


class ExponentKind(Enum):
    NOISE = "noise"  # error rate exponent zeta(delta)
    GRADIENT = "gradient"  # gradient-error rate exponent in lambda
    DESIGN = "design"  # sample-complexity exponent eta(lambda)


@dataclass(frozen=True)
class SlopeFit:
    """OLS line through (log n, log mean error)."""
    slope: float
    intercept: float
    r_squared: float
    points: Tuple[Tuple[float, float], ...]
    tail_param: Optional[float] = None
    method: str = ""
    theoretical: Optional[float] = None


@dataclass
class ExperimentResult:
    """Slope fits plus the records and mean-error curves behind them."""
    spec: ExperimentSpec
    fits: List[SlopeFit]
    records: List[TrialRecord]
    curves: Dict[Tuple[float, str], List[Tuple[int, float]]] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Slopes and exponents
# ---------------------------------------------------------------------------

def fit_slope(points: Sequence[Tuple[float, float]]) -> SlopeFit:
    """
    Ordinary least squares y = slope * x + intercept with the usual R^2.

    Raises:
        InvalidParameterError: fewer than two points or all x equal
    """
    data = np.asarray(points, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != 2:
        raise InvalidParameterError("slope fitting needs at least two (x, y) points")
    x, y = data[:, 0], data[:, 1]
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise InvalidParameterError("slope fitting needs at least two distinct x values")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    residual = y - (slope * x + intercept)
    total = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if total == 0.0 else 1.0 - float(residual @ residual) / total
    return SlopeFit(slope=slope, intercept=intercept, r_squared=min(max(r_squared, 0.0), 1.0),
                    points=tuple((float(a), float(b)) for a, b in zip(x, y)))


def expected_exponent(kind: ExponentKind, index: float) -> float:
    """
    Theoretical exponents: noise zeta = min(delta / (1 + delta), 1/2);
    gradient error min(lambda / (1 + lambda), 1/2); sample complexity
    eta = (1 + lambda) / (2 lambda), never below 1.
    """
    if not index > 0:
        raise InvalidParameterError(f"tail index must be > 0, got {index}")
    if kind == ExponentKind.DESIGN:
        return max((1.0 + index) / (2.0 * index), 1.0)
    return min(index / (1.0 + index), 0.5)


def mean_error_curves(records: Sequence[TrialRecord]) -> Dict[Tuple[float, str], List[Tuple[int, float]]]:
    """(tail_param, method) -> [(n, mean error over trials)] with n ascending."""
    sums: Dict[Tuple[float, str, int], List[float]] = {}
    for record in records:
        sums.setdefault((record.tail_param, record.method, record.n), []).append(record.error)
    curves: Dict[Tuple[float, str], List[Tuple[int, float]]] = {}
    for (tail, method, n), errors in sorted(sums.items()):
        curves.setdefault((tail, method), []).append((n, float(np.mean(errors))))
    return curves


def _fit_curves(curves, exponent_kind: Optional[ExponentKind], min_points: int) -> List[SlopeFit]:
    fits = []
    for (tail, method), curve in curves.items():
        if len(curve) < min_points:
            raise InvalidParameterError(f"slope fit needs >= {min_points} sample sizes, got {len(curve)}")
        fit = fit_slope([(math.log(n), math.log(max(err, 1e-300))) for n, err in curve])
        theoretical = -expected_exponent(exponent_kind, tail) if exponent_kind and tail > 0 else None
        fits.append(replace(fit, tail_param=tail, method=method, theoretical=theoretical))
    return fits


def _run(spec: ExperimentSpec, exponent_kind: Optional[ExponentKind], min_points: int) -> ExperimentResult:
    scenario = scenario_for(spec)
    records = run_harness(scenario, batch_size=spec.batch_size, threads=spec.threads)
    curves = mean_error_curves(records)
    fits = _fit_curves(curves, exponent_kind, min_points) if exponent_kind else []
    for fit in fits:
        logger.info("[EXPERIMENT] %s tail=%g %s: slope %.3f (theory %s), R^2 %.3f", spec.name,
                    fit.tail_param, fit.method, fit.slope,
                    "n/a" if fit.theoretical is None else f"{fit.theoretical:.3f}", fit.r_squared)
    return ExperimentResult(spec=spec, fits=fits, records=records, curves=curves)


def run_rate_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """
    Mean ||theta_hat - theta*||_2 over trials at each n, one slope per noise
    tail index. Diverged trials count at the censoring cap.
    """
    if spec.kind != ExperimentKind.RATE:
        raise InvalidParameterError(f"expected a rate spec, got {spec.kind.value}")
    return _run(spec, ExponentKind.NOISE, min_points=3)


def run_gradient_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Mean MoM gradient error at the probe over trials, one slope per design tail index."""
    if spec.kind != ExperimentKind.GRADIENT:
        raise InvalidParameterError(f"expected a gradient spec, got {spec.kind.value}")
    return _run(spec, ExponentKind.GRADIENT, min_points=3)


def run_comparison(spec: ExperimentSpec) -> ExperimentResult:
    """Per-method mean error curves on paired trial data; no slope fits."""
    if spec.kind != ExperimentKind.COMPARISON:
        raise InvalidParameterError(f"expected a comparison spec, got {spec.kind.value}")
    return _run(spec, None, min_points=1)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    runners = {ExperimentKind.RATE: run_rate_experiment,
               ExperimentKind.GRADIENT: run_gradient_experiment,
               ExperimentKind.COMPARISON: run_comparison}
    return runners[spec.kind](spec)


def final_errors(result: ExperimentResult) -> Dict[str, float]:
    """Method -> mean error at the largest sample size (first tail setting)."""
    tail = result.spec.tails[0].index
    return {method: curve[-1][1] for (t, method), curve in result.curves.items() if t == tail}


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

def _t(nu: float, scale: float = 1.0, kind: DistributionKind = DistributionKind.STUDENT_T) -> DistributionSpec:
    return DistributionSpec(kind=kind, nu=nu, scale=scale)


def rate_spec(preset: str = "desk") -> ExperimentSpec:
    """Student-t noise with nu in {1.2, ..., 6}, Gaussian design, benchmark signal."""
    tails = tuple(TailSetting(nu=nu, index=noise_tail_index(nu)) for nu in RATE_NOISE_DOF)
    base = ExperimentSpec(name="rate", kind=ExperimentKind.RATE, s_star=5, sparsity=10,
                          noise=_t(RATE_NOISE_DOF[0]), tails=tails, tail_target=TailTarget.NOISE,
                          step_size=0.02, iterations=250, methods=("right",))
    if preset == "paper":
        return replace(base, p=600, n_grid=PAPER_N_GRID, trials=100)
    return replace(base, p=200, n_grid=DESK_N_GRID, trials=30)


def gradient_spec(preset: str = "desk") -> ExperimentSpec:
    """Multivariate t design with nu in {2.2, ..., 32}, N(0, 1) noise, MoM gradient at the probe."""
    tails = tuple(TailSetting(nu=nu, index=design_tail_index(nu)) for nu in GRADIENT_DESIGN_DOF)
    base = ExperimentSpec(name="grad", kind=ExperimentKind.GRADIENT, s_star=5,
                          design=_t(GRADIENT_DESIGN_DOF[0], kind=DistributionKind.MULTIVARIATE_T),
                          tails=tails, tail_target=TailTarget.DESIGN, methods=("mom",))
    if preset == "paper":
        return replace(base, p=600, n_grid=PAPER_N_GRID, trials=200)
    return replace(base, p=200, n_grid=DESK_N_GRID, trials=100)


def comparison_spec(preset: str = "desk", model: ModelKind = ModelKind.LINEAR) -> ExperimentSpec:
    """
    Heavy design and noise: multivariate t(2.5) design with t(1.5) noise for linear;
    multivariate t(2.1) design scaled by 3 for logistic; multivariate t(3.5)
    design and t(1.5) noise with four responses for multi-response.
    """
    n_grid = (500, 1000, 2000, 4000) if preset != "paper" else (366, 1000, 2000, 4000, 8000)
    trials = 50 if preset != "paper" else 100
    common = dict(kind=ExperimentKind.COMPARISON, n_grid=n_grid, trials=trials, p=200,
                  step_size=0.01, iht_step_size=0.001,
                  block_rule=BlockRule.LOG_P_LOG_N_OVER_LOG_P, tune_blocks=True)
    if model == ModelKind.LOGISTIC:
        return ExperimentSpec(name="compare-logistic", model=model, s_star=5, truth=TruthKind.UNIFORM,
                              design=_t(2.1, 3.0, DistributionKind.MULTIVARIATE_T),
                              tails=(TailSetting(nu=2.1, index=design_tail_index(2.1)),),
                              tail_target=TailTarget.DESIGN,
                              methods=("right", "iht", "lasso", "shrinkage"), **common)
    if model == ModelKind.MULTI:
        return ExperimentSpec(name="compare-multi", model=model, s_star=2, m=4, truth=TruthKind.ROW_SPARSE,
                              design=_t(3.5, kind=DistributionKind.MULTIVARIATE_T),
                              noise=_t(1.5, kind=DistributionKind.MULTIVARIATE_T),
                              tails=(TailSetting(nu=1.5, index=noise_tail_index(1.5)),), tail_target=TailTarget.NOISE,
                              methods=ALL_METHODS, **common)
    return ExperimentSpec(name="compare", model=model, s_star=5,
                          design=_t(2.5, kind=DistributionKind.MULTIVARIATE_T), noise=_t(1.5),
                          tails=(TailSetting(nu=1.5, index=noise_tail_index(1.5)),), tail_target=TailTarget.NOISE,
                          methods=ALL_METHODS, **common)


PRESET_NAMES = ("desk", "paper")


def preset_spec(kind: ExperimentKind, preset: str = "desk", model: ModelKind = ModelKind.LINEAR) -> ExperimentSpec:
    if preset not in PRESET_NAMES:
        raise InvalidParameterError(f"unknown preset '{preset}', expected one of {PRESET_NAMES}")
    if kind == ExperimentKind.RATE:
        return rate_spec(preset)
    if kind == ExperimentKind.GRADIENT:
        return gradient_spec(preset)
    return comparison_spec(preset, model)
