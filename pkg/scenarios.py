"""
Experiment specifications and the per-trial work of each experiment kind.

A scenario turns an ExperimentSpec into trial setups and knows how to
generate a trial's data, fit its estimators and measure their errors. The
harness systems (systems.py) call these three steps on trial entities.
"""
import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from baselines import HuberConfig, LassoConfig, LogisticLassoConfig, ShrinkageConfig
from components import (DistributionKind, DistributionSpec, ExperimentKind, ModelKind,
                        PartitionMode, TailSetting, TrialData, TrialEstimates, TrialRecord,
                        TrialSetup)
from dantzig import DantzigConfig
from errors import DivergenceError, InvalidParameterError, LinearProgramError
from linalg import norm_l2, parameter_error
from method_registry import get_registry
from models import get_model
from mom import mom_gradient, partition
from samplers import (RngStream, benchmark_probe, benchmark_truth, data_checksum,
                      make_dataset, row_sparse_truth, second_moment_scale, uniform_truth)
from solvers import BlockRule, DEFAULT_IHT_STEP, suggested_block_count

logger = logging.getLogger(__name__)

DESK_N_GRID = (300, 600, 1200, 2400, 4800, 8000)
CENSORED_ERROR = 1e6
INIT_KINDS = ("zero", "dantzig")


class TruthKind(Enum):
    BENCHMARK = "benchmark"  # (5, -5, 6, -6, 7, 0, ...)
    UNIFORM = "uniform"  # s* leading entries from Uniform(0.5, 1.5)
    ROW_SPARSE = "row_sparse"  # s* leading rows of a p x m matrix


class TailTarget(Enum):
    """Which distribution the tail settings vary."""
    NOISE = "noise"
    DESIGN = "design"


def noise_tail_index(nu: float) -> float:
    """Nominal noise moment index delta for t(nu) noise (moments of order 1 + delta exist)."""
    return round(nu - 1.05, 10)


def design_tail_index(nu: float) -> float:
    """Nominal design moment index lambda for t(nu) designs (moments of order 2 + 2 lambda exist)."""
    return round((nu - 2.0) / 2.0 - 0.01, 10)


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything a Monte-Carlo experiment needs; presets live in experiments.py."""
    name: str
    kind: ExperimentKind
    model: ModelKind = ModelKind.LINEAR
    n_grid: Tuple[int, ...] = DESK_N_GRID
    p: int = 200
    s_star: int = 5
    m: int = 1
    truth: TruthKind = TruthKind.BENCHMARK
    design: DistributionSpec = DistributionSpec()
    noise: DistributionSpec = DistributionSpec()
    tails: Tuple[TailSetting, ...] = (TailSetting(nu=1.5, index=0.45),)
    tail_target: TailTarget = TailTarget.NOISE
    trials: int = 30
    seed: int = 0
    methods: Tuple[str, ...] = ("right",)
    sparsity: Optional[int] = None  # None means 2 s*
    step_size: float = 0.02
    iht_step_size: float = DEFAULT_IHT_STEP
    iterations: int = 250
    blocks: Optional[int] = None  # None derives K from block_rule
    block_rule: BlockRule = BlockRule.LOG_P_LOG_N
    block_multiplier: float = 1.0
    tune_blocks: bool = False
    partition_mode: PartitionMode = PartitionMode.CONTIGUOUS
    init: str = "zero"
    lasso: LassoConfig = field(default_factory=LassoConfig)
    huber: HuberConfig = field(default_factory=HuberConfig)
    shrinkage: ShrinkageConfig = field(default_factory=ShrinkageConfig)
    logistic: LogisticLassoConfig = field(default_factory=LogisticLassoConfig)
    dantzig: DantzigConfig = field(default_factory=DantzigConfig)
    censor_value: float = CENSORED_ERROR
    batch_size: int = 8
    threads: int = 1

    def __post_init__(self):
        if not self.n_grid or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise InvalidParameterError(f"n_grid must be non-empty and strictly ascending, got {self.n_grid}")
        if self.trials < 1:
            raise InvalidParameterError(f"trials must be >= 1, got {self.trials}")
        if not 1 <= self.s_star <= self.p:
            raise InvalidParameterError(f"need 1 <= s* <= p, got s*={self.s_star}, p={self.p}")
        if not self.tails:
            raise InvalidParameterError("an experiment needs at least one tail setting")
        if not self.methods:
            raise InvalidParameterError("an experiment needs at least one method")
        if self.init not in INIT_KINDS:
            raise InvalidParameterError(f"init must be one of {INIT_KINDS}, got {self.init}")
        if self.batch_size < 1 or self.threads < 1:
            raise InvalidParameterError("batch_size and threads must be >= 1")
        if self.model == ModelKind.MULTI and self.truth != TruthKind.ROW_SPARSE:
            raise InvalidParameterError("multi-response experiments need a row_sparse truth")

    @property
    def s(self) -> int:
        return self.sparsity if self.sparsity is not None else min(2 * self.s_star, self.p)

    def distributions(self, setting: TailSetting) -> Tuple[DistributionSpec, DistributionSpec]:
        """(design, noise) with the setting's degrees of freedom applied to the varied one."""
        if self.tail_target == TailTarget.NOISE:
            return self.design, replace(self.noise, nu=setting.nu)
        return replace(self.design, nu=setting.nu), self.noise


class Scenario(ABC):
    """Per-trial behaviour of one experiment kind."""
    kind: ExperimentKind

    def __init__(self, spec: ExperimentSpec):
        self.spec = spec
        self.model = get_model(spec.model)
        self.validate()

    def validate(self):
        """Hook for kind-specific spec checks."""

    def setups(self) -> List[TrialSetup]:
        """Trial setups in (setting, n, trial) order."""
        spec = self.spec
        return [TrialSetup(experiment=spec.name, setting_index=si, tail_param=setting.index,
                           nu=setting.nu, n=n, trial=t, seed=spec.seed)
                for si, setting in enumerate(spec.tails)
                for n in spec.n_grid
                for t in range(spec.trials)]

    def trial_stream(self, setup: TrialSetup) -> RngStream:
        """Stream id is the trial id; setting and sample size fork sub-streams."""
        return RngStream(setup.seed, setup.trial)

    def data_stream(self, setup: TrialSetup) -> RngStream:
        return self.trial_stream(setup).fork(setup.setting_index, self.spec.n_grid.index(setup.n))

    def make_truth(self, setup: TrialSetup) -> np.ndarray:
        spec = self.spec
        rng = self.trial_stream(setup).fork(99)
        if spec.truth == TruthKind.BENCHMARK:
            return benchmark_truth(spec.p)
        if spec.truth == TruthKind.UNIFORM:
            return uniform_truth(spec.p, spec.s_star, rng)
        return row_sparse_truth(spec.p, spec.m, spec.s_star, rng)

    def generate(self, setup: TrialSetup) -> TrialData:
        design, noise = self.spec.distributions(self.spec.tails[setup.setting_index])
        truth = self.make_truth(setup)
        dataset = make_dataset(self.spec.model, setup.n, truth, design, noise, self.data_stream(setup))
        return TrialData(dataset=dataset, truth=truth, checksum=data_checksum(dataset))

    @abstractmethod
    def estimate(self, setup: TrialSetup, data: TrialData) -> TrialEstimates:
        ...

    def target(self, data: TrialData) -> np.ndarray:
        """Quantity the estimates are compared to."""
        return data.truth

    def measure(self, setup: TrialSetup, data: TrialData, estimates: TrialEstimates) -> List[TrialRecord]:
        """One record per method; failed fits are censored at the spec's cap."""
        records = []
        for method, estimate in estimates.estimates.items():
            diverged = isinstance(estimate, Exception)
            if diverged:
                error = self.spec.censor_value
            else:
                error = min(parameter_error(estimate, self.target(data)), self.spec.censor_value)
            records.append(TrialRecord(
                experiment=setup.experiment, method=method, tail_param=setup.tail_param,
                n=setup.n, trial=setup.trial, seed=setup.seed, error=float(error),
                wall_ms=estimates.wall_ms[method], diverged=diverged, checksum=data.checksum))
        return records


class MethodScenario(Scenario):
    """Fits the spec's methods from the registry on shared trial data."""

    def validate(self):
        registry = get_registry()
        for method in self.spec.methods:
            registry.require(method, self.spec.model)

    def estimate(self, setup, data):
        registry = get_registry()
        rng = self.data_stream(setup).fork(1)
        estimates: Dict[str, object] = {}
        wall_ms: Dict[str, float] = {}
        for method in self.spec.methods:
            start = time.perf_counter()
            try:
                estimates[method] = registry.fit(method, data.dataset, self.spec, self.model, rng)
            except (DivergenceError, LinearProgramError) as exc:
                logger.info("[TRIAL] %s failed at n=%d trial=%d: %s", method, setup.n, setup.trial, exc)
                estimates[method] = exc
            wall_ms[method] = (time.perf_counter() - start) * 1000.0
        return TrialEstimates(estimates=estimates, wall_ms=wall_ms)


class RateScenario(MethodScenario):
    """Estimation error of RIGHT as the noise tail index varies."""
    kind = ExperimentKind.RATE

    def validate(self):
        if self.spec.model != ModelKind.LINEAR:
            raise InvalidParameterError("rate experiments use the linear model")
        super().validate()


class ComparisonScenario(MethodScenario):
    """Several estimators on identical data per trial."""
    kind = ExperimentKind.COMPARISON


class GradientScenario(Scenario):
    """
    Error of the median-of-means gradient at a fixed probe against the
    population gradient Sigma (theta - theta*), as the design tail varies.
    """
    kind = ExperimentKind.GRADIENT
    method = "mom"

    def validate(self):
        spec = self.spec
        if spec.model != ModelKind.LINEAR or spec.truth != TruthKind.BENCHMARK:
            raise InvalidParameterError("gradient experiments use the linear model with the benchmark signal")
        if spec.design.kind not in (DistributionKind.GAUSSIAN, DistributionKind.STUDENT_T,
                                    DistributionKind.MULTIVARIATE_T):
            raise InvalidParameterError("gradient experiments need a design with a closed-form covariance")

    def generate(self, setup):
        data = super().generate(setup)
        design, _ = self.spec.distributions(self.spec.tails[setup.setting_index])
        probe = benchmark_probe(self.spec.p)
        data.extras["probe"] = probe
        data.extras["population_gradient"] = second_moment_scale(design) * (probe - data.truth)
        return data

    def block_count(self, n: int) -> int:
        if self.spec.blocks is not None:
            return min(self.spec.blocks, n)
        return suggested_block_count(n, self.spec.p, self.spec.block_rule, self.spec.block_multiplier)

    def estimate(self, setup, data):
        start = time.perf_counter()
        K = self.block_count(setup.n)
        blocks = partition(setup.n, K, self.spec.partition_mode, self.data_stream(setup).fork(2))
        gradient = mom_gradient(self.model, data.dataset, data.extras["probe"], K, blocks).value
        wall = (time.perf_counter() - start) * 1000.0
        logger.debug("[TRIAL] gradient n=%d K=%d ||g||=%.4g", setup.n, K, norm_l2(gradient))
        return TrialEstimates(estimates={self.method: gradient}, wall_ms={self.method: wall})

    def target(self, data):
        return data.extras["population_gradient"]


SCENARIOS = {
    ExperimentKind.RATE: RateScenario,
    ExperimentKind.GRADIENT: GradientScenario,
    ExperimentKind.COMPARISON: ComparisonScenario,
}


def scenario_for(spec: ExperimentSpec) -> Scenario:
    return SCENARIOS[spec.kind](spec)
