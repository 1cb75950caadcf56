"""
Method registry for comparison experiments.
Maps a method name to the estimator that fits it, so scenarios can run any
subset of methods on the same trial data.
"""
import logging
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Callable, Dict, FrozenSet, List, Optional

import numpy as np

from baselines import (columnwise, huber_solve, lasso_solve, logistic_lasso_solve,
                       logistic_shrinkage_solve, shrinkage_solve)
from components import AnyDataset, ModelKind, OracleKind
from dantzig import dantzig_init, multi_dantzig_init
from errors import InvalidParameterError
from models import RegressionModel
from samplers import RngStream
from solvers import RightConfig, right_solve, suggested_block_count, tune_block_count

if TYPE_CHECKING:
    from scenarios import ExperimentSpec

logger = logging.getLogger(__name__)

FitFunction = Callable[[AnyDataset, "ExperimentSpec", RegressionModel, RngStream], np.ndarray]

ALL_MODELS = frozenset(ModelKind)


@dataclass
class MethodEntry:
    """A registered estimator and the models it can fit."""
    name: str
    fit: FitFunction
    models: FrozenSet[ModelKind]
    description: str = ""


class MethodRegistry:
    """
    Registry of estimators keyed by name.
    A fresh registry already holds the built-in methods.
    """

    def __init__(self, builtins: bool = True):
        self._methods: Dict[str, MethodEntry] = {}
        if builtins:
            _register_builtins(self)

    def register(self, name: str, fit: FitFunction, models=ALL_MODELS, description: str = "") -> MethodEntry:
        """
        Add or replace an estimator.

        Args:
            name: method name used in specs, CSVs and reports
            fit: callable (data, spec, model, rng) -> estimate
            models: model kinds the estimator supports
            description: one-line text for reports

        Returns:
            The stored entry
        """
        entry = MethodEntry(name=name, fit=fit, models=frozenset(models), description=description)
        self._methods[name] = entry
        return entry

    def get(self, name: str) -> Optional[MethodEntry]:
        return self._methods.get(name)

    def require(self, name: str, model: ModelKind) -> MethodEntry:
        """Entry for name, checked against the model kind."""
        entry = self._methods.get(name)
        if entry is None:
            raise InvalidParameterError(f"unknown method '{name}'; known: {', '.join(self.names())}")
        if model not in entry.models:
            raise InvalidParameterError(f"method '{name}' does not support {model.value} models")
        return entry

    def names(self) -> List[str]:
        return list(self._methods)

    def fit(self, name: str, data: AnyDataset, spec: "ExperimentSpec", model: RegressionModel,
            rng: RngStream) -> np.ndarray:
        return self.require(name, model.kind).fit(data, spec, model, rng)

    def clear(self):
        self._methods.clear()


# ---------------------------------------------------------------------------
# Built-in estimators
# ---------------------------------------------------------------------------

def block_count_for(data: AnyDataset, spec: "ExperimentSpec", model: RegressionModel,
                    cfg: RightConfig, rng: Optional[RngStream] = None) -> int:
    """
    Explicit K, validation-tuned K, or the rule-of-thumb K for this sample.
    Tuning with shuffled partitions needs rng.
    """
    if spec.blocks is not None:
        return min(spec.blocks, data.n)
    if spec.tune_blocks:
        return tune_block_count(model, data, cfg, spec.block_rule, seed=spec.seed, rng=rng)
    return suggested_block_count(data.n, data.p, spec.block_rule, spec.block_multiplier)


def _right_config(spec: "ExperimentSpec", init=None) -> RightConfig:
    return RightConfig(s=spec.s, step_size=spec.step_size, iterations=spec.iterations,
                       init=init, partition_mode=spec.partition_mode)


def _start(data, spec, model):
    if spec.init != "dantzig":
        return None
    if model.kind == ModelKind.MULTI:
        return multi_dantzig_init(data, spec.dantzig)
    return dantzig_init(data, spec.dantzig)


def _fit_right(data, spec, model, rng):
    cfg = _right_config(spec, _start(data, spec, model))
    cfg = replace(cfg, blocks=block_count_for(data, spec, model, cfg, rng.fork(6)))
    return right_solve(model, data, cfg, rng=rng.fork(5)).estimate


def _fit_iht(data, spec, model, rng):
    cfg = replace(_right_config(spec, _start(data, spec, model)), step_size=spec.iht_step_size,
                  oracle_kind=OracleKind.MEAN)
    return right_solve(model, data, cfg).estimate


def _fit_lasso(data, spec, model, rng):
    if model.kind == ModelKind.LOGISTIC:
        return logistic_lasso_solve(data, spec.logistic).coef
    if model.kind == ModelKind.MULTI:
        return columnwise(lambda column: lasso_solve(column, spec.lasso), data)
    return lasso_solve(data, spec.lasso).coef


def _fit_huber(data, spec, model, rng):
    if model.kind == ModelKind.MULTI:
        return columnwise(lambda column: huber_solve(column, spec.huber), data)
    return huber_solve(data, spec.huber).coef


def _fit_shrinkage(data, spec, model, rng):
    if model.kind == ModelKind.LOGISTIC:
        return logistic_shrinkage_solve(data, spec.shrinkage, spec.logistic).coef
    if model.kind == ModelKind.MULTI:
        return columnwise(lambda column: shrinkage_solve(column, spec.shrinkage), data)
    return shrinkage_solve(data, spec.shrinkage).coef


def _register_builtins(registry: MethodRegistry):
    registry.register("right", _fit_right, ALL_MODELS, "hard thresholding with median-of-means gradients")
    registry.register("iht", _fit_iht, ALL_MODELS, "hard thresholding with empirical-mean gradients")
    registry.register("lasso", _fit_lasso, ALL_MODELS, "l1-penalized least squares (logistic loss for classification)")
    registry.register("huber", _fit_huber, {ModelKind.LINEAR, ModelKind.MULTI}, "l1-penalized adaptive Huber regression")
    registry.register("shrinkage", _fit_shrinkage, ALL_MODELS, "quantile truncation followed by the Lasso")


# Global registry instance
_registry: Optional[MethodRegistry] = None


def get_registry() -> MethodRegistry:
    """Get the global method registry instance."""
    global _registry
    if _registry is None:
        _registry = MethodRegistry()
    return _registry


def reset_registry():
    """Reset the global registry to the built-in methods."""
    global _registry
    _registry = MethodRegistry()
