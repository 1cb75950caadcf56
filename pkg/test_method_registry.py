"""
Tests for the method registry.
"""
from dataclasses import replace

import numpy as np
import pytest

from components import Dataset, ExperimentKind, ModelKind, MultiResponseDataset, PartitionMode
from dantzig import DantzigConfig, dantzig_init
from errors import InvalidParameterError
from method_registry import MethodRegistry, block_count_for, get_registry, reset_registry
from models import get_model
from samplers import RngStream
from scenarios import ExperimentSpec, TruthKind
from solvers import BlockRule, RightConfig


def _spec(**overrides):
    settings = dict(name="registry", kind=ExperimentKind.COMPARISON, p=6, s_star=2, sparsity=2,
                    iterations=100, step_size=0.1, iht_step_size=0.1)
    settings.update(overrides)
    return ExperimentSpec(**settings)


def _linear_data(n=300, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 6))
    truth = np.array([2.0, -1.5, 0.0, 0.0, 0.0, 0.0])
    return Dataset(X, X @ truth + 0.05 * rng.standard_normal(n)), truth


def test_builtin_methods():
    """A fresh registry holds the five comparison methods."""
    registry = MethodRegistry()
    assert registry.names() == ["right", "iht", "lasso", "huber", "shrinkage"]
    assert registry.get("ridge") is None
    assert MethodRegistry(builtins=False).names() == []


def test_require_checks_model_support():
    """Unknown names and unsupported models are refused."""
    registry = MethodRegistry()
    assert registry.require("huber", ModelKind.LINEAR).name == "huber"
    with pytest.raises(InvalidParameterError):
        registry.require("huber", ModelKind.LOGISTIC)
    with pytest.raises(InvalidParameterError):
        registry.require("ridge", ModelKind.LINEAR)


def test_register_custom_method(clean_world):
    """Registered estimators are reachable through the global registry until reset."""
    registry = get_registry()
    registry.register("zeros", lambda data, spec, model, rng: np.zeros(data.p), {ModelKind.LINEAR}, "all zeros")
    data, _ = _linear_data()
    estimate = get_registry().fit("zeros", data, _spec(), get_model(ModelKind.LINEAR), RngStream(0))
    np.testing.assert_array_equal(estimate, np.zeros(6))
    reset_registry()
    assert get_registry().get("zeros") is None


def test_block_count_for():
    """Explicit K is clamped to n; otherwise the log rule applies."""
    data, _ = _linear_data(n=50)
    model = get_model(ModelKind.LINEAR)
    cfg = RightConfig(s=2)
    assert block_count_for(data, _spec(blocks=80), model, cfg) == 50
    assert block_count_for(data, _spec(blocks=3), model, cfg) == 3
    assert block_count_for(data, _spec(), model, cfg) == 3


def test_linear_methods_recover_the_signal():
    """Every built-in method lands near theta* on light-tailed data; truncation costs shrinkage some bias."""
    data, truth = _linear_data()
    spec = _spec()
    model = get_model(ModelKind.LINEAR)
    registry = MethodRegistry()
    for name in registry.names():
        estimate = registry.fit(name, data, spec, model, RngStream(0))
        assert estimate.shape == (6,)
        bound = 0.6 if name == "shrinkage" else 0.3
        assert np.linalg.norm(estimate - truth) < bound, name


def test_dantzig_start_for_right():
    """The Dantzig initializer feeds RIGHT without changing the answer much."""
    data, truth = _linear_data(seed=1)
    model = get_model(ModelKind.LINEAR)
    registry = MethodRegistry()
    estimate = registry.fit("right", data, _spec(init="dantzig"), model, RngStream(0))
    assert np.linalg.norm(estimate - truth) < 0.3


def test_multi_response_methods():
    """Multi-response fits return p x m estimates."""
    rng = np.random.default_rng(2)
    X = rng.standard_normal((300, 6))
    truth = np.zeros((6, 2))
    truth[:2] = [[1.0, -1.0], [0.5, 2.0]]
    data = MultiResponseDataset(X, X @ truth + 0.05 * rng.standard_normal((300, 2)))
    spec = _spec(model=ModelKind.MULTI, truth=TruthKind.ROW_SPARSE, m=2)
    model = get_model(ModelKind.MULTI)
    registry = MethodRegistry()
    for name in ("right", "lasso"):
        estimate = registry.fit(name, data, spec, model, RngStream(0))
        assert estimate.shape == (6, 2)
        assert np.linalg.norm(estimate - truth) < 0.3, name
    dantzig_start = registry.fit("right", data, replace(spec, init="dantzig"), model, RngStream(0))
    assert dantzig_start.shape == (6, 2)


def test_tuned_blocks_with_shuffled_partitions():
    """Block tuning over shuffled partitions runs inside a RIGHT fit."""
    data, truth = _linear_data()
    spec = _spec(tune_blocks=True, partition_mode=PartitionMode.SHUFFLE,
                 block_rule=BlockRule.LOG_P_LOG_N_OVER_LOG_P)
    model = get_model(ModelKind.LINEAR)
    K = block_count_for(data, spec, model, RightConfig(s=2, partition_mode=PartitionMode.SHUFFLE), RngStream(1))
    assert 1 <= K <= data.n
    registry = MethodRegistry()
    first = registry.fit("right", data, spec, model, RngStream(0))
    second = registry.fit("right", data, spec, model, RngStream(0))
    assert np.array_equal(first, second)
    assert np.linalg.norm(first - truth) < 0.3


def test_iht_honors_the_dantzig_start():
    """With no iterations IHT returns its starting point: zero or the Dantzig estimate."""
    data, _ = _linear_data(seed=3)
    model = get_model(ModelKind.LINEAR)
    registry = MethodRegistry()
    np.testing.assert_array_equal(registry.fit("iht", data, _spec(iterations=0), model, RngStream(0)), np.zeros(6))
    started = registry.fit("iht", data, _spec(iterations=0, init="dantzig"), model, RngStream(0))
    np.testing.assert_array_equal(started, dantzig_init(data, DantzigConfig()))
