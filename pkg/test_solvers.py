"""
Tests for RIGHT/IHT, the convergence constants and the curvature/stability probes.
"""
import itertools
import math

import numpy as np
import pytest

from components import Dataset, ModelKind, MultiResponseDataset, OracleKind
from errors import DimensionMismatchError, DivergenceError, InvalidParameterError
from models import get_model
from samplers import RngStream
from solvers import (BlockRule, RightConfig, iht_solve, linear_population_gradient, probe_srcg,
                     probe_srs, right_solve, suggested_block_count, suggested_iterations,
                     theorem1_constants, tune_block_count)

LINEAR = get_model(ModelKind.LINEAR)


def noiseless_instance(n=200, p=50, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    truth = np.zeros(p)
    truth[[3, 17, 41]] = (2.0, -2.0, 2.0)
    return Dataset(X, X @ truth), truth


def noisy_instance(n=300, p=30, seed=1):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    truth = np.zeros(p)
    truth[:4] = (1.5, -1.0, 2.0, -2.5)
    return Dataset(X, X @ truth + 0.5 * rng.standard_normal(n)), truth


def test_config_validation():
    """s >= 1, eta > 0, T >= 0, K >= 1."""
    with pytest.raises(InvalidParameterError):
        RightConfig(s=0)
    with pytest.raises(InvalidParameterError):
        RightConfig(s=1, step_size=0.0)
    with pytest.raises(InvalidParameterError):
        RightConfig(s=1, iterations=-1)
    with pytest.raises(InvalidParameterError):
        RightConfig(s=1, blocks=0)


def test_exact_recovery_noiseless():
    """Gaussian design, zero noise: RIGHT lands on theta* to 1e-6."""
    data, truth = noiseless_instance()
    cfg = RightConfig(s=3, step_size=0.5, iterations=300, blocks=3)
    result = right_solve(LINEAR, data, cfg, truth=truth)
    assert np.linalg.norm(result.estimate - truth) < 1e-6
    assert result.iterations == 300 and result.oracle_kind == OracleKind.MOM


def test_linear_convergence_signature():
    """The error contracts geometrically until it reaches 1e-8."""
    data, truth = noiseless_instance(seed=3)
    cfg = RightConfig(s=3, step_size=0.5, iterations=200, blocks=3)
    errors = right_solve(LINEAR, data, cfg, truth=truth).per_iteration_error
    assert len(errors) == 201
    window = 5
    for t in range(len(errors) - window):
        if errors[t + window] < 1e-8:
            break
        assert math.log(errors[t + window]) <= math.log(errors[t]) - window * math.log(1 / 0.99)


def test_zero_iterations_returns_init():
    """T = 0 gives back the start point untouched."""
    data, _ = noiseless_instance()
    init = np.linspace(-1, 1, 50)
    result = right_solve(LINEAR, data, RightConfig(s=3, iterations=0, init=init))
    assert np.array_equal(result.estimate, init)
    assert result.iterations == 0
    with pytest.raises(DimensionMismatchError):
        right_solve(LINEAR, data, RightConfig(s=3, iterations=1, init=np.zeros(4)))


def test_iterates_stay_sparse():
    """Every recorded iterate after the first step has at most s non-zeros."""
    data, truth = noisy_instance()
    cfg = RightConfig(s=6, step_size=0.1, iterations=30, blocks=5, record_trajectory=True)
    result = right_solve(LINEAR, data, cfg, truth=truth)
    assert len(result.trajectory) == 31
    assert all(np.count_nonzero(theta) <= 6 for theta in result.trajectory[1:])


def test_mean_oracle_is_iht():
    """right_solve with the mean oracle equals iht_solve bit for bit, whatever K says."""
    data, truth = noisy_instance()
    cfg = RightConfig(s=6, step_size=0.05, iterations=50, blocks=7)
    iht = iht_solve(LINEAR, data, cfg)
    right_mean = right_solve(LINEAR, data, RightConfig(s=6, step_size=0.05, iterations=50, blocks=2,
                                                       oracle_kind=OracleKind.MEAN))
    assert np.array_equal(iht.estimate, right_mean.estimate)
    assert iht.oracle_kind == OracleKind.MEAN


def test_zero_design_stops_after_one_step():
    """With X = 0 every gradient vanishes, so iterates sit at P_s(init)."""
    data = Dataset(np.zeros((20, 5)), np.ones(20))
    init = np.array([5.0, -4.0, 3.0, 2.0, 1.0])
    result = iht_solve(LINEAR, data, RightConfig(s=2, iterations=10, init=init, record_trajectory=True))
    np.testing.assert_array_equal(result.trajectory[1], [5.0, -4.0, 0.0, 0.0, 0.0])
    np.testing.assert_array_equal(result.estimate, result.trajectory[1])


def test_divergence_carries_iteration():
    """An oversized step blows up and the error names the iteration."""
    data, _ = noisy_instance()
    with pytest.raises(DivergenceError) as info:
        iht_solve(LINEAR, data, RightConfig(s=6, step_size=100.0, iterations=200))
    assert 1 <= info.value.iteration <= 200
    assert info.value.solver == "mean"


def test_single_response_matrix_matches_vector_path():
    """A p x 1 multi-response run reproduces the linear run bit for bit."""
    data, truth = noisy_instance()
    multi = MultiResponseDataset(data.features, data.response[:, None])
    cfg = RightConfig(s=5, step_size=0.1, iterations=40, blocks=4)
    vector = right_solve(LINEAR, data, cfg).estimate
    matrix = right_solve(get_model(ModelKind.MULTI), multi, cfg).estimate
    assert matrix.shape == (30, 1)
    assert np.array_equal(matrix[:, 0], vector)


def test_shuffled_partition_is_reproducible():
    """Seeded shuffles give identical runs."""
    from components import PartitionMode
    data, _ = noisy_instance()
    cfg = RightConfig(s=6, step_size=0.1, iterations=20, blocks=5, partition_mode=PartitionMode.SHUFFLE)
    first = right_solve(LINEAR, data, cfg, rng=RngStream(3)).estimate
    second = right_solve(LINEAR, data, cfg, rng=RngStream(3)).estimate
    assert np.array_equal(first, second)


def test_theorem1_constants_values():
    """Hand-evaluated constants for a = 0.25, b = 0.5, eta0 = 1."""
    c = theorem1_constants(0.25, 0.5, 1.0)
    assert c.phi_var == pytest.approx(0.70711, abs=1e-5)
    assert c.c1 == pytest.approx(0.92678, abs=1e-5)
    assert c.c2 == pytest.approx(8.24264, abs=1e-4)
    assert c.c0 == pytest.approx(20.1437, abs=1e-3)
    assert c.step_size == pytest.approx(0.5)
    assert c.stability_threshold() == pytest.approx(1 / 8.24264, rel=1e-5)
    assert c.admits(0.1) and not c.admits(0.2)
    assert c.min_sparsity(5) == 101


def test_theorem1_constants_limits_and_errors():
    """eta0 -> 0 removes contraction; 4 a b eta0 >= 1 is rejected."""
    near_zero = theorem1_constants(0.5, 0.5, 1e-9)
    assert near_zero.phi_var == pytest.approx(1.0, abs=1e-6)
    assert near_zero.c1 == pytest.approx(1.0, abs=1e-6) and near_zero.c1 < 1.0
    with pytest.raises(InvalidParameterError):
        theorem1_constants(0.5, 0.5, 1.0)
    with pytest.raises(InvalidParameterError):
        theorem1_constants(1.0, 0.5, 0.5)
    with pytest.raises(InvalidParameterError):
        theorem1_constants(0.25, 0.5, 0.0)
    rng = np.random.default_rng(0)
    for _ in range(200):
        a = float(rng.uniform(0.05, 5.0))
        b = float(rng.uniform(1e-3, 1.0)) / (4 * a)
        eta0 = float(rng.uniform(1e-3, 1.0))
        if 4 * a * b * eta0 >= 1.0:
            continue
        c = theorem1_constants(a, b, eta0)
        assert 0.75 < c.c1 < 1.0
        assert c.c0 > 1.0


def test_suggested_hyperparameters():
    """T = ceil(ln(n / ln p)); K from either log recipe, clamped to [1, n]."""
    assert suggested_iterations(8000, 200) == 8
    assert suggested_iterations(8000, 200, c=2.0) == 15
    assert suggested_block_count(8000, 200) == 7
    assert suggested_block_count(8000, 200, c=0.5) == 4
    assert suggested_block_count(8000, 200, BlockRule.LOG_P_LOG_N_OVER_LOG_P) == 7
    assert suggested_block_count(3, 200) == 3
    assert suggested_block_count(100, 1, c=0.01) == 1


def test_tune_block_count_returns_candidate():
    """The tuned K is one of the multiplier candidates for the full sample."""
    data, _ = noisy_instance()
    cfg = RightConfig(s=6, step_size=0.1, iterations=30)
    K = tune_block_count(LINEAR, data, cfg)
    candidates = {suggested_block_count(300, 30, BlockRule.LOG_P_LOG_N_OVER_LOG_P, c) for c in (0.5, 1.0, 2.0)}
    assert K in candidates


def test_probe_srcg_identity_and_diagonal():
    """Known spectra give known curvature parameters."""
    identity = probe_srcg(np.eye(6), 1, 1, exhaustive=True)
    assert identity.kappa_minus == pytest.approx(1.0)
    assert identity.kappa_plus == pytest.approx(1.0)
    assert identity.a_hat == pytest.approx(0.5) and identity.b_hat == pytest.approx(0.5)
    diag = probe_srcg(np.diag([1.0, 4.0]), 1, 0, exhaustive=True)
    assert diag.kappa_minus == pytest.approx(1.0, abs=1e-8)
    assert diag.kappa_plus == pytest.approx(4.0, abs=1e-8)
    assert diag.a_hat == pytest.approx(1 / 32, abs=1e-9)


def test_probe_srcg_matches_exhaustive_eigendecomposition():
    """Power iterations agree with eigvalsh on every 4-subset of a random SPD matrix."""
    rng = np.random.default_rng(5)
    B = rng.standard_normal((8, 8))
    sigma = B @ B.T / 8 + 0.5 * np.eye(8)
    probe = probe_srcg(sigma, 1, 1, exhaustive=True)
    spectra = [np.linalg.eigvalsh(sigma[np.ix_(S, S)]) for S in itertools.combinations(range(8), 4)]
    assert probe.supports_checked == 70
    assert probe.kappa_minus == pytest.approx(min(e[0] for e in spectra), abs=1e-8)
    assert probe.kappa_plus == pytest.approx(max(e[-1] for e in spectra), abs=1e-8)
    assert (probe.kappa_minus / probe.kappa_plus) ** 2 <= 1.0
    assert probe.a_hat * probe.b_hat <= 0.25


def test_probe_srcg_sampling_and_errors():
    """Sampled supports need a stream; Sigma must be symmetric."""
    sampled = probe_srcg(np.eye(10), 1, 1, n_supports=5, rng=RngStream(0))
    assert sampled.supports_checked == 5
    with pytest.raises(InvalidParameterError):
        probe_srcg(np.eye(10), 1, 1)
    with pytest.raises(InvalidParameterError):
        probe_srcg(np.array([[1.0, 0.5], [0.0, 1.0]]), 1, 0, exhaustive=True)
    with pytest.raises(DimensionMismatchError):
        probe_srcg(np.ones((2, 3)), 1, 0, exhaustive=True)


def test_probe_srs():
    """Zero deviation at theta*; a single probe gives (0, deviation); no probes is an error."""
    data, truth = noiseless_instance()
    population = linear_population_gradient(np.eye(50), truth)
    at_truth = probe_srs(LINEAR, data, [truth, truth], 3, 3, 3, truth, population)
    assert at_truth.gamma_add == pytest.approx(0.0, abs=1e-10)
    assert at_truth.probe_count == 2
    single = probe_srs(LINEAR, data, [np.zeros(50)], 3, 3, 3, truth, population)
    assert single.phi_mult == 0.0 and single.gamma_add > 0.0
    with pytest.raises(InvalidParameterError):
        probe_srs(LINEAR, data, [], 3, 3, 3, truth, population)


def test_probe_srs_envelope_dominates_probes():
    """The fitted line sits above every probe's deviation."""
    data, truth = noisy_instance(n=400, p=30)
    population = linear_population_gradient(np.eye(30), truth)
    rng = np.random.default_rng(2)
    probes = [truth + r * rng.standard_normal(30) for r in (0.1, 0.5, 1.0, 2.0)]
    estimate = probe_srs(LINEAR, data, probes, 5, 4, 4, truth, population)
    assert estimate.phi_mult >= 0.0 and estimate.gamma_add >= 0.0
    from mom import MedianOfMeansOracle, partition
    from linalg import hard_threshold
    oracle = MedianOfMeansOracle(LINEAR, data, partition(400, 5))
    for theta in probes:
        deviation = np.linalg.norm(hard_threshold(oracle(theta).value - population(theta), 12))
        bound = estimate.phi_mult * np.linalg.norm(theta - truth) + estimate.gamma_add
        assert deviation <= bound + 1e-9


def test_tune_block_count_with_shuffled_partitions():
    """Tuning over shuffled partitions draws from the given stream and is reproducible."""
    from components import PartitionMode
    data, _ = noisy_instance()
    cfg = RightConfig(s=6, step_size=0.1, iterations=20, partition_mode=PartitionMode.SHUFFLE)
    first = tune_block_count(LINEAR, data, cfg, rng=RngStream(4))
    assert first == tune_block_count(LINEAR, data, cfg, rng=RngStream(4))
    candidates = {suggested_block_count(300, 30, BlockRule.LOG_P_LOG_N_OVER_LOG_P, c) for c in (0.5, 1.0, 2.0)}
    assert first in candidates
    with pytest.raises(InvalidParameterError):
        tune_block_count(LINEAR, data, cfg)
