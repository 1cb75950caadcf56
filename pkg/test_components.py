"""
Tests for component and dataset types.
"""
import numpy as np
import pytest

from components import (Dataset, DistributionKind, DistributionSpec, HarnessState, MultiResponseDataset,
                        TailSetting, TrialRecord, TrialSetup)
from errors import DimensionMismatchError, InvalidParameterError, NonFiniteValueError


def test_dataset_creation():
    """Dataset stores float64 arrays and reports its shape."""
    ds = Dataset([[1, 2, 3], [4, 5, 6]], [1, 0])
    assert ds.n == 2
    assert ds.p == 3
    assert ds.features.dtype == np.float64
    assert ds.features.flags["C_CONTIGUOUS"]
    np.testing.assert_array_equal(ds.response, [1.0, 0.0])


def test_dataset_validation():
    """Mismatched lengths, wrong ranks and non-finite cells are rejected."""
    with pytest.raises(DimensionMismatchError):
        Dataset(np.zeros((3, 2)), np.zeros(2))
    with pytest.raises(DimensionMismatchError):
        Dataset(np.zeros(3), np.zeros(3))
    with pytest.raises(NonFiniteValueError):
        Dataset([[1.0, np.nan]], [1.0])
    with pytest.raises(NonFiniteValueError):
        Dataset([[1.0, 2.0]], [np.inf])


def test_dataset_subset():
    """Subsets keep row pairing."""
    ds = Dataset(np.arange(12.0).reshape(4, 3), [10.0, 11.0, 12.0, 13.0])
    sub = ds.subset([3, 1])
    np.testing.assert_array_equal(sub.features, [[9.0, 10.0, 11.0], [3.0, 4.0, 5.0]])
    np.testing.assert_array_equal(sub.response, [13.0, 11.0])


def test_multi_response_dataset():
    """Columns become single-response datasets sharing the design."""
    X = np.arange(6.0).reshape(3, 2)
    Y = np.array([[1.0, -1.0], [2.0, -2.0], [3.0, -3.0]])
    ds = MultiResponseDataset(X, Y)
    assert (ds.n, ds.p, ds.m) == (3, 2, 2)
    column = ds.column(1)
    assert isinstance(column, Dataset)
    np.testing.assert_array_equal(column.response, [-1.0, -2.0, -3.0])
    np.testing.assert_array_equal(column.features, X)
    with pytest.raises(DimensionMismatchError):
        MultiResponseDataset(X, np.ones(3))


def test_distribution_spec_validation():
    """t families need positive dof; probabilities and scales are range-checked."""
    assert DistributionSpec().kind == DistributionKind.GAUSSIAN
    with pytest.raises(InvalidParameterError):
        DistributionSpec(kind=DistributionKind.STUDENT_T)
    with pytest.raises(InvalidParameterError):
        DistributionSpec(kind=DistributionKind.MULTIVARIATE_T, nu=0.0)
    with pytest.raises(InvalidParameterError):
        DistributionSpec(kind=DistributionKind.TWO_POINT_MIXTURE, alpha=1.5)
    with pytest.raises(InvalidParameterError):
        DistributionSpec(scale=0.0)


def test_trial_types():
    """Records default to not diverged; setups and state carry their fields."""
    record = TrialRecord(experiment="rate", method="right", tail_param=0.45, n=300, trial=2, seed=0,
                         error=0.1, wall_ms=1.0)
    assert record.diverged is False
    assert record.checksum == ""
    setup = TrialSetup(experiment="rate", setting_index=0, tail_param=0.45, nu=1.5, n=300, trial=2, seed=0)
    assert setup.trial == 2
    setting = TailSetting(nu=1.5, index=0.45)
    assert setting.index == 0.45
    state = HarnessState(scenario=None, batch_size=4)
    assert state.completed == 0 and state.threads == 1
