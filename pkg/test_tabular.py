"""
Tests for CSV ingestion, robust standardization and the held-out evaluation.
"""
import numpy as np
import pytest

from components import ModelKind
from errors import DataError, DivergenceError, InvalidParameterError
from method_registry import get_registry
from reporting import format_metrics_table
from tabular import (TabularDataset, eval_real, evaluation_spec, inverse_standardize, load_csv,
                     robust_standardize, split_rows, tail_diagnostics, write_csv)


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _synthetic(n=120, p=8, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    y = 3.0 * X[:, 0] - 2.0 * X[:, 2] + 0.1 * rng.standard_normal(n)
    return TabularDataset(X, y, tuple(f"x{j}" for j in range(p)), "y")


def test_load_csv_with_header(tmp_path):
    """The response column is split off; every other column is a feature."""
    ds = load_csv(_write(tmp_path, "a,y,b\n1,10,2\n3,30,4\n"), "y")
    assert ds.feature_names == ("a", "b")
    np.testing.assert_array_equal(ds.features, [[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(ds.response, [10.0, 30.0])
    assert ds.dropped_rows == 0


def test_load_csv_without_header(tmp_path):
    """Columns are addressed by position."""
    ds = load_csv(_write(tmp_path, "1,2,3\n4,5,6\n"), 0, has_header=False)
    np.testing.assert_array_equal(ds.response, [1.0, 4.0])
    np.testing.assert_array_equal(ds.features, [[2.0, 3.0], [5.0, 6.0]])


def test_load_csv_drops_bad_rows(tmp_path):
    """Rows with missing or non-numeric cells are dropped and counted."""
    ds = load_csv(_write(tmp_path, "a,y\n1,2\nfoo,3\n,4\n5,6\n"), "y")
    assert ds.n == 2
    assert ds.dropped_rows == 2
    np.testing.assert_array_equal(ds.response, [2.0, 6.0])


def test_load_csv_errors(tmp_path):
    """Missing files, empty files, unknown responses and all-bad rows are data errors."""
    with pytest.raises(DataError):
        load_csv(str(tmp_path / "missing.csv"), "y")
    with pytest.raises(DataError):
        load_csv(_write(tmp_path, "", "empty.csv"), "y")
    with pytest.raises(DataError):
        load_csv(_write(tmp_path, "a,b\n1,2\n", "noy.csv"), "y")
    with pytest.raises(DataError):
        load_csv(_write(tmp_path, "a,y\nx,z\n", "bad.csv"), "y")


def test_write_csv_reload_is_exact(tmp_path):
    """17 significant digits reproduce every double."""
    ds = _synthetic(n=10, p=3)
    path = str(tmp_path / "copy.csv")
    write_csv(ds, path)
    again = load_csv(path, "y")
    np.testing.assert_array_equal(again.features, ds.features)
    np.testing.assert_array_equal(again.response, ds.response)


def test_robust_standardize():
    """Median zero and unit MAD per kept column; zero-MAD columns are dropped."""
    ds = _synthetic(n=51, p=4)
    features = ds.features.copy()
    features[:, 1] = 7.0
    ds = TabularDataset(features, ds.response, ds.feature_names, "y")
    standardized = robust_standardize(ds)
    assert standardized.feature_names == ("x0", "x2", "x3")
    assert standardized.standardization.kept_columns == (0, 2, 3)
    np.testing.assert_allclose(np.median(standardized.features, axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(np.median(np.abs(standardized.features), axis=0), 1.0, atol=1e-12)
    assert np.median(standardized.response) == pytest.approx(0.0)
    original_x, original_y = inverse_standardize(standardized)
    np.testing.assert_allclose(original_x, features[:, [0, 2, 3]], atol=1e-12)
    np.testing.assert_allclose(original_y, ds.response, atol=1e-12)
    with pytest.raises(InvalidParameterError):
        inverse_standardize(ds)
    with pytest.raises(DataError):
        robust_standardize(TabularDataset(np.ones((5, 2)), np.arange(5.0), ("a", "b"), "y"))


def test_robust_standardize_examples():
    """(1, 2, 3) has median 2 and MAD 1; a standardized column is a fixed point."""
    ds = TabularDataset(np.array([[1.0, -1.0], [2.0, 0.0], [3.0, 1.0]]), np.array([5.0, 6.0, 9.0]), ("a", "b"), "y")
    standardized = robust_standardize(ds)
    np.testing.assert_array_equal(standardized.features[:, 0], [-1.0, 0.0, 1.0])
    np.testing.assert_allclose(standardized.features[:, 1], ds.features[:, 1], atol=1e-12)
    np.testing.assert_array_equal(standardized.response, [-1.0, 0.0, 3.0])


def test_split_rows():
    """Seeded, disjoint, covering, and different across repeats."""
    train, test = split_rows(50, 0.8, seed=1)
    assert len(train) == 40 and len(test) == 10
    assert sorted(np.concatenate([train, test]).tolist()) == list(range(50))
    again, _ = split_rows(50, 0.8, seed=1)
    np.testing.assert_array_equal(train, again)
    other, _ = split_rows(50, 0.8, seed=1, repeat=1)
    assert not np.array_equal(train, other)
    with pytest.raises(InvalidParameterError):
        split_rows(50, 1.0, seed=1)
    with pytest.raises(DataError):
        split_rows(2, 0.1, seed=1)


def test_tail_diagnostics():
    """Heavy-tailed columns show up in the kurtosis summary."""
    ds = _synthetic(n=2000, p=3, seed=3)
    features = ds.features.copy()
    features[:, 0] = np.random.default_rng(4).standard_t(3.0, 2000)
    diagnostics = tail_diagnostics(TabularDataset(features, ds.response, ds.feature_names, "y"))
    assert diagnostics["feature_kurtosis"]["max"] > 1.0
    assert 0.0 <= diagnostics["feature_kurtosis"]["share_above_3"] <= 1.0
    assert np.isfinite(diagnostics["response_kurtosis"])


def test_evaluation_spec():
    """Real-data settings: one sample size, sparsity capped at p."""
    ds = _synthetic(n=120, p=8)
    spec = evaluation_spec(ds, sparsity=20, methods=("right", "lasso"))
    assert spec.n_grid == (120,)
    assert spec.p == 8 and spec.s == 8
    assert spec.step_size == 0.01 and spec.iht_step_size == 0.001
    assert spec.methods == ("right", "lasso")


def test_eval_real(clean_world):
    """Every method gets a row; repeats add standard deviations; RIGHT residual quantiles are kept."""
    ds = _synthetic(n=200, p=8, seed=5)
    spec = evaluation_spec(ds, sparsity=2, methods=("right", "lasso"), step_size=0.1, iterations=150)
    report = eval_real(ds, split=0.8, methods=("right", "lasso"), seed=0, repeats=1, spec=spec)
    assert [row["method"] for row in report.rows] == ["right", "lasso"]
    assert all(row["mape"] < 0.5 and row["mse"] < 0.5 for row in report.rows)
    assert "sd_mape" not in report.rows[0]
    assert set(report.diagnostics["residual_quantiles"]) == {0.05, 0.25, 0.5, 0.75, 0.95}
    repeated = eval_real(ds, split=0.8, methods=("lasso",), seed=0, repeats=3)
    assert len(repeated.splits) == 3
    assert "sd_mape" in repeated.rows[0]
    with pytest.raises(InvalidParameterError):
        eval_real(ds, repeats=0)


def test_eval_real_counts_failed_splits(clean_world):
    """A method that fails on one split is scored on the others, with finite spreads and a failure count."""
    calls = []

    def flaky(data, spec, model, rng):
        calls.append(data.n)
        if len(calls) == 2:
            raise DivergenceError(3, solver="flaky")
        return np.zeros(data.p)

    get_registry().register("flaky", flaky, {ModelKind.LINEAR})
    ds = _synthetic(n=100, p=4, seed=6)
    report = eval_real(ds, split=0.8, methods=("flaky",), seed=0, repeats=4)
    row = report.rows[0]
    assert row["failures"] == 1
    assert np.isfinite(row["mape"]) and np.isfinite(row["sd_mape"]) and np.isfinite(row["sd_mse"])
    kept = [split for i, split in enumerate(report.splits) if i != 1]
    expected = np.mean([np.mean(np.abs(ds.response[test])) for _, test in kept])
    assert row["mape"] == pytest.approx(expected)
    assert "[1 failed]" in format_metrics_table(report.rows)


def test_eval_real_with_every_split_failing(clean_world):
    """No successful split leaves infinite metrics and no spread."""
    def broken(data, spec, model, rng):
        raise DivergenceError(1, solver="broken")

    get_registry().register("broken", broken, {ModelKind.LINEAR})
    row = eval_real(_synthetic(n=60, p=3), methods=("broken",), repeats=2).rows[0]
    assert row["failures"] == 2 and row["mape"] == np.inf and "sd_mape" not in row
