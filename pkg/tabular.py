"""
Tabular data ingestion, robust standardization (median / MAD) and the
held-out evaluation workflow for real datasets.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats

from components import Dataset, ExperimentKind, ModelKind
from errors import DataError, DivergenceError, InvalidParameterError, LinearProgramError
from method_registry import get_registry
from models import get_model
from samplers import RngStream
from scenarios import ExperimentSpec
from serialization import atomic_write_text

logger = logging.getLogger(__name__)

DEFAULT_METHODS = ("right", "iht", "lasso", "huber", "shrinkage")
RESIDUAL_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass(frozen=True)
class Standardization:
    """Per-column medians and MADs (raw, no consistency factor) and the response median."""
    feature_medians: np.ndarray
    feature_mads: np.ndarray
    response_median: float
    kept_columns: Tuple[int, ...]  # positions in the original feature matrix


@dataclass(frozen=True)
class TabularDataset:
    features: np.ndarray
    response: np.ndarray
    feature_names: Tuple[str, ...]
    response_name: str
    standardization: Optional[Standardization] = None
    dropped_rows: int = 0

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def as_dataset(self) -> Dataset:
        return Dataset(self.features, self.response)


def _to_float(cell) -> float:
    try:
        return float(cell)
    except (TypeError, ValueError):
        return np.nan


def load_csv(path: str, response_column: Union[str, int], has_header: bool = True) -> TabularDataset:
    """
    Read a numeric CSV. Rows with a non-numeric or missing cell are dropped
    and counted.

    Args:
        path: CSV file
        response_column: column name (or position when there is no header)
        has_header: whether the first line holds column names

    Returns:
        TabularDataset with every other column as a feature

    Raises:
        DataError: unreadable file, missing response column or no usable rows
    """
    try:
        frame = pd.read_csv(path, header=0 if has_header else None, float_precision="round_trip")
    except pd.errors.EmptyDataError as exc:
        raise DataError(f"{path} is empty") from exc
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    frame.columns = [str(c) for c in frame.columns]
    response_name = str(response_column)
    if response_name not in frame.columns:
        raise DataError(f"{path}: response column '{response_name}' not found")
    for column in frame.columns:
        if not pd.api.types.is_numeric_dtype(frame[column]):
            frame[column] = frame[column].map(_to_float)
    total = len(frame)
    frame = frame.dropna(axis=0, how="any")
    dropped = total - len(frame)
    if dropped:
        logger.warning("[DATA] %s: dropped %d row(s) with non-numeric or missing cells", path, dropped)
    if len(frame) == 0:
        raise DataError(f"{path}: no usable rows")
    feature_names = tuple(c for c in frame.columns if c != response_name)
    features = frame[list(feature_names)].to_numpy(dtype=np.float64)
    response = frame[response_name].to_numpy(dtype=np.float64)
    return TabularDataset(np.ascontiguousarray(features), response, feature_names, response_name,
                          dropped_rows=dropped)


def write_csv(ds: TabularDataset, path: str):
    """Write features and response with 17 significant digits so a reload is exact."""
    frame = pd.DataFrame(ds.features, columns=list(ds.feature_names))
    frame[ds.response_name] = ds.response
    atomic_write_text(path, frame.to_csv(index=False, float_format="%.17g", lineterminator="\n"))


def robust_standardize(ds: TabularDataset) -> TabularDataset:
    """
    x_ij <- (x_ij - median_j) / MAD_j and y <- y - median(y). Columns with
    zero MAD are dropped.
    """
    medians = np.median(ds.features, axis=0)
    mads = np.median(np.abs(ds.features - medians), axis=0)
    kept = np.flatnonzero(mads > 0)
    if kept.size == 0:
        raise DataError("every feature column has zero MAD")
    if kept.size < ds.p:
        dropped = [ds.feature_names[j] for j in range(ds.p) if mads[j] == 0]
        logger.warning("[DATA] dropped %d zero-MAD column(s): %s", len(dropped), ", ".join(dropped[:10]))
    features = (ds.features[:, kept] - medians[kept]) / mads[kept]
    response_median = float(np.median(ds.response))
    record = Standardization(medians[kept], mads[kept], response_median, tuple(int(j) for j in kept))
    return replace(ds, features=np.ascontiguousarray(features), response=ds.response - response_median,
                   feature_names=tuple(ds.feature_names[j] for j in kept), standardization=record)


def inverse_standardize(ds: TabularDataset) -> Tuple[np.ndarray, np.ndarray]:
    """Original (kept) features and response from a standardized dataset."""
    record = ds.standardization
    if record is None:
        raise InvalidParameterError("dataset carries no standardization record")
    features = ds.features * record.feature_mads + record.feature_medians
    return features, ds.response + record.response_median


def tail_diagnostics(ds: TabularDataset) -> Dict:
    """Excess kurtosis of features and response."""
    kurt = stats.kurtosis(ds.features, axis=0, fisher=True)
    kurt = kurt[np.isfinite(kurt)]
    summary = {"response_kurtosis": float(stats.kurtosis(ds.response, fisher=True))}
    if kurt.size:
        summary["feature_kurtosis"] = {"median": float(np.median(kurt)), "max": float(np.max(kurt)),
                                       "share_above_3": float(np.mean(kurt > 3.0))}
    return summary


def split_rows(n: int, fraction: float, seed: int, repeat: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Seeded disjoint (train, test) rows covering 0..n-1."""
    if not 0.0 < fraction < 1.0:
        raise InvalidParameterError(f"split fraction must lie in (0, 1), got {fraction}")
    n_train = int(round(fraction * n))
    if n_train == 0 or n_train == n:
        raise DataError(f"a {fraction} split of {n} rows leaves an empty train or test set")
    order = RngStream(seed, repeat).generator.permutation(n)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def evaluation_spec(ds: TabularDataset, sparsity: int = 10, methods: Sequence[str] = DEFAULT_METHODS,
                    seed: int = 0, **overrides) -> ExperimentSpec:
    """Method settings for real data (appendix tuning: eta 0.01 for RIGHT, 0.001 for IHT)."""
    s = max(1, min(sparsity, ds.p))
    settings = dict(name="eval-real", kind=ExperimentKind.COMPARISON, model=ModelKind.LINEAR,
                    n_grid=(ds.n,), p=ds.p, s_star=max(1, s // 2), sparsity=s, methods=tuple(methods),
                    step_size=0.01, iht_step_size=0.001, seed=seed)
    settings.update(overrides)
    return ExperimentSpec(**settings)


@dataclass
class EvaluationReport:
    rows: List[Dict]  # method, failures, mape, mse (sd_mape, sd_mse with repeats)
    splits: List[Tuple[np.ndarray, np.ndarray]]
    diagnostics: Dict


def eval_real(ds: TabularDataset, split: float = 0.8, methods: Sequence[str] = DEFAULT_METHODS,
              seed: int = 0, repeats: int = 1, spec: Optional[ExperimentSpec] = None) -> EvaluationReport:
    """
    Fit each method on a seeded train split and report test MAPE (mean
    absolute prediction error) and MSE; repeats > 1 averages over
    independent random splits. Splits where a method fails are counted in
    its failures and left out of its means and standard deviations.
    """
    if repeats < 1:
        raise InvalidParameterError(f"repeats must be >= 1, got {repeats}")
    registry = get_registry()
    model = get_model(ModelKind.LINEAR)
    full = ds.as_dataset()
    spec = spec or evaluation_spec(ds, methods=methods, seed=seed)
    scores: Dict[str, List[Tuple[float, float]]] = {m: [] for m in methods}
    failures = {m: 0 for m in methods}
    splits = []
    diagnostics = tail_diagnostics(ds)
    for r in range(repeats):
        train, test = split_rows(ds.n, split, seed, r)
        splits.append((train, test))
        train_data, test_data = full.subset(train), full.subset(test)
        for method in methods:
            try:
                theta = registry.fit(method, train_data, spec, model, RngStream(seed, r).fork(1))
            except (DivergenceError, LinearProgramError) as exc:
                logger.warning("[DATA] %s failed on split %d: %s", method, r, exc)
                failures[method] += 1
                continue
            residual = test_data.response - test_data.features @ theta
            scores[method].append((float(np.mean(np.abs(residual))), float(np.mean(residual ** 2))))
            if method == "right" and r == 0:
                diagnostics["residual_quantiles"] = {
                    q: float(v) for q, v in zip(RESIDUAL_QUANTILES, np.quantile(residual, RESIDUAL_QUANTILES))}
    rows = []
    for method in methods:
        values = np.array(scores[method]).reshape(-1, 2)
        row = {"method": method, "failures": failures[method]}
        if len(values):
            row.update(mape=float(values[:, 0].mean()), mse=float(values[:, 1].mean()))
        else:
            row.update(mape=math.inf, mse=math.inf)
        if repeats > 1 and len(values) > 1:
            row["sd_mape"] = float(values[:, 0].std(ddof=1))
            row["sd_mse"] = float(values[:, 1].std(ddof=1))
        rows.append(row)
    return EvaluationReport(rows=rows, splits=splits, diagnostics=diagnostics)
