"""
Serialization of experiment outputs: the per-trial CSV (with a schema header
line) and the JSON summary of slope fits and error curves. Every file is
written to a temporary name and renamed into place.
"""
import dataclasses
import json
import logging
import os
import tempfile
from enum import Enum
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from components import TrialRecord
from errors import DataError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TRIAL_SCHEMA = f"# schema: trial-records v{SCHEMA_VERSION}"
TRIAL_COLUMNS = ["experiment", "method", "tail_param", "n", "trial", "seed", "error", "wall_ms",
                 "diverged", "checksum"]


def to_jsonable(value: Any) -> Any:
    """
    Convert dataclasses, Enums, numpy values and tuples into JSON-ready data.
    Enum values are stored by their value.
    """
    if isinstance(value, Enum):
        return value.value
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(to_jsonable(k)): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return value


def atomic_write_text(path: str, text: str):
    """Write text to path via a temporary file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, temp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(temp, path)
    except BaseException:
        if os.path.exists(temp):
            os.remove(temp)
        raise


def records_frame(records: List[TrialRecord]) -> pd.DataFrame:
    return pd.DataFrame([dataclasses.asdict(r) for r in records], columns=TRIAL_COLUMNS)


def write_trial_csv(records: List[TrialRecord], path: str):
    """
    Save trial records as CSV, one row per (method, n, trial).

    Args:
        records: records in harness order
        path: output file
    """
    body = records_frame(records).to_csv(index=False, float_format="%.17g", lineterminator="\n")
    atomic_write_text(path, TRIAL_SCHEMA + "\n" + body)
    logger.info("[EXPERIMENT] trial records saved to: %s", path)


def load_trial_csv(path: str) -> List[TrialRecord]:
    """Read a trial CSV written by write_trial_csv."""
    try:
        with open(path) as f:
            header = f.readline().rstrip("\n")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if header != TRIAL_SCHEMA:
        raise DataError(f"{path}: expected '{TRIAL_SCHEMA}', found '{header}'")
    frame = pd.read_csv(path, skiprows=1, dtype={"checksum": str, "experiment": str, "method": str},
                        keep_default_na=False)
    missing = [c for c in TRIAL_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing columns {missing}")
    records = []
    for row in frame.itertuples(index=False):
        records.append(TrialRecord(
            experiment=row.experiment, method=row.method, tail_param=float(row.tail_param),
            n=int(row.n), trial=int(row.trial), seed=int(row.seed), error=float(row.error),
            wall_ms=float(row.wall_ms), diverged=str(row.diverged) == "True", checksum=row.checksum))
    return records


def experiment_summary(result) -> Dict[str, Any]:
    """JSON-ready summary of an ExperimentResult: spec, slope fits and mean-error curves."""
    curves = [{"tail_param": tail, "method": method, "points": [[n, err] for n, err in curve]}
              for (tail, method), curve in result.curves.items()]
    return {
        "schema_version": SCHEMA_VERSION,
        "experiment": result.spec.name,
        "kind": result.spec.kind.value,
        "spec": to_jsonable(result.spec),
        "fits": to_jsonable(result.fits),
        "curves": curves,
        "trials": len({(r.tail_param, r.n, r.trial) for r in result.records}),
        "diverged": sum(1 for r in result.records if r.diverged),
    }


def write_summary_json(summary: Dict[str, Any], path: str):
    atomic_write_text(path, json.dumps(to_jsonable(summary), indent=4) + "\n")
    logger.info("[EXPERIMENT] summary saved to: %s", path)


def load_summary_json(path: str) -> Dict[str, Any]:
    try:
        with open(path) as f:
            return json.load(f)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read summary {path}: {exc}") from exc
