"""
Shared data containers: enums, datasets, distribution specs and the ECS
components that carry a Monte-Carlo trial through the harness systems.
Components are pure data containers with no behavior.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Union

import numpy as np

from errors import DimensionMismatchError, InvalidParameterError
from linalg import as_matrix, as_vector


class ModelKind(Enum):
    """Regression models with a gradient in models.py."""
    LINEAR = "linear"
    LOGISTIC = "logistic"
    MULTI = "multi"


class OracleKind(Enum):
    """Gradient oracle behind a solver run."""
    MOM = "mom"
    MEAN = "mean"


class PartitionMode(Enum):
    CONTIGUOUS = "contiguous"
    SHUFFLE = "seeded-shuffle"


class DistributionKind(Enum):
    GAUSSIAN = "gaussian"
    STUDENT_T = "student_t"
    MULTIVARIATE_T = "multivariate_t"
    TWO_POINT_MIXTURE = "two_point_mixture"
    GAUSSIAN_SHIFT_MIXTURE = "gaussian_shift_mixture"


class ExperimentKind(Enum):
    RATE = "rate"
    GRADIENT = "grad"
    COMPARISON = "compare"


@dataclass(frozen=True)
class Dataset:
    """Design matrix (n x p, row-major) and a response vector of length n."""
    features: np.ndarray
    response: np.ndarray

    def __post_init__(self):
        features = as_matrix(self.features, "features")
        response = as_vector(self.response, "response")
        if features.shape[0] != response.shape[0]:
            raise DimensionMismatchError(
                f"{features.shape[0]} feature rows but {response.shape[0]} responses")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "response", response)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.features[rows], self.response[rows])


@dataclass(frozen=True)
class MultiResponseDataset:
    """Design matrix (n x p) and a response matrix (n x m)."""
    features: np.ndarray
    response: np.ndarray

    def __post_init__(self):
        features = as_matrix(self.features, "features")
        response = as_matrix(self.response, "responses")
        if features.shape[0] != response.shape[0]:
            raise DimensionMismatchError(
                f"{features.shape[0]} feature rows but {response.shape[0]} response rows")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "response", response)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def m(self) -> int:
        return self.response.shape[1]

    def subset(self, rows) -> "MultiResponseDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return MultiResponseDataset(self.features[rows], self.response[rows])

    def column(self, j: int) -> Dataset:
        """Single-response view of response column j."""
        return Dataset(self.features, np.ascontiguousarray(self.response[:, j]))


AnyDataset = Union[Dataset, MultiResponseDataset]


@dataclass(frozen=True)
class DistributionSpec:
    """
    A sampling distribution for designs or noise.
    Only the fields relevant to `kind` are read; `scale` multiplies every draw.
    """
    kind: DistributionKind = DistributionKind.GAUSSIAN
    nu: Optional[float] = None  # degrees of freedom for the t families
    scale: float = 1.0
    alpha: float = 0.0  # two-point mixing probability
    location: float = 0.0  # two-point atom u
    gamma: float = 0.0  # shift-mixture probability
    shift: float = 0.0  # shift-mixture L
    seed: int = 0

    def __post_init__(self):
        if self.kind in (DistributionKind.STUDENT_T, DistributionKind.MULTIVARIATE_T):
            if self.nu is None or not self.nu > 0:
                raise InvalidParameterError(f"{self.kind.value} needs nu > 0, got {self.nu}")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidParameterError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidParameterError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not self.scale > 0:
            raise InvalidParameterError(f"scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class TailSetting:
    """
    One tail-index level of an experiment.
    The nominal index (delta or lambda) is stored next to nu, not derived from it.
    """
    nu: float
    index: float


@dataclass
class TrialRecord:
    """One (method, n, trial) outcome; the row type of the trial CSV."""
    experiment: str
    method: str
    tail_param: float
    n: int
    trial: int
    seed: int
    error: float
    wall_ms: float
    diverged: bool = False
    checksum: str = ""


# ---------------------------------------------------------------------------
# ECS components for the Monte-Carlo harness (see systems.py)
# ---------------------------------------------------------------------------

@dataclass
class TrialSetup:
    """Identity of a trial entity: which setting it samples and with which stream."""
    experiment: str
    setting_index: int  # position of the tail setting in the spec
    tail_param: float
    nu: float
    n: int
    trial: int
    seed: int  # master seed; the stream id is the trial id


@dataclass
class TrialData:
    """Generated data of an active trial. Dropped once the trial is measured."""
    dataset: Any
    truth: np.ndarray
    checksum: str
    extras: Dict[str, Any] = field(default_factory=dict)


@dataclass
class TrialEstimates:
    """Per-method estimates; a method that failed maps to the exception it raised."""
    estimates: Dict[str, Any]
    wall_ms: Dict[str, float]


@dataclass
class TrialOutcome:
    """Measured records of a finished trial."""
    records: List[TrialRecord]


@dataclass
class Pending:
    """Marker: trial waiting for a batch slot."""


@dataclass
class Active:
    """Marker: trial in the current batch."""


@dataclass
class Completed:
    """Marker: trial measured and cleaned up."""


@dataclass
class HarnessState:
    """
    Singleton component tracking global harness state.
    Should be attached to a single entity.
    """
    scenario: Any
    batch_size: int
    threads: int = 1
    current_tick: int = 0
    completed: int = 0
    total: int = 0
