"""
Robust gradient oracle: block partitioning, block-mean gradients and the
element-wise median of block means. A plain-mean oracle sits behind the same
interface so that vanilla IHT is RIGHT with a different oracle.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from components import AnyDataset, OracleKind, PartitionMode
from errors import EmptyBlockError, InvalidParameterError
from models import RegressionModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlockPartition:
    """Assignment of n observations to K blocks whose sizes differ by at most one."""
    assignments: np.ndarray
    K: int
    block_sizes: tuple
    blocks: tuple  # sorted row indices per block

    @property
    def n(self) -> int:
        return self.assignments.shape[0]


@dataclass(frozen=True)
class GradientEstimate:
    """g(theta; K) with the block count actually used."""
    value: np.ndarray
    k_used: int
    oracle_kind: OracleKind


def partition(n: int, K: int, mode: PartitionMode = PartitionMode.CONTIGUOUS, rng=None) -> BlockPartition:
    """
    Split n observations into K blocks.

    Contiguous mode puts observation i into block i mod K; shuffle mode applies
    the same rule after a permutation drawn from the trial's stream.

    Args:
        n: number of observations
        K: block count, 1 <= K <= n
        mode: contiguous or seeded-shuffle
        rng: RngStream, required for shuffle mode

    Returns:
        The block partition
    """
    if K < 1 or K > n:
        raise InvalidParameterError(f"block count must satisfy 1 <= K <= n, got K={K}, n={n}")
    slots = np.arange(n) % K
    if mode == PartitionMode.SHUFFLE:
        if rng is None:
            raise InvalidParameterError("shuffle partition needs an RngStream")
        order = rng.generator.permutation(n)
        assignments = np.empty(n, dtype=np.int64)
        assignments[order] = slots
    else:
        assignments = slots.astype(np.int64)
    blocks = tuple(np.flatnonzero(assignments == k) for k in range(K))
    sizes = tuple(int(b.shape[0]) for b in blocks)
    return BlockPartition(assignments=assignments, K=K, block_sizes=sizes, blocks=blocks)


def elementwise_median(stack: np.ndarray) -> np.ndarray:
    """
    Median over axis 0 of a (K, ...) stack, entry by entry.
    Even K takes the midpoint of the two central order statistics.
    """
    if stack.shape[0] == 1:
        return stack[0].copy()
    # np.median selects with np.partition, no full sort
    return np.median(stack, axis=0)


def median_of_means(samples: np.ndarray, blocks: BlockPartition) -> np.ndarray:
    """Median-of-means estimate of E[samples] (rows are observations)."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape[0] != blocks.n:
        raise InvalidParameterError("partition size does not match the sample count")
    means = np.stack([samples[rows].mean(axis=0) for rows in blocks.blocks])
    return elementwise_median(means)


def block_mean_gradient(model: RegressionModel, data: AnyDataset, theta: np.ndarray,
                        blocks: BlockPartition, k: int) -> np.ndarray:
    """Average per-sample gradient over block k."""
    rows = blocks.blocks[k]
    if rows.shape[0] == 0:
        raise EmptyBlockError(f"block {k} is empty")
    return model.mean_gradient(data.features[rows], data.response[rows], theta)


def mean_gradient(model: RegressionModel, data: AnyDataset, theta: np.ndarray) -> GradientEstimate:
    """Plain empirical-risk gradient."""
    if data.n == 0:
        raise EmptyBlockError("no observations")
    value = model.mean_gradient(data.features, data.response, theta)
    return GradientEstimate(value=value, k_used=1, oracle_kind=OracleKind.MEAN)


def mom_gradient(model: RegressionModel, data: AnyDataset, theta: np.ndarray, K: int,
                 blocks: Optional[BlockPartition] = None) -> GradientEstimate:
    """
    Median-of-means gradient g(theta; K): block means, then the element-wise
    median (entry-wise for matrix parameters).
    """
    if K < 1:
        raise InvalidParameterError(f"K must be >= 1, got {K}")
    if blocks is None:
        blocks = partition(data.n, K)
    elif blocks.K != K:
        raise InvalidParameterError(f"partition has {blocks.K} blocks, asked for K={K}")
    means = np.stack([block_mean_gradient(model, data, theta, blocks, k) for k in range(K)])
    return GradientEstimate(value=elementwise_median(means), k_used=K, oracle_kind=OracleKind.MOM)


class GradientOracle(ABC):
    """
    A gradient estimator bound to one dataset.
    Other aggregations (trimmed means, geometric median) would plug in here.
    """
    kind: OracleKind

    def __init__(self, model: RegressionModel, data: AnyDataset):
        self.model = model
        self.data = data

    @abstractmethod
    def __call__(self, theta: np.ndarray) -> GradientEstimate:
        ...


class MeanGradientOracle(GradientOracle):
    kind = OracleKind.MEAN

    def __call__(self, theta):
        return mean_gradient(self.model, self.data, theta)


class MedianOfMeansOracle(GradientOracle):
    """MoM oracle with the partition fixed for the lifetime of a solver run."""
    kind = OracleKind.MOM

    def __init__(self, model: RegressionModel, data: AnyDataset, blocks: BlockPartition):
        super().__init__(model, data)
        if blocks.n != data.n:
            raise InvalidParameterError("partition size does not match the data")
        for k, rows in enumerate(blocks.blocks):
            if rows.shape[0] == 0:
                raise EmptyBlockError(f"block {k} is empty")
        self.blocks = blocks
        # block slices are copied once; every iteration reuses them
        self._block_data: List[tuple] = [(data.features[rows], data.response[rows])
                                         for rows in blocks.blocks]

    def block_means(self, theta: np.ndarray) -> np.ndarray:
        return np.stack([self.model.mean_gradient(X, Y, theta) for X, Y in self._block_data])

    def __call__(self, theta):
        value = elementwise_median(self.block_means(theta))
        return GradientEstimate(value=value, k_used=self.blocks.K, oracle_kind=OracleKind.MOM)
