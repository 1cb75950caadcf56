"""
Dense vector/matrix helpers, support sets and the hard-thresholding projections.
Vectors and matrices are plain numpy arrays validated at construction;
every function here is pure and returns fresh arrays.
"""
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from errors import DimensionMismatchError, InvalidParameterError, NonFiniteValueError


def as_vector(values, name: str = "vector") -> np.ndarray:
    """
    Build a DenseVector: a 1-D float64 array with finite entries only.

    Raises:
        DimensionMismatchError: if values are not one-dimensional
        NonFiniteValueError: if any entry is NaN or Inf
    """
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValueError(f"{name} contains NaN or Inf")
    return arr


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """
    Build a DenseMatrix: a 2-D row-major float64 array with finite entries only.
    """
    arr = np.array(values, dtype=np.float64, order="C")
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValueError(f"{name} contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class SupportSet:
    """Sorted, duplicate-free coordinate indices in [0, dim)."""
    indices: Tuple[int, ...]
    dim: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if list(idx) != sorted(set(idx)):
            raise InvalidParameterError("support indices must be sorted and unique")
        if idx and (idx[0] < 0 or idx[-1] >= self.dim):
            raise InvalidParameterError(f"support index out of range [0, {self.dim})")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_indices(cls, indices: Iterable[int], dim: int) -> "SupportSet":
        return cls(tuple(sorted(set(int(i) for i in indices))), dim)

    @classmethod
    def of(cls, values: np.ndarray) -> "SupportSet":
        """Support of a vector, or the row support of a matrix."""
        arr = np.asarray(values)
        if arr.ndim == 1:
            nonzero = np.flatnonzero(arr)
        else:
            nonzero = np.flatnonzero(np.any(arr != 0, axis=1))
        return cls(tuple(int(i) for i in nonzero), arr.shape[0])

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, index: int) -> bool:
        return index in self.indices

    def union(self, other: "SupportSet") -> "SupportSet":
        if other.dim != self.dim:
            raise DimensionMismatchError("supports live in different dimensions")
        return SupportSet.from_indices(set(self.indices) | set(other.indices), self.dim)


def _top_indices(scores: np.ndarray, s: int) -> np.ndarray:
    """Indices of the s largest scores; equal scores keep the lower index."""
    order = np.argsort(-scores, kind="stable")
    return np.sort(order[:s])


def hard_threshold(v: np.ndarray, s: int) -> np.ndarray:
    """
    Projection P_s onto s-sparse vectors: keep the s largest-magnitude entries.

    Args:
        v: vector to project
        s: number of entries to keep (s >= p returns v unchanged)

    Returns:
        New vector equal to v on the kept entries and zero elsewhere
    """
    if s < 0:
        raise InvalidParameterError(f"sparsity must be >= 0, got {s}")
    v = np.asarray(v, dtype=np.float64)
    if s >= v.shape[0]:
        return v.copy()
    out = np.zeros_like(v)
    if s == 0:
        return out
    keep = _top_indices(np.abs(v), s)
    out[keep] = v[keep]
    return out


def row_hard_threshold(M: np.ndarray, s: int) -> np.ndarray:
    """Keep the s rows with the largest l2 norm and zero the rest."""
    if s < 0:
        raise InvalidParameterError(f"sparsity must be >= 0, got {s}")
    M = np.asarray(M, dtype=np.float64)
    if s >= M.shape[0]:
        return M.copy()
    out = np.zeros_like(M)
    if s == 0:
        return out
    # a single column ranks rows by magnitude, exactly as the vector case
    scores = np.abs(M[:, 0]) if M.shape[1] == 1 else np.linalg.norm(M, axis=1)
    keep = _top_indices(scores, s)
    out[keep] = M[keep]
    return out


def threshold(param: np.ndarray, s: int) -> np.ndarray:
    """Entry thresholding for vectors, row thresholding for matrices."""
    return hard_threshold(param, s) if np.ndim(param) == 1 else row_hard_threshold(param, s)


def restrict(v: np.ndarray, support: SupportSet) -> np.ndarray:
    """Entries of v on the support, in support order."""
    v = np.asarray(v)
    if support.dim != v.shape[0]:
        raise DimensionMismatchError(f"support of dim {support.dim} applied to length {v.shape[0]}")
    return v[list(support.indices)].astype(np.float64)


def scatter(values: np.ndarray, support: SupportSet) -> np.ndarray:
    """Inverse of restrict: place values on the support, zero elsewhere."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] != len(support):
        raise DimensionMismatchError("values and support differ in length")
    out = np.zeros((support.dim,) + values.shape[1:])
    out[list(support.indices)] = values
    return out


def dot(a: np.ndarray, b: np.ndarray) -> float:
    if np.shape(a) != np.shape(b) or np.ndim(a) != 1:
        raise DimensionMismatchError(f"dot of shapes {np.shape(a)} and {np.shape(b)}")
    return float(np.dot(a, b))


def matvec(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    if np.ndim(A) != 2 or np.ndim(v) != 1 or A.shape[1] != v.shape[0]:
        raise DimensionMismatchError(f"matvec of shapes {np.shape(A)} and {np.shape(v)}")
    return A @ v


def matmat(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if np.ndim(A) != 2 or np.ndim(B) != 2 or A.shape[1] != B.shape[0]:
        raise DimensionMismatchError(f"matmat of shapes {np.shape(A)} and {np.shape(B)}")
    return A @ B


def norm_l1(v: np.ndarray) -> float:
    return float(np.sum(np.abs(v)))


def norm_l2(v: np.ndarray) -> float:
    return float(np.linalg.norm(np.ravel(v)))


def norm_linf(v: np.ndarray) -> float:
    v = np.asarray(v)
    return float(np.max(np.abs(v))) if v.size else 0.0


def norm_fro(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, ord="fro"))


def norm_21(M: np.ndarray) -> float:
    """Mixed norm ||M||_{2,1}: the sum of row l2 norms."""
    return float(np.sum(np.linalg.norm(M, axis=1)))


def parameter_error(estimate: np.ndarray, truth: np.ndarray) -> float:
    """l2 error for vectors, Frobenius error for matrices."""
    estimate = np.asarray(estimate)
    truth = np.asarray(truth)
    if estimate.shape != truth.shape:
        raise DimensionMismatchError(f"estimate {estimate.shape} vs truth {truth.shape}")
    return norm_l2(estimate - truth)
