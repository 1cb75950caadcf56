"""
Reproducible random generation of heavy-tailed designs, noise, least-favorable
mixtures and complete synthetic regression instances.

Every draw goes through an RngStream; one master seed per experiment, trial i
uses stream_id = i, so trials never share generator state.
"""
import hashlib
import logging
from typing import Optional, Tuple

import numpy as np

from components import (AnyDataset, Dataset, DistributionKind, DistributionSpec,
                        ModelKind, MultiResponseDataset)
from errors import InvalidParameterError, NonFiniteValueError
from models import sigmoid

logger = logging.getLogger(__name__)

# integer dof up to this size use the exact sum-of-squares chi-square
_MAX_SUM_OF_SQUARES_DOF = 64


class RngStream:
    """
    Deterministic generator bound to (seed, stream_id[, path]).
    The same triple always yields the same sequence.
    """

    def __init__(self, seed: int, stream_id: int = 0, path: Tuple[int, ...] = ()):
        if seed < 0 or stream_id < 0:
            raise InvalidParameterError("seed and stream_id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.path = tuple(int(k) for k in path)
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,) + self.path)
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def fork(self, *keys: int) -> "RngStream":
        """Child stream for a sub-task; independent of how much this stream has consumed."""
        return RngStream(self.seed, self.stream_id, self.path + tuple(keys))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, path={self.path})"


def _chi_square(rng: RngStream, nu: float, size) -> np.ndarray:
    """chi^2_nu draws: sum of squared normals for small integer nu, gamma otherwise."""
    gen = rng.generator
    if float(nu).is_integer() and nu <= _MAX_SUM_OF_SQUARES_DOF:
        shape = (size,) if np.isscalar(size) else tuple(size)
        z = gen.standard_normal(shape + (int(nu),))
        return np.sum(z * z, axis=-1)
    return 2.0 * gen.standard_gamma(nu / 2.0, size)


def _require_dof(spec: DistributionSpec) -> float:
    if spec.nu is None or not spec.nu > 0:
        raise InvalidParameterError(f"{spec.kind.value} needs nu > 0, got {spec.nu}")
    return float(spec.nu)


def _checked(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise NonFiniteValueError(f"{what} sampler produced NaN/Inf (overflow)")
    return values


def sample_two_point(n: int, alpha: float, u: float, rng: RngStream) -> np.ndarray:
    """Each entry is u with probability alpha, else 0."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidParameterError(f"alpha must lie in [0, 1], got {alpha}")
    hits = rng.generator.random(n) < alpha
    return np.where(hits, float(u), 0.0)


def sample_gaussian_shift_mixture(n: int, gamma: float, shift: float, rng: RngStream) -> np.ndarray:
    """Draws from (1 - gamma) N(0, 1) + gamma N(shift, 1); the mean is gamma * shift."""
    if not 0.0 <= gamma <= 1.0:
        raise InvalidParameterError(f"gamma must lie in [0, 1], got {gamma}")
    z = rng.generator.standard_normal(n)
    shifted = rng.generator.random(n) < gamma
    return z + shift * shifted


def _iid_draws(shape: Tuple[int, ...], spec: DistributionSpec, rng: RngStream) -> np.ndarray:
    """Independent entries of the given shape (multivariate t handled by the callers)."""
    count = int(np.prod(shape))
    kind = spec.kind
    if kind == DistributionKind.GAUSSIAN:
        draws = rng.generator.standard_normal(count)
    elif kind in (DistributionKind.STUDENT_T, DistributionKind.MULTIVARIATE_T):
        nu = _require_dof(spec)
        z = rng.generator.standard_normal(count)
        draws = z / np.sqrt(_chi_square(rng, nu, count) / nu)
    elif kind == DistributionKind.TWO_POINT_MIXTURE:
        draws = sample_two_point(count, spec.alpha, spec.location, rng)
    elif kind == DistributionKind.GAUSSIAN_SHIFT_MIXTURE:
        draws = sample_gaussian_shift_mixture(count, spec.gamma, spec.shift, rng)
    else:
        raise InvalidParameterError(f"unsupported distribution {kind}")
    return (spec.scale * draws).reshape(shape)


def _row_t_draws(rows: int, cols: int, spec: DistributionSpec, rng: RngStream) -> np.ndarray:
    """Multivariate t rows: a Gaussian row divided by one sqrt(chi^2_nu / nu) per row."""
    nu = _require_dof(spec)
    z = rng.generator.standard_normal((rows, cols))
    divisor = np.sqrt(_chi_square(rng, nu, rows) / nu)
    return spec.scale * z / divisor[:, None]


def sample_design(n: int, p: int, spec: DistributionSpec, rng: RngStream) -> np.ndarray:
    """
    Draw an n x p design matrix.

    Args:
        n: number of observations (>= 1)
        p: dimension (>= 1)
        spec: distribution of the rows
        rng: the trial's stream

    Returns:
        Row-major n x p matrix
    """
    if n < 1 or p < 1:
        raise InvalidParameterError(f"design needs n, p >= 1, got n={n}, p={p}")
    if spec.kind == DistributionKind.MULTIVARIATE_T:
        design = _row_t_draws(n, p, spec, rng)
    else:
        design = _iid_draws((n, p), spec, rng)
    return _checked(np.ascontiguousarray(design), "design")


def sample_noise(n: int, spec: DistributionSpec, rng: RngStream, m: Optional[int] = None) -> np.ndarray:
    """One noise draw per observation; an n x m matrix when m is given."""
    if n < 0:
        raise InvalidParameterError(f"noise needs n >= 0, got {n}")
    if m is None:
        return _checked(_iid_draws((n,), spec, rng), "noise")
    if spec.kind == DistributionKind.MULTIVARIATE_T:
        return _checked(_row_t_draws(n, m, spec, rng), "noise")
    return _checked(_iid_draws((n, m), spec, rng), "noise")


def second_moment_scale(spec: DistributionSpec) -> float:
    """
    c such that E[x x^T] = c * I for a design drawn from spec.
    Only defined for centered families with a finite second moment.
    """
    if spec.kind == DistributionKind.GAUSSIAN:
        return spec.scale ** 2
    if spec.kind in (DistributionKind.STUDENT_T, DistributionKind.MULTIVARIATE_T):
        nu = _require_dof(spec)
        if nu <= 2:
            raise InvalidParameterError(f"t design with nu={nu} has infinite variance")
        return spec.scale ** 2 * nu / (nu - 2.0)
    raise InvalidParameterError(f"no closed-form covariance for {spec.kind.value} designs")


def design_covariance(spec: DistributionSpec, p: int) -> np.ndarray:
    return second_moment_scale(spec) * np.eye(p)


# ---------------------------------------------------------------------------
# Ground truth and complete instances
# ---------------------------------------------------------------------------

BENCHMARK_SIGNAL = (5.0, -5.0, 6.0, -6.0, 7.0)


def benchmark_truth(p: int) -> np.ndarray:
    """theta* = (5, -5, 6, -6, 7, 0, ..., 0)."""
    if p < len(BENCHMARK_SIGNAL):
        raise InvalidParameterError(f"benchmark signal needs p >= {len(BENCHMARK_SIGNAL)}")
    truth = np.zeros(p)
    truth[:len(BENCHMARK_SIGNAL)] = BENCHMARK_SIGNAL
    return truth


def benchmark_probe(p: int) -> np.ndarray:
    """Probe point for gradient experiments: the benchmark signal shifted by five coordinates."""
    if p < 2 * len(BENCHMARK_SIGNAL):
        raise InvalidParameterError(f"probe needs p >= {2 * len(BENCHMARK_SIGNAL)}")
    probe = np.zeros(p)
    probe[len(BENCHMARK_SIGNAL):2 * len(BENCHMARK_SIGNAL)] = BENCHMARK_SIGNAL
    return probe


def uniform_truth(p: int, s_star: int, rng: RngStream, low: float = 0.5, high: float = 1.5) -> np.ndarray:
    """s* leading non-zeros drawn from Uniform(low, high)."""
    truth = np.zeros(p)
    truth[:s_star] = rng.generator.uniform(low, high, s_star)
    return truth


def row_sparse_truth(p: int, m: int, s_star: int, rng: RngStream,
                     low: float = 0.5, high: float = 1.5) -> np.ndarray:
    """p x m parameter with s* leading non-zero rows of random signs."""
    truth = np.zeros((p, m))
    magnitudes = rng.generator.uniform(low, high, (s_star, m))
    signs = rng.generator.choice([-1.0, 1.0], size=(s_star, m))
    truth[:s_star] = magnitudes * signs
    return truth


def make_dataset(model: ModelKind, n: int, truth: np.ndarray, design: DistributionSpec,
                 noise: DistributionSpec, rng: RngStream) -> AnyDataset:
    """
    Generate a complete instance: linear y = X theta* + eps, logistic
    y ~ Bernoulli(sigmoid(X theta*)) (noise spec unused), multi Y = X Theta* + E.
    """
    p = truth.shape[0]
    X = sample_design(n, p, design, rng)
    if model == ModelKind.LINEAR:
        return Dataset(X, X @ truth + sample_noise(n, noise, rng))
    if model == ModelKind.LOGISTIC:
        prob = sigmoid(X @ truth)
        return Dataset(X, (rng.generator.random(n) < prob).astype(np.float64))
    if model == ModelKind.MULTI:
        if truth.ndim != 2:
            raise InvalidParameterError("multi-response instances need a p x m truth")
        return MultiResponseDataset(X, X @ truth + sample_noise(n, noise, rng, m=truth.shape[1]))
    raise InvalidParameterError(f"unknown model {model}")


def data_checksum(dataset: AnyDataset) -> str:
    """SHA-256 over the raw bytes of features and response."""
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(dataset.features).tobytes())
    digest.update(np.ascontiguousarray(dataset.response).tobytes())
    return digest.hexdigest()
