"""
Per-sample losses and gradients of the three regression models.
This is the only module with model-specific math; solvers and oracles call
the batch helpers (mean_gradient, mean_loss) through RegressionModel.
No intercept anywhere: data are assumed centered.
"""
from abc import ABC, abstractmethod
from typing import Dict

import numpy as np

from components import AnyDataset, ModelKind
from errors import DimensionMismatchError, InvalidParameterError


def sigmoid(z):
    """Logistic function evaluated without overflow for any |z|."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return out if out.ndim else float(out)


def log1pexp(z):
    """Phi(z) = log(1 + exp(z)), the logistic cumulant."""
    return np.logaddexp(0.0, z)


def _check_pair(x: np.ndarray, theta: np.ndarray):
    if np.ndim(x) != 1 or np.shape(theta)[0] != np.shape(x)[0]:
        raise DimensionMismatchError(f"x of shape {np.shape(x)} vs parameter {np.shape(theta)}")


def _check_binary(y):
    values = np.unique(np.asarray(y))
    if not np.all(np.isin(values, (0.0, 1.0))):
        raise InvalidParameterError("logistic responses must be 0 or 1")


def linear_gradient(x: np.ndarray, y: float, theta: np.ndarray) -> np.ndarray:
    """(x^T theta - y) x, the gradient of 1/2 (y - x^T theta)^2."""
    _check_pair(x, theta)
    if np.ndim(theta) != 1:
        raise DimensionMismatchError("linear parameter must be a vector")
    return (x @ theta - y) * x


def logistic_gradient(x: np.ndarray, y: float, theta: np.ndarray) -> np.ndarray:
    """(sigmoid(x^T theta) - y) x; each entry is bounded by |x_j|."""
    _check_pair(x, theta)
    _check_binary(y)
    return (sigmoid(x @ theta) - y) * x


def _column_residuals(x: np.ndarray, y: np.ndarray, Theta: np.ndarray) -> np.ndarray:
    # column by column so that m = 1 reproduces the linear arithmetic bit for bit
    return np.array([x @ np.ascontiguousarray(Theta[:, j]) - y[j] for j in range(Theta.shape[1])])


def multi_gradient(x: np.ndarray, y: np.ndarray, Theta: np.ndarray) -> np.ndarray:
    """x (x^T Theta - y^T): the p x m gradient of 1/2 ||y^T - x^T Theta||^2."""
    _check_pair(x, Theta)
    if np.ndim(Theta) != 2 or np.shape(y) != (Theta.shape[1],):
        raise DimensionMismatchError(f"Theta {np.shape(Theta)} vs response {np.shape(y)}")
    residual = _column_residuals(x, y, Theta)
    return np.column_stack([residual[j] * x for j in range(Theta.shape[1])])


class RegressionModel(ABC):
    """Stateless model: per-sample and batch losses/gradients."""
    kind: ModelKind

    @abstractmethod
    def per_sample_gradient(self, x, y, param) -> np.ndarray:
        ...

    @abstractmethod
    def per_sample_loss(self, x, y, param) -> float:
        ...

    @abstractmethod
    def mean_gradient(self, X: np.ndarray, Y: np.ndarray, param: np.ndarray) -> np.ndarray:
        """Average per-sample gradient over the rows of X."""

    @abstractmethod
    def mean_loss(self, X: np.ndarray, Y: np.ndarray, param: np.ndarray) -> float:
        ...

    def predict(self, X: np.ndarray, param: np.ndarray) -> np.ndarray:
        return X @ param

    def validate(self, data: AnyDataset):
        """Hook for response-domain checks."""

    def zero_parameter(self, data: AnyDataset) -> np.ndarray:
        return np.zeros(data.p)


class LinearModel(RegressionModel):
    kind = ModelKind.LINEAR

    def per_sample_gradient(self, x, y, param):
        return linear_gradient(x, y, param)

    def per_sample_loss(self, x, y, param):
        _check_pair(x, param)
        return 0.5 * float(y - x @ param) ** 2

    def mean_gradient(self, X, Y, param):
        return X.T @ (X @ param - Y) / X.shape[0]

    def mean_loss(self, X, Y, param):
        residual = Y - X @ param
        return 0.5 * float(residual @ residual) / X.shape[0]


class LogisticModel(RegressionModel):
    kind = ModelKind.LOGISTIC

    def per_sample_gradient(self, x, y, param):
        return logistic_gradient(x, y, param)

    def per_sample_loss(self, x, y, param):
        _check_pair(x, param)
        _check_binary(y)
        eta = float(x @ param)
        return float(log1pexp(eta)) - y * eta

    def mean_gradient(self, X, Y, param):
        return X.T @ (sigmoid(X @ param) - Y) / X.shape[0]

    def mean_loss(self, X, Y, param):
        eta = X @ param
        return float(np.mean(log1pexp(eta) - Y * eta))

    def predict(self, X, param):
        return sigmoid(X @ param)

    def validate(self, data):
        _check_binary(data.response)


class MultiResponseModel(RegressionModel):
    kind = ModelKind.MULTI

    def __init__(self):
        self._linear = LinearModel()

    def per_sample_gradient(self, x, y, param):
        return multi_gradient(x, y, param)

    def per_sample_loss(self, x, y, param):
        _check_pair(x, param)
        residual = _column_residuals(x, np.asarray(y), param)
        return 0.5 * float(residual @ residual)

    def mean_gradient(self, X, Y, param):
        columns = [self._linear.mean_gradient(X, np.ascontiguousarray(Y[:, j]),
                                              np.ascontiguousarray(param[:, j]))
                   for j in range(param.shape[1])]
        return np.column_stack(columns)

    def mean_loss(self, X, Y, param):
        residual = Y - X @ param
        return 0.5 * float(np.sum(residual * residual)) / X.shape[0]

    def zero_parameter(self, data):
        return np.zeros((data.p, data.m))


_MODELS: Dict[ModelKind, RegressionModel] = {
    ModelKind.LINEAR: LinearModel(),
    ModelKind.LOGISTIC: LogisticModel(),
    ModelKind.MULTI: MultiResponseModel(),
}


def get_model(kind: ModelKind) -> RegressionModel:
    """Shared stateless model instance for a kind."""
    return _MODELS[kind]


def loss(model: RegressionModel, x, y, param) -> float:
    """Per-sample loss value; used for diagnostics and baseline comparisons."""
    return model.per_sample_loss(x, y, param)
