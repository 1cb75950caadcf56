"""
Exception hierarchy shared by every module.
The CLI maps these onto exit codes (see cli.run_cli).
"""
from typing import Optional


class RobustRegressionError(Exception):
    """Base class for all errors raised by this toolkit."""


class DimensionMismatchError(RobustRegressionError, ValueError):
    """Operands have incompatible shapes."""


class InvalidParameterError(RobustRegressionError, ValueError):
    """A configuration value lies outside its admissible range."""


class NonFiniteValueError(RobustRegressionError, ValueError):
    """NaN or Inf reached a place where only finite values are admitted."""


class EmptyBlockError(RobustRegressionError):
    """A median-of-means block holds no observations."""


class DivergenceError(RobustRegressionError):
    """
    An iterative solver left the finite range.
    Carries the iteration index so that diverged trials can be recorded as data.
    """

    def __init__(self, iteration: int, magnitude: Optional[float] = None, solver: str = "solver"):
        self.iteration = iteration
        self.magnitude = magnitude
        self.solver = solver
        detail = "non-finite iterate" if magnitude is None else f"|coordinate| = {magnitude:.3e}"
        super().__init__(f"{solver} diverged at iteration {iteration} ({detail})")


class LinearProgramError(RobustRegressionError):
    """Base class for linear-program failures."""


class InfeasibleProblemError(LinearProgramError):
    """Phase one ended with a positive artificial objective."""


class UnboundedProblemError(LinearProgramError):
    """The objective decreases without bound along a feasible ray."""


class IterationLimitError(LinearProgramError):
    """The simplex method hit its pivot cap."""


class DataError(RobustRegressionError):
    """Input data could not be read or has no usable rows/columns."""


class ConfigError(RobustRegressionError):
    """A configuration file is missing, malformed, or names unknown keys."""
