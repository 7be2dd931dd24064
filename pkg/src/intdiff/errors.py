"""Exception hierarchy shared by every intdiff module."""


class IntDiffError(Exception):
    """Base class for all package errors."""


class ParameterError(IntDiffError, ValueError):
    """A model or rate parameter lies outside its admissible range."""


class BandwidthError(ParameterError):
    """Non-positive smoothing bandwidth."""


class GridMismatchError(IntDiffError, ValueError):
    """Observation spacing is not an integer multiple of the simulation step."""


class InsufficientDataError(IntDiffError, ValueError):
    """Too few observations for the requested operation."""


class DivergenceError(IntDiffError, ArithmeticError):
    """A simulated state became non-finite.

    Attributes
    ----------
    step : int
        Index of the fine-grid step that produced the non-finite value.
    """

    def __init__(self, step, value=float("nan")):
        self.step = int(step)
        self.value = value
        super().__init__(f"non-finite state {value!r} reached at step {self.step}")


class InvalidEstimateError(IntDiffError, ArithmeticError):
    """An estimate curve contains NaN where a finite value is required."""

    def __init__(self, replication, point, x=None):
        self.replication = replication
        self.point = point
        self.x = x
        where = f"replication {replication}, point {point}"
        if x is not None:
            where += f" (x={x!r})"
        super().__init__(f"undefined estimate at {where}")


class ConditionNotApplicableError(IntDiffError, ValueError):
    """Structural preconditions of a mixing-rate condition do not hold."""


class ConfigError(IntDiffError, ValueError):
    """Experiment configuration failed to parse or validate."""

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
