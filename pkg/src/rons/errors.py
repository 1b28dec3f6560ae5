"""Exception and warning types shared across the package."""


class RonsError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(RonsError, ValueError):
    """An input violates a documented precondition."""


class DimensionError(ValidationError):
    """Array sizes are inconsistent with the declared layout."""


class ConfigError(ValidationError):
    """A run configuration file is malformed or inconsistent."""


class SingularMetricError(RonsError):
    """The metric tensor could not be factored (not positive definite)."""


class ConstraintConditioningError(RonsError):
    """Active constraint gradients are numerically dependent."""


class DivergenceError(RonsError):
    """Non-finite values appeared during time stepping.

    ``time`` holds the simulation time at failure when known.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class StepCollapseError(RonsError):
    """The step-size rule collapsed (max step count exceeded or dt <= 0)."""


class DryStateError(RonsError):
    """Total water depth became non-positive."""


class RankError(RonsError):
    """Requested more basis modes than the snapshot data supports."""


class AlignmentError(ValidationError):
    """Two time series do not share sampling times."""


class RonsWarning(UserWarning):
    """Base class for warnings recorded in run diagnostics."""


class IllConditionedConstraintWarning(RonsWarning):
    """Constraint equation solved by least squares due to ill conditioning."""


class ResampledInitialConditionWarning(RonsWarning):
    """A random initial condition was resampled with an incremented seed."""
