"""Exception types shared across the package."""


class VortexLabError(Exception):
    """Base class for all package errors."""


class DomainError(VortexLabError, ValueError):
    """Input lies outside the admissible domain (e.g. |b| >= 1)."""


class DegenerateConfigError(VortexLabError, ValueError):
    """Coincident vortices or a pole in a closed-form expression."""


class SolverFailure(VortexLabError, RuntimeError):
    """Iterative solver did not converge; ``last`` holds the final iterate."""

    def __init__(self, msg, last=None, residual=None):
        super().__init__(msg)
        self.last = last
        self.residual = residual


class PreconditionError(VortexLabError, ValueError):
    """A documented precondition of an operation does not hold."""


class StepSizeError(VortexLabError, RuntimeError):
    """Time step too large: amplitude blow-up detected."""


class ConstructionError(VortexLabError, ValueError):
    """Initial-data construction impossible for the given parameters."""


class ProjectionError(VortexLabError, RuntimeError):
    """Constraint gradient degenerate in the projected flow."""


class ResolutionError(VortexLabError, RuntimeError):
    """Grid too coarse for the requested epsilon."""


class TrackingError(VortexLabError, RuntimeError):
    """Detections could not be matched to the reference configuration."""


class ConfigError(VortexLabError, ValueError):
    """Experiment config failed validation; ``fields`` lists offenders."""

    def __init__(self, msg, fields=()):
        super().__init__(msg)
        self.fields = list(fields)
