"""Exception types raised across the package."""


class PinchflowError(Exception):
    """Base class for all package errors."""


class DomainError(PinchflowError, ValueError):
    """An argument lies outside the domain of a scalar function."""


class DegenerateMeanCurvature(PinchflowError, ValueError):
    """The mean curvature is too small for the principal normal to be defined."""


class SamplerExhausted(PinchflowError, RuntimeError):
    """A random sampler could not produce an admissible draw."""


class RatioUndefined(PinchflowError, ValueError):
    """|A|^2/|H|^2 was requested at a point with vanishing mean curvature."""


class StepUnderflow(PinchflowError, RuntimeError):
    """Adaptive time step dropped below the floor before any stopping rule fired."""


class CflViolation(PinchflowError, ValueError):
    """Requested explicit time step exceeds the stability bound."""


class DegenerateMetric(PinchflowError, ValueError):
    """The induced metric is (numerically) singular at some node."""
