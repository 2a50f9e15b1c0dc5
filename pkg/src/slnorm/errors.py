"""Exception hierarchy shared by the solver modules."""


class SLNormError(Exception):
    """Base class for all solver errors."""


class DomainError(SLNormError, ValueError):
    """An argument lies outside its admissible domain."""


class IntegrationError(SLNormError, RuntimeError):
    """The adaptive integrator could not advance (step-size underflow)."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class AccuracyError(SLNormError, RuntimeError):
    """A quadrature did not reach the requested tolerance."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class SearchError(SLNormError, RuntimeError):
    """An eigenvalue could not be bracketed inside the admissible window."""


class DegenerateSamplingError(SLNormError, RuntimeError):
    """Too few usable sample points to form a ratio diagnostic."""


class ConfigError(SLNormError, ValueError):
    """A run configuration failed validation.

    ``path`` names the offending field, e.g. ``config.alpha``.
    """

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
