"""Exception hierarchy."""


class MSExtrapError(Exception):
    """Base class for all package errors."""


class DomainError(MSExtrapError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class FitError(MSExtrapError, RuntimeError):
    """Parameter estimation failed or the data are degenerate."""


class CalibrationError(MSExtrapError, ValueError):
    """No covariance parameter attains the requested extremal coefficient."""


class FactorizationError(MSExtrapError, RuntimeError):
    """Covariance matrix could not be factorized, even after jitter."""


class ProblemError(MSExtrapError, ValueError):
    """Forecast problem cannot be built from the supplied data."""


class IngestionError(MSExtrapError, ValueError):
    """Rainfall records cannot be assembled into a complete series."""


class TuningError(MSExtrapError, RuntimeError):
    """Penalty tuning produced degenerate curves."""
