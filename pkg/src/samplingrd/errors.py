"""Exception types shared across the package."""


class SrdfError(Exception):
    """Base class for all errors raised by samplingrd."""


class ValidationError(SrdfError, ValueError):
    """Malformed input: bad pmf, mismatched shapes, invalid subset."""

    def __init__(self, message, problems=None):
        super().__init__(message)
        self.problems = list(problems) if problems else [message]


class InfeasibleDistortion(SrdfError, ValueError):
    """Requested distortion lies below the smallest achievable value."""


class CapExceeded(SrdfError):
    """An exhaustive enumeration would exceed the configured cap."""
