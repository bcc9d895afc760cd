"""Exception types raised across the package."""


class BernfieldError(Exception):
    """Base class for errors raised by bernfield."""


class ConfigurationError(BernfieldError, ValueError):
    """Invalid model, scheme or experiment configuration."""


class UnsupportedOperationError(BernfieldError, NotImplementedError):
    """The operation has no closed form for this model family."""


class DomainError(BernfieldError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DegenerateSchemeError(BernfieldError, ValueError):
    """A weight scheme or normalisation is degenerate (zero norm or variance)."""
