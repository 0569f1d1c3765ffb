"""Exception types shared across the package."""


class NoonscopeError(Exception):
    """Base class for all package errors."""


class UnsupportedSizeError(NoonscopeError, ValueError):
    """Photon number outside the range the exact combinatorics support."""


class OutOfDomainError(NoonscopeError, ValueError):
    """Scan position outside the sample map."""


class FitError(NoonscopeError, RuntimeError):
    """A least-squares fit failed or the data carry no usable signal."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(NoonscopeError, ValueError):
    """Invalid or unknown configuration entry."""


class SchemaError(NoonscopeError, ValueError):
    """A data file does not follow the expected CSV schema."""
