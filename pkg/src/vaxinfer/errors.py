"""Exception hierarchy shared across the package."""


class VaxinferError(Exception):
    """Base class for all package errors."""


class DomainError(VaxinferError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ValidationError(VaxinferError, ValueError):
    """A record violates a data invariant."""


class FormatError(VaxinferError, ValueError):
    """Input text could not be parsed."""


class UnsupportedDataError(VaxinferError):
    """The dataset lacks fields the requested analysis needs."""


class DiagnosticsError(VaxinferError):
    """Convergence diagnostics are undefined for the given draws."""
