"""
Exception hierarchy shared by the numerical services, the API and the CLI.

Services raise these; the API maps them onto HTTP status codes and the CLI
onto process exit codes.
"""


class CasimirError(Exception):
    """Base class for every error raised by this package"""


class DomainError(CasimirError, ValueError):
    """An argument lies outside the domain of the operation"""


class RangeError(DomainError):
    """A lookup falls outside the tabulated range (no extrapolation)"""


class DataValidationError(CasimirError, ValueError):
    """A data file could not be parsed or failed validation"""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class ConfigError(CasimirError, ValueError):
    """A run configuration or truncation is invalid"""


class NumericalError(CasimirError, ArithmeticError):
    """A numerical procedure failed to converge.

    Attributes:
        estimate: Best value reached before giving up (may be None)
        error_bound: Achieved error bound for that estimate (may be None)
    """

    def __init__(self, message, estimate=None, error_bound=None):
        if estimate is not None and error_bound is not None:
            message = f"{message} (estimate={estimate:.6e}, error bound={error_bound:.3e})"
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class PrecisionError(NumericalError):
    """The requested accuracy cannot be reached at this geometry"""
