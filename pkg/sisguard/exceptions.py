"""Custom exceptions for the sisguard epidemic game solver."""


class SisguardError(Exception):
    """Base exception for all sisguard errors.

    This is the parent class for all custom exceptions in the package.
    It provides a consistent interface for error handling throughout the system.
    """

    def __init__(self, message: str, details: str = None):
        """Initialize the exception with a message and optional details.

        Args:
            message: Primary error message
            details: Additional error details or context
        """
        super().__init__(message)
        self.message = message
        self.details = details

    def __str__(self):
        """Return a formatted error message."""
        if self.details:
            return f"{self.message}: {self.details}"
        return self.message


class ValidationError(SisguardError):
    """Exception raised for invalid model inputs.

    This includes out-of-range parameters, vector length mismatches
    and malformed degree distributions.
    """

    pass


class ConfigurationError(SisguardError):
    """Exception raised for configuration file problems.

    This includes unreadable or malformed JSON, missing keys
    and unknown distribution or run kinds.
    """

    pass


class NumericalError(SisguardError):
    """Exception raised when a numerical procedure fails.

    This includes non-finite states during integration, power iteration
    that does not converge and inconsistent equilibrium case classification.
    """

    pass


class ArtifactError(SisguardError):
    """Exception raised when output artifacts cannot be written."""

    pass
