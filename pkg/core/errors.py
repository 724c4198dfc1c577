"""
Exception hierarchy for srmkit.

Every error belongs to one of two families whose exit code the CLI reports:
ValidationError (bad input, exit 1) and NumericalError (the numbers cannot
support the requested operation, exit 2).
"""

from typing import Optional


class SrmKitError(Exception):
    """Base class for all toolkit errors."""
    exit_code = 2


class ValidationError(SrmKitError):
    """Input failed validation."""
    exit_code = 1


class NumericalError(SrmKitError):
    """Numerically undefined or degenerate computation."""
    exit_code = 2


# ============================================================================
# VALIDATION FAMILY
# ============================================================================
class ExampleCountMismatch(ValidationError):
    pass


class EmptyList(ValidationError):
    pass


class SizeMismatch(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class KTooLarge(ValidationError):
    pass


class NetworkCountMismatch(ValidationError):
    pass


class BadMagic(ValidationError):
    pass


class TruncatedPayload(ValidationError):
    pass


class NonNumericCell(ValidationError):
    pass


class DimMismatch(ValidationError):
    pass


class MissingFile(ValidationError):
    pass


class DuplicateEntry(ValidationError):
    pass


class ManifestParseError(ValidationError):
    pass


class ConfigParseError(ValidationError):
    """Raised for malformed key = value documents; carries the line number."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class SpecValidationError(ValidationError):
    pass


# ============================================================================
# NUMERICAL FAMILY
# ============================================================================
class InvalidMatrix(NumericalError):
    pass


class DegenerateColumn(NumericalError):
    """A constant column has no defined correlation."""

    def __init__(self, column: int, network_id: Optional[str] = None):
        self.column = column
        self.network_id = network_id
        where = f"network '{network_id}' " if network_id is not None else ""
        super().__init__(f"{where}column {column} is constant (zero variance)")

    def for_network(self, network_id: str) -> 'DegenerateColumn':
        return DegenerateColumn(self.column, network_id)


class ZeroVariance(NumericalError):
    pass


class RsmMismatch(NumericalError):
    pass


class DegenerateSpectrum(NumericalError):
    pass


class RunFailedError(NumericalError):
    """A simulation run failed; aborts the whole simulation."""

    def __init__(self, run_index: int, cause: Exception):
        self.run_index = run_index
        self.cause = cause
        self.exit_code = getattr(cause, 'exit_code', NumericalError.exit_code)
        super().__init__(f"simulation run {run_index} failed: {cause}")
