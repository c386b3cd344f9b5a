"""
Structured error handling for entropy functional estimation.

Every failure raised by the library is an ``EntroFuncError`` carrying an
``ErrorDetail`` with a category, a stable code, context and a suggestion.
The category decides the CLI exit code.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any


class ErrorCategory(Enum):
    """Categories of estimation errors."""

    INPUT = "input"
    SAMPLE_SIZE = "sample_size"
    CONFIGURATION = "configuration"
    ORACLE = "oracle"
    CALCULATION = "calculation"


EXIT_CODES: dict[ErrorCategory, int] = {
    ErrorCategory.INPUT: 2,
    ErrorCategory.SAMPLE_SIZE: 3,
    ErrorCategory.CONFIGURATION: 4,
    ErrorCategory.ORACLE: 5,
    ErrorCategory.CALCULATION: 1,
}


@dataclass
class ErrorDetail:
    """Detailed error information with context."""

    category: ErrorCategory
    message: str
    code: str
    context: dict[str, Any] = field(default_factory=dict)
    suggestion: str | None = None


class EntroFuncError(Exception):
    """Root of all errors raised by entrofunc."""

    category: ErrorCategory = ErrorCategory.CALCULATION
    code: str = "CALCULATION_ERROR"
    suggestion: str | None = None

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.detail = ErrorDetail(
            category=self.category,
            message=message,
            code=self.code,
            context=context,
            suggestion=self.suggestion,
        )

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.category]

    def __reduce__(self) -> tuple[Any, ...]:
        # Keeps detail and extra attributes across process-pool boundaries
        return (_restore_error, (type(self), self.args, self.__dict__))


def _restore_error(
    cls: type[EntroFuncError], args: tuple[Any, ...], state: dict[str, Any]
) -> EntroFuncError:
    error = cls.__new__(cls, *args)
    Exception.__init__(error, *args)
    error.__dict__.update(state)
    return error


class InvalidArgumentError(EntroFuncError, ValueError):
    category = ErrorCategory.INPUT
    code = "INVALID_ARGUMENT"
    suggestion = "Check argument ranges, sample modes and dimensions"


class InvalidOrderError(EntroFuncError, ValueError):
    category = ErrorCategory.INPUT
    code = "INVALID_ORDER"
    suggestion = "Use non-negative integer orders with r1 + r2 >= 2"


class InsufficientSampleError(EntroFuncError):
    category = ErrorCategory.SAMPLE_SIZE
    code = "INSUFFICIENT_SAMPLE"
    suggestion = "Provide at least r1 observations of X and r2 of Y"


class UndefinedIntervalError(EntroFuncError):
    code = "UNDEFINED_INTERVAL"
    suggestion = "Increase epsilon or the sample size so that Q is positive"


class InputFileError(EntroFuncError):
    category = ErrorCategory.INPUT
    code = "MALFORMED_INPUT"
    suggestion = "Use UTF-8 CSV with one observation per row"


class ConfigValidationError(EntroFuncError):
    category = ErrorCategory.CONFIGURATION
    code = "INVALID_CONFIG"
    suggestion = "Fix or remove the offending keys"

    def __init__(self, message: str, offending_keys: list[str], **context: Any):
        self.offending_keys = offending_keys
        super().__init__(message, offending_keys=offending_keys, **context)


class UnsupportedPairError(EntroFuncError):
    category = ErrorCategory.ORACLE
    code = "UNSUPPORTED_PAIR"
    suggestion = "Use numeric quadrature (--numeric) for this pair"


class CombinatorialExplosionError(EntroFuncError):
    category = ErrorCategory.ORACLE
    code = "TOO_MANY_SUBSETS"
    suggestion = "Reduce the sample sizes for the subset-enumeration oracle"
