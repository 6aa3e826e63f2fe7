"""
Lab Errors
Error taxonomy shared by the compute modules and the CLI
"""
from typing import Any, Dict, Optional


class LabError(Exception):
    """Base class for every error raised by the lab"""

    kind = 'lab-error'

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable form written to stderr by the CLI"""
        payload = {'error': self.kind, 'message': self.message}
        for key, value in self.details.items():
            payload[key] = str(value) if isinstance(value, int) and abs(value) >= 2 ** 53 else value
        return payload


class InvalidArgumentError(LabError, ValueError):
    """An argument lies outside the domain of the operation"""

    kind = 'invalid-argument'


class OutOfRangeError(InvalidArgumentError):
    """An integer argument falls outside the sieve range"""

    kind = 'out-of-range'


class ResourceLimitError(LabError):
    """Estimated work exceeds the configured operation budget"""

    kind = 'resource-limit'

    def __init__(self, operation: str, estimate: int, budget: int, hint: Optional[str] = None):
        message = (f"{operation}: estimated {estimate:,} elementary steps exceeds "
                   f"the operation budget of {budget:,} (raise it with --budget or RMF_LAB_BUDGET)")
        if hint:
            message = f"{message}; {hint}"
        super().__init__(message, operation=operation, estimate=estimate, budget=budget)
        self.operation = operation
        self.estimate = estimate
        self.budget = budget


class ZeroDenominatorError(LabError, ArithmeticError):
    """A ratio was requested whose normalizing count is zero"""

    kind = 'zero-denominator'


class CacheFormatError(LabError):
    """A cached sieve file is truncated or carries the wrong header"""

    kind = 'cache-format'
