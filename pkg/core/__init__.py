"""
Core components for srmkit: errors, domain types, matrix primitives,
metrics and run-scoped logging context.
"""

from core.errors import SrmKitError, ValidationError, NumericalError
from core.metrics import MetricsCollector
from core.run_context import RunContext, RunData, RunContextFilter

__all__ = [
    # Errors
    'SrmKitError',
    'ValidationError',
    'NumericalError',

    # Metrics
    'MetricsCollector',

    # Run context
    'RunContext',
    'RunData',
    'RunContextFilter',
]
