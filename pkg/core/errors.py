"""
Errors - Exception hierarchy shared by the engines and the command line
"""


class CortexError(Exception):
    """Base class for all toolkit errors"""

    exit_code = 4


class ConfigurationError(CortexError, ValueError):
    """Invalid settings, flags, or hyperparameters"""

    exit_code = 1


class DataError(CortexError, ValueError):
    """Problems with input tables, splits, shapes, or cost-matrix files"""

    exit_code = 2


class OracleError(CortexError, RuntimeError):
    """Black-box prediction source failed or returned unusable output"""

    exit_code = 3


class ConsistencyError(CortexError, AssertionError):
    """An internal invariant was broken"""

    exit_code = 4


def with_context(error, prefix):
    """
    Re-create an error of the same class with a context prefix

    Args:
        error (Exception): Original error
        prefix (str): Context such as "run 3"

    Returns:
        CortexError: Error carrying the prefixed message
    """
    if isinstance(error, CortexError):
        cls = type(error)
    else:
        cls = ConsistencyError
    wrapped = cls(f"{prefix}: {error}")
    wrapped.__cause__ = error
    return wrapped
