"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage problems exit 1, data/parse/config
problems exit 2, numerical failures exit 3.
"""


class GsbmError(Exception):
    """Base class for all package errors."""


class ShapeError(GsbmError):
    """Matrix dimensions incompatible with the requested operation."""


class ConfigError(GsbmError):
    """Invalid or inconsistent configuration value."""


class ConvergenceError(GsbmError):
    """An iterative routine did not converge within its iteration budget."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ParseError(GsbmError):
    """Malformed input file; carries the 1-based offending line number."""

    def __init__(self, message, line_no=None):
        super().__init__(message)
        self.line_no = line_no


class InputError(GsbmError):
    """Invalid runtime argument (e.g. diagonal query pair)."""
