"""Exception types shared across the package.

Validation failures (bad grids, bad shapes, unparseable files) are
``ValueError`` subclasses so callers can catch them uniformly; iterative
routines that fail to converge raise ``ConvergenceError`` instead, which the
command line maps to a distinct exit code.
"""


class DomainError(ValueError):
    """A grid or warping function violates its domain contract."""


class SizeError(ValueError):
    """An input has the wrong length, shape, or sample size."""


class ParseError(ValueError):
    """A delimited input file could not be parsed.

    Carries the 1-based line number where parsing failed.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message: str, last_residual: float | None = None):
        if last_residual is not None:
            message = f"{message} (last residual {last_residual:.3e})"
        super().__init__(message)
        self.last_residual = last_residual
