"""Error hierarchy shared by every ydvl module."""

from __future__ import annotations


class YdvlError(RuntimeError):
    """Base class for all laboratory errors.

    ``operation`` names the failing module operation (``"pressure.solve_pressure"``)
    so command-line error text can point at it.
    """

    def __init__(self, message: str, *, operation: str = "ydvl") -> None:
        super().__init__(message)
        self.operation = operation

    def __str__(self) -> str:
        return f"{self.operation}: {self.args[0]}"


class MeanNotZero(YdvlError):
    """Raised when a torus Poisson problem is handed data with nonzero mean."""


class OutOfRange(YdvlError):
    """Raised when a parameter lies outside its admissible interval."""


class NoConvergence(YdvlError):
    """Raised when an iterative solve misses its tolerance."""

    def __init__(self, iterations: int, residual: float, *, operation: str) -> None:
        super().__init__(
            f"no convergence after {iterations} iterations (relative residual {residual:.3e})",
            operation=operation,
        )
        self.iterations = iterations
        self.residual = residual


class VacuumViolated(YdvlError):
    """Raised when the density touches zero or goes negative."""


class BlowupDetected(YdvlError):
    """Raised when the velocity exceeds the instability threshold."""


class NonFiniteField(YdvlError):
    """Raised when a field acquires NaN or Inf samples."""


class GridMismatch(YdvlError):
    """Raised when fields or snapshots live on incompatible grids."""


class ParseError(YdvlError):
    """Raised on malformed configuration text."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}", operation="harness.parse_config")
        self.line = line
        self.message = message


class ValidationError(YdvlError):
    """Raised when a configuration value violates an invariant."""


class IoError(YdvlError):
    """Raised when a file cannot be read or written."""


class FormatError(YdvlError):
    """Raised when a snapshot file is truncated or carries a bad header."""


__all__ = [
    "YdvlError",
    "MeanNotZero",
    "OutOfRange",
    "NoConvergence",
    "VacuumViolated",
    "BlowupDetected",
    "NonFiniteField",
    "GridMismatch",
    "ParseError",
    "ValidationError",
    "IoError",
    "FormatError",
]
