"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class FusedLassoError(Exception):
    """Base class for package errors."""


class InputError(FusedLassoError, ValueError):
    """Malformed data: non-finite values, wrong lengths, empty segments."""


class DomainError(FusedLassoError, ValueError):
    """A parameter is outside its mathematical domain (e.g. negative lambda)."""


class ConfigError(FusedLassoError, ValueError):
    """An experiment or CLI configuration is invalid."""


class ConvergenceError(FusedLassoError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class CertificateError(FusedLassoError, RuntimeError):
    """A computed solution failed its optimality certificate."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class DegenerateVarianceError(FusedLassoError, ValueError):
    """Variance filtering produced a non-positive level."""

    def __init__(self, segment: int, level: float):
        super().__init__(
            f"segment {segment} has non-positive variance estimate {level!r}; "
            "lambda is too large for the scale of the squared data"
        )
        self.segment = segment
        self.level = level
