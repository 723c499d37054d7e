"""Exception hierarchy shared by every module."""


class GapSpringError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(GapSpringError, ValueError):
    """An argument violates a documented precondition."""


class DivergenceError(GapSpringError, ArithmeticError):
    """Time integration produced a non-finite state."""

    def __init__(self, time, message=None):
        self.time = float(time)
        super().__init__(message or f"integration diverged at t = {self.time:.6g} s")


class NoRootError(GapSpringError, ArithmeticError):
    """No sign change of the residual was found in the scanned bracket."""


class FormatError(GapSpringError, ValueError):
    """A file does not follow the expected format."""


class ConfigError(GapSpringError, ValueError):
    """A run configuration key is unknown, mistyped or out of range."""
