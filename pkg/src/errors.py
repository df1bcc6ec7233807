"""
Exception hierarchy shared by every sub-package. Each class carries the exit
code the command-line front-end reports for it.
"""
from typing import Optional


class ToolkitError(Exception):
    """Base class for all errors raised by the toolkit."""
    exit_code: int = 1


# Solver failures (exit 2)

class SolverFailure(ToolkitError, RuntimeError):
    exit_code: int = 2

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual: Optional[float] = residual


class DegenerateOrbitError(SolverFailure):
    pass


class ChainLostError(SolverFailure):
    pass


class NoTangencyInRange(SolverFailure):
    pass


class TangentialIntersectionError(SolverFailure):
    pass


class DegenerateFoldError(SolverFailure):
    pass


class EscapeError(SolverFailure):
    def __init__(self, message: str, escape_time: int):
        super().__init__(message)
        self.escape_time: int = escape_time


# Precondition violations (exit 3)

class PreconditionError(ToolkitError, ValueError):
    exit_code: int = 3


class BracketError(PreconditionError):
    pass


class ExtrapolationRefused(PreconditionError):
    pass


class UnsupportedOperation(PreconditionError):
    pass


class EmptyThetaWindow(PreconditionError):
    pass


class InvalidDimension(PreconditionError):
    pass


class SchemaError(PreconditionError):
    pass


# Precision floor (exit 4)

class PrecisionExhausted(ToolkitError):
    exit_code: int = 4


# Configuration (exit 5)

class ConfigError(ToolkitError, ValueError):
    exit_code: int = 5
