"""Exception types shared across modules."""
from __future__ import annotations


class CefoliatorError(Exception):
    """Base class for all package errors."""


class DomainError(CefoliatorError, ValueError):
    """A point lies outside the domain of an initial-data provider."""


class GridParseError(CefoliatorError, ValueError):
    """Malformed grid or surface file; ``offset`` is the byte position of the fault."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class GeometryError(CefoliatorError, ArithmeticError):
    """Degenerate induced metric or otherwise unrepresentable surface."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class SolverError(CefoliatorError):
    """Base class for failures of the nonlinear solvers.

    ``trace`` holds whatever records were accumulated before the failure.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class NewtonDivergence(SolverError):
    pass


class SingularJacobian(SolverError):
    pass


class ContinuationBreakdown(SolverError):
    def __init__(self, message, last_b, trace=None, surface=None):
        super().__init__(message, trace)
        self.last_b = last_b
        self.surface = surface


class ConfigError(CefoliatorError, ValueError):
    """Invalid run configuration."""
