"""Constant-expansion (CE) and constant-mean-curvature surfaces near infinity
in asymptotically flat initial data sets, with the stability, lapse and ADM
diagnostics that go with them.
"""
from .errors import (
    CefoliatorError,
    ConfigError,
    ContinuationBreakdown,
    DomainError,
    GeometryError,
    GridParseError,
    NewtonDivergence,
    SingularJacobian,
    SolverError,
)
from .initialdata import (
    BowenYorkData,
    FlatData,
    GridData,
    PerturbedData,
    SchwarzschildData,
    load_grid_data,
)
from .solver import SolveConfig, continue_weight, foliation_sweep, solve_prescribed_expansion
from .sphere import SphericalGrid
from .surface import RadialSurface, compute_geometry

__version__ = "0.1.0"

__all__ = [
    "BowenYorkData",
    "CefoliatorError",
    "ConfigError",
    "ContinuationBreakdown",
    "DomainError",
    "FlatData",
    "GeometryError",
    "GridData",
    "GridParseError",
    "NewtonDivergence",
    "PerturbedData",
    "RadialSurface",
    "SchwarzschildData",
    "SingularJacobian",
    "SolveConfig",
    "SolverError",
    "SphericalGrid",
    "compute_geometry",
    "continue_weight",
    "foliation_sweep",
    "load_grid_data",
    "solve_prescribed_expansion",
]
