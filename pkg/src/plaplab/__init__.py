"""Numerical laboratory for weighted regularity estimates of the p-Laplace equation."""

from .fields import CellMask, DomainError, GridDomain, JetField, ScalarField, VectorField, integrate, jet
from .solver import ProblemSpec, SolveReport, SolverError, continuation_solve, picard_solve, residual

__version__ = "0.1.0"

__all__ = [
    "CellMask",
    "DomainError",
    "GridDomain",
    "JetField",
    "ProblemSpec",
    "ScalarField",
    "SolveReport",
    "SolverError",
    "VectorField",
    "continuation_solve",
    "integrate",
    "jet",
    "picard_solve",
    "residual",
]
