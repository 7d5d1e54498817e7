"""Derivative-free solvers for nonlinear systems F(x) = 0.

Sequential residual iterations with nonmonotone line search, optionally
accelerated by a limited-memory sequential-secant step, plus an Anderson
Mixing baseline and benchmark problems.
"""

from .config import SolverConfig
from .errors import EvaluationError, LineSearchError
from .problems import ResidualProblem, bratu2d, bratu3d, exact_solution, linear_problem
from .qr import UpdatableQR
from .accel import AccelDecision, SecantAccelerator, SecantMemory, accelerate, anderson_step
from .solver import (
    NonmonotoneMemory,
    SolveReport,
    TraceEntry,
    conservative_step,
    forcing_term,
    line_search,
    merit,
    quadratic_backtrack,
    solve,
    spectral_step,
)

__version__ = "0.1.0"

__all__ = [
    "AccelDecision",
    "EvaluationError",
    "LineSearchError",
    "NonmonotoneMemory",
    "ResidualProblem",
    "SecantAccelerator",
    "SecantMemory",
    "SolveReport",
    "SolverConfig",
    "TraceEntry",
    "UpdatableQR",
    "accelerate",
    "anderson_step",
    "bratu2d",
    "bratu3d",
    "conservative_step",
    "exact_solution",
    "forcing_term",
    "line_search",
    "linear_problem",
    "merit",
    "quadratic_backtrack",
    "solve",
    "spectral_step",
]
