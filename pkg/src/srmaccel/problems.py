"""Benchmark nonlinear systems exposed through the ResidualProblem contract.

The Bratu problems discretize -laplace(u) + theta*exp(u) = phi on the unit
square/cube with homogeneous Dirichlet data, where phi is manufactured from
a sampled reference surface so that the sampled surface is an exact root of
the *discrete* system.  Equations are not scaled by h^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import EvaluationError


@dataclass(frozen=True)
class ResidualProblem:
    """A square nonlinear system F: R^n -> R^n.

    ``evaluate`` must be deterministic and side-effect free; it either
    returns a finite vector or raises :class:`EvaluationError`.
    """

    dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    known_solution: Optional[np.ndarray] = None
    name: str = "custom"
    params: dict = field(default_factory=dict)


def exact_solution(problem: ResidualProblem) -> Optional[np.ndarray]:
    """The stored exact root, or None when the problem does not carry one."""
    if problem.known_solution is None:
        return None
    return problem.known_solution.copy()


def _reference_surface_2d(x, y):
    return 10.0 * x * y * (1.0 - x) * (1.0 - y) * np.exp(x ** 4.5)


def _reference_surface_3d(x, y, z):
    return 10.0 * x * y * z * (1.0 - x) * (1.0 - y) * (1.0 - z) * np.exp(x ** 4.5)


def bratu2d(n_p: int, theta: float) -> ResidualProblem:
    """2D Bratu system on an n_p x n_p grid (5-point stencil, zero boundary)."""
    if n_p < 3:
        raise ValueError("n_p must be at least 3")
    m = n_p - 2
    h = 1.0 / (n_p - 1)
    coords = (np.arange(1, n_p - 1)) * h
    # Interior array axes are (y, x): raveling in C order makes x fastest.
    ubar = _reference_surface_2d(coords[None, :], coords[:, None])

    def raw(u_grid):
        padded = np.zeros((n_p, n_p))
        padded[1:-1, 1:-1] = u_grid
        lap = (padded[:-2, 1:-1] + padded[2:, 1:-1]
               + padded[1:-1, :-2] + padded[1:-1, 2:]
               - 4.0 * u_grid) / h ** 2
        if theta != 0.0:
            with np.errstate(over="ignore"):
                return -lap + theta * np.exp(u_grid)
        return -lap

    phi = raw(ubar)

    def evaluate(u: np.ndarray) -> np.ndarray:
        res = raw(np.asarray(u, dtype=float).reshape(m, m)) - phi
        if not np.all(np.isfinite(res)):
            raise EvaluationError("bratu2d residual overflowed")
        return res.ravel()

    return ResidualProblem(dim=m * m, evaluate=evaluate,
                           known_solution=ubar.ravel().copy(),
                           name="bratu2d", params={"np": n_p, "theta": theta})


def bratu3d(n_p: int, theta: float) -> ResidualProblem:
    """3D Bratu system on an n_p^3 grid (7-point stencil, zero boundary)."""
    if n_p < 3:
        raise ValueError("n_p must be at least 3")
    m = n_p - 2
    h = 1.0 / (n_p - 1)
    coords = (np.arange(1, n_p - 1)) * h
    # Axes (z, y, x); x varies fastest in the raveled vector.
    ubar = _reference_surface_3d(coords[None, None, :],
                                 coords[None, :, None],
                                 coords[:, None, None])

    def raw(u_grid):
        padded = np.zeros((n_p, n_p, n_p))
        padded[1:-1, 1:-1, 1:-1] = u_grid
        lap = (padded[:-2, 1:-1, 1:-1] + padded[2:, 1:-1, 1:-1]
               + padded[1:-1, :-2, 1:-1] + padded[1:-1, 2:, 1:-1]
               + padded[1:-1, 1:-1, :-2] + padded[1:-1, 1:-1, 2:]
               - 6.0 * u_grid) / h ** 2
        if theta != 0.0:
            with np.errstate(over="ignore"):
                return -lap + theta * np.exp(u_grid)
        return -lap

    phi = raw(ubar)

    def evaluate(u: np.ndarray) -> np.ndarray:
        res = raw(np.asarray(u, dtype=float).reshape(m, m, m)) - phi
        if not np.all(np.isfinite(res)):
            raise EvaluationError("bratu3d residual overflowed")
        return res.ravel()

    return ResidualProblem(dim=m ** 3, evaluate=evaluate,
                           known_solution=ubar.ravel().copy(),
                           name="bratu3d", params={"np": n_p, "theta": theta})


def linear_problem(a: np.ndarray, b: np.ndarray) -> ResidualProblem:
    """F(x) = A x - b with the dense-solve root attached when A is nonsingular."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("A must be square")
    n = a.shape[0]
    if b.shape != (n,):
        raise ValueError("b does not match A")
    try:
        root = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        root = None

    def evaluate(x: np.ndarray) -> np.ndarray:
        res = a @ np.asarray(x, dtype=float) - b
        if not np.all(np.isfinite(res)):
            raise EvaluationError("linear residual overflowed")
        return res

    return ResidualProblem(dim=n, evaluate=evaluate, known_solution=root,
                           name="linear", params={"n": n})


def interior_to_flat(n_p: int, *idx: int) -> int:
    """Lexicographic flat index (x fastest) of 0-based interior coordinates."""
    m = n_p - 2
    for i in idx:
        if not 0 <= i < m:
            raise ValueError("interior index out of range")
    flat = 0
    for i in reversed(idx):
        flat = flat * m + i
    return flat


def flat_to_interior(n_p: int, flat: int, ndim: int) -> tuple[int, ...]:
    """Inverse of :func:`interior_to_flat`."""
    m = n_p - 2
    if not 0 <= flat < m ** ndim:
        raise ValueError("flat index out of range")
    idx = []
    for _ in range(ndim):
        idx.append(flat % m)
        flat //= m
    return tuple(idx)
