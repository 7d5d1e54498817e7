"""Solver configuration and validation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

_SQRT_EPS = float(np.sqrt(np.finfo(float).eps))

SIGMA_STRATEGIES = ("conservative", "spectral")
ACCEL_MODES = ("none", "secant", "anderson")


@dataclass
class SolverConfig:
    """Tunables of the residual solver and its acceleration step.

    Unset ``sigma_strategy`` / ``sigma_min`` / ``sigma_max`` are resolved at
    construction: the secant-accelerated method defaults to the conservative
    scaling schedule with bounds [sqrt(eps_mach), 1], the plain method to the
    spectral schedule with bounds [sqrt(eps_mach), 1/sqrt(eps_mach)].
    """

    tol: float = 1e-8
    gamma: float = 1e-4
    tau_min: float = 0.1
    tau_max: float = 0.5
    nonmonotone_memory: int = 10
    depth: int = 5
    h_init: float = 1.0
    h_small: float = 0.1
    h_large: float = 0.1
    accel_mode: str = "secant"
    anderson_beta: float = 1.0
    sigma_strategy: Optional[str] = None
    sigma_min: Optional[float] = None
    sigma_max: Optional[float] = None
    max_iters: int = 1_000_000
    max_fevals: int = 2_000_000
    random_safeguard: bool = False
    alpha_small: float = 1e-8
    seed: Optional[int] = None
    accel_step_bound: Optional[float] = None

    def __post_init__(self):
        if self.accel_mode not in ACCEL_MODES:
            raise ValueError(f"accel_mode must be one of {ACCEL_MODES}")
        if self.sigma_strategy is None:
            self.sigma_strategy = ("conservative" if self.accel_mode == "secant"
                                   else "spectral")
        if self.sigma_strategy not in SIGMA_STRATEGIES:
            raise ValueError(f"sigma_strategy must be one of {SIGMA_STRATEGIES}")
        if self.sigma_min is None:
            self.sigma_min = _SQRT_EPS
        if self.sigma_max is None:
            self.sigma_max = 1.0 if self.sigma_strategy == "conservative" else 1.0 / _SQRT_EPS
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0.0 < self.sigma_min < self.sigma_max:
            raise ValueError("need 0 < sigma_min < sigma_max")
        if not 0.0 < self.tau_min < self.tau_max < 1.0:
            raise ValueError("need 0 < tau_min < tau_max < 1")
        if self.nonmonotone_memory < 1:
            raise ValueError("nonmonotone_memory must be positive")
        if self.depth < 1:
            raise ValueError("depth must be positive")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        for name in ("h_init", "h_small", "h_large"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.max_iters < 1 or self.max_fevals < 1:
            raise ValueError("iteration and evaluation budgets must be positive")
        if self.alpha_small <= 0.0:
            raise ValueError("alpha_small must be positive")
        if self.accel_step_bound is not None and self.accel_step_bound <= 0.0:
            raise ValueError("accel_step_bound must be positive when set")
