"""Limited-memory secant acceleration and the Anderson Mixing step.

The accelerated point solves min-norm least squares over the stored
increment/residual-difference pairs,

    x_accel = x_k - S * pinv(Y) * F(x_k),

with probe columns injected when Y loses numerical rank, a restart when the
rank hits zero, and guards that fall back to the line-search trial point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SolverConfig
from .qr import UpdatableQR


class SecantMemory:
    """Paired columns (S, Y) of recent increments and residual differences.

    Holds at most ``depth`` pairs together with a live QR factorization of
    Y, the highest numerical rank seen so far, and the cycling index of the
    next probe coordinate.
    """

    def __init__(self, dim: int, depth: int, rank_tol: float | None = None):
        self.dim = dim
        self.depth = depth
        self.s_cols: list[np.ndarray] = []
        self.y_cols: list[np.ndarray] = []
        self.qr = UpdatableQR(dim, depth, rank_tol)
        self.r_max = 0
        self.probe_index = 1  # 1-based coordinate, cycles mod dim

    @property
    def size(self) -> int:
        return len(self.s_cols)

    def rank(self) -> int:
        return self.qr.rank()

    def push_pair(self, s: np.ndarray, y: np.ndarray) -> None:
        """Append a pair on the right, evicting the leftmost pair when full."""
        if self.size == self.depth:
            self.s_cols.pop(0)
            self.y_cols.pop(0)
            self.qr.remove_leftmost()
        self.s_cols.append(np.asarray(s, dtype=float))
        self.y_cols.append(np.asarray(y, dtype=float))
        self.qr.append(self.y_cols[-1])
        self.r_max = max(self.r_max, self.rank())

    def drop_rightmost(self) -> None:
        self.s_cols.pop()
        self.y_cols.pop()
        self.qr.remove_rightmost()

    def replace_rightmost_pair(self, s: np.ndarray, y: np.ndarray) -> None:
        """Substitute the rightmost pair (plain append when the memory is empty)."""
        if self.size == 0:
            self.push_pair(s, y)
            return
        self.s_cols[-1] = np.asarray(s, dtype=float)
        self.y_cols[-1] = np.asarray(y, dtype=float)
        self.qr.replace_rightmost(self.y_cols[-1])
        self.r_max = max(self.r_max, self.rank())

    def reset(self) -> None:
        """Empty the memory; the observed max rank and probe index persist."""
        self.s_cols.clear()
        self.y_cols.clear()
        self.qr.clear()

    def advance_probe(self) -> None:
        self.probe_index = self.probe_index % self.dim + 1

    def s_matrix(self) -> np.ndarray:
        return np.column_stack(self.s_cols)

    def y_matrix(self) -> np.ndarray:
        return np.column_stack(self.y_cols)


@dataclass
class AccelDecision:
    """Outcome of one acceleration attempt (never worse than the trial point)."""

    x_next: np.ndarray
    F_next: np.ndarray
    branch: str  # "trial" or "accelerated"
    extra_evals: int
    memory_action: str  # "substituted_rightmost", "kept_trial_pair", "restarted"


def accelerate(problem, x_k, F_k, x_trial, F_trial, mem: SecantMemory,
               cfg: SolverConfig) -> AccelDecision:
    """One acceleration attempt given the accepted line-search trial point.

    Updates ``mem`` in place: the trial pair is recorded, a probe pair from
    x_k + h_small*e_l is injected (and removed again after the solve) when
    the rank dropped below the best seen, and a zero-rank memory triggers a
    from-scratch restart with h_large probes.  The accelerated point is kept
    only if it beats the trial residual norm and passes the step guards.
    """
    mem.push_pair(x_trial - x_k, F_trial - F_k)
    extra = 0

    probe_added = False
    if mem.rank() < mem.r_max:
        x_extra = x_k.copy()
        x_extra[mem.probe_index - 1] += cfg.h_small
        F_extra = problem.evaluate(x_extra)
        extra += 1
        mem.push_pair(x_extra - x_k, F_extra - F_k)
        mem.advance_probe()
        probe_added = True

    if mem.rank() != 0:
        omega = mem.qr.solve_min_norm(F_k)
        x_accel = x_k - mem.s_matrix() @ omega
        if probe_added:
            mem.drop_rightmost()
        accepted, F_accel, guard_evals = _guarded_residual(
            problem, x_k, F_k, F_trial, x_accel, cfg)
        extra += guard_evals
        if accepted:
            mem.replace_rightmost_pair(x_accel - x_k, F_accel - F_k)
            return AccelDecision(x_accel, F_accel, "accelerated", extra,
                                 "substituted_rightmost")
        return AccelDecision(x_trial, F_trial, "trial", extra, "kept_trial_pair")

    # Zero rank: rebuild the memory from scratch around the trial point.
    mem.reset()
    for _ in range(mem.depth - 1):
        x_extra = x_k.copy()
        x_extra[mem.probe_index - 1] += cfg.h_large
        F_extra = problem.evaluate(x_extra)
        extra += 1
        mem.push_pair(x_extra - x_trial, F_extra - F_trial)
        mem.advance_probe()
    mem.push_pair(x_trial - x_k, F_trial - F_k)

    if mem.rank() == 0:
        return AccelDecision(x_trial, F_trial, "trial", extra, "restarted")
    omega = mem.qr.solve_min_norm(F_k)
    x_accel = x_k - mem.s_matrix() @ omega
    accepted, F_accel, guard_evals = _guarded_residual(
        problem, x_k, F_k, F_trial, x_accel, cfg)
    extra += guard_evals
    if accepted:
        mem.replace_rightmost_pair(x_accel - x_k, F_accel - F_k)
    return AccelDecision(x_accel if accepted else x_trial,
                         F_accel if accepted else F_trial,
                         "accelerated" if accepted else "trial",
                         extra, "restarted")


def _guarded_residual(problem, x_k, F_k, F_trial, x_accel, cfg):
    """Apply the cheap step guards, then the residual-decrease test.

    F(x_accel) is evaluated only when the cheap guards pass; returns
    (accepted, F_accel or None, evals_spent).
    """
    if np.array_equal(x_accel, x_k):
        return False, None, 0
    if np.linalg.norm(x_accel) > 10.0 * max(1.0, np.linalg.norm(x_k)):
        return False, None, 0
    if (cfg.accel_step_bound is not None
            and np.linalg.norm(x_accel - x_k)
            > cfg.accel_step_bound * np.linalg.norm(F_k)):
        return False, None, 0
    F_accel = problem.evaluate(x_accel)
    if np.linalg.norm(F_accel) < np.linalg.norm(F_trial):
        return True, F_accel, 1
    return False, None, 1


class SecantAccelerator:
    """Stateful wrapper binding a SecantMemory to the solver's Step-3 hook."""

    def __init__(self, dim: int, cfg: SolverConfig, rank_tol: float | None = None):
        self.memory = SecantMemory(dim, cfg.depth, rank_tol)
        self.cfg = cfg

    def __call__(self, problem, x_k, F_k, x_trial, F_trial) -> AccelDecision:
        return accelerate(problem, x_k, F_k, x_trial, F_trial, self.memory, self.cfg)


def anderson_step(x_k, F_k, mem: SecantMemory, beta: float) -> np.ndarray:
    """One Anderson Mixing update from the stored fixed-point history.

    Projects out the span of the stored residual differences and damps the
    leftover residual by beta; with an empty memory this is plain mixing
    x_k - beta*F(x_k).  Evaluates nothing.
    """
    if mem.size == 0:
        return x_k - beta * F_k
    omega = mem.qr.solve_min_norm(F_k)
    x_bar = x_k - mem.s_matrix() @ omega
    f_bar = F_k - mem.y_matrix() @ omega
    return x_bar - beta * f_bar
