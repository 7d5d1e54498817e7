"""Sequential residual solver with nonmonotone line search and acceleration.

The driver iterates: check the stopping test, pick a scaling factor sigma
and a residual-related direction v (||v|| = ||F(x)||), run a two-sided
backtracking search accepted against the worst merit value of the last M
iterates plus a vanishing allowance, and hand the accepted trial point to a
pluggable accelerator that may only improve it.  Anderson Mixing runs as a
separate fixed-point driver without a line search.
"""

from __future__ import annotations

import time
from collections import deque
from typing import Callable, NamedTuple, Optional

import numpy as np
from dataclasses import dataclass, field

from .accel import SecantAccelerator, SecantMemory, anderson_step
from .config import SolverConfig
from .errors import EvaluationError, LineSearchError
from .problems import ResidualProblem

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERATIONS = "max_iterations"
STATUS_MAX_FEVALS = "max_fevals"
STATUS_LINE_SEARCH_FAILURE = "line_search_failure"
STATUS_EVALUATION_ERROR = "evaluation_error"

# Below this step size on both branches the backtracking loop gives up;
# exact arithmetic would accept eventually, finite precision stalls.
ALPHA_FLOOR = 1e-30

# Residual growth factor, relative to the start, at which the Anderson
# driver declares divergence.
_DIVERGENCE_FACTOR = 1e12


def merit(f_val) -> float:
    """Sum-of-squares merit 0.5*||F||^2 used by all acceptance tests."""
    norm = float(np.linalg.norm(f_val))
    return 0.5 * norm * norm


def forcing_term(k: int, f0_norm: float) -> float:
    """Geometric allowance 2^-k * min(f0_norm/2, sqrt(f0_norm)); summable in k."""
    return 2.0 ** (-k) * min(0.5 * f0_norm, np.sqrt(f0_norm))


class NonmonotoneMemory:
    """Ring of the last up-to-M merit values; acceptance compares against its max."""

    def __init__(self, capacity: int):
        self._ring: deque[float] = deque(maxlen=capacity)

    def push(self, value: float) -> None:
        self._ring.append(float(value))

    def max(self) -> float:
        if not self._ring:
            raise ValueError("empty nonmonotone memory")
        return max(self._ring)

    def __len__(self) -> int:
        return len(self._ring)


def _clamp_magnitude(sigma: float, lo: float, hi: float) -> float:
    if sigma == 0.0:
        return lo
    return float(np.copysign(min(max(abs(sigma), lo), hi), sigma))


def spectral_step(s_prev, y_prev, sigma_min: float, sigma_max: float) -> float:
    """Scalar secant fit ||s||^2 / (y.s), sign kept, magnitude clamped.

    Falls back to 1 (then clamped) on a zero denominator or zero step.
    """
    s_prev = np.asarray(s_prev, dtype=float)
    y_prev = np.asarray(y_prev, dtype=float)
    ss = float(s_prev @ s_prev)
    ys = float(y_prev @ s_prev)
    sigma = ss / ys if ys != 0.0 and ss != 0.0 else 1.0
    if not np.isfinite(sigma):
        sigma = 1.0
    return _clamp_magnitude(sigma, sigma_min, sigma_max)


def conservative_step(k: int, x_prev, x_cur, f_norm: float, h_init: float,
                      sigma_min: float, sigma_max: float) -> float:
    """Small scaling factor h_init*||x_k - x_{k-1}||/||F(x_k)||, projected.

    Returns 1 at k=0.  When the primary value leaves the admissible interval
    [max(1,||x_k||)*sigma_min, sigma_max], the alternative based on ||x_k||
    is projected onto that interval instead.
    """
    if k == 0:
        return 1.0
    x_prev = np.asarray(x_prev, dtype=float)
    x_cur = np.asarray(x_cur, dtype=float)
    lo = max(1.0, float(np.linalg.norm(x_cur))) * sigma_min
    hi = sigma_max
    primary = h_init * float(np.linalg.norm(x_cur - x_prev)) / f_norm
    if lo <= primary <= hi:
        return primary
    alternative = h_init * float(np.linalg.norm(x_cur)) / f_norm
    return min(max(alternative, lo), hi)


def quadratic_backtrack(alpha: float, f_x: float, f_trial: float,
                        tau_min: float, tau_max: float) -> float:
    """Next step size from the interpolating quadratic, safeguarded.

    The minimizer alpha^2*f_x / (f_trial + (2*alpha-1)*f_x) is clipped into
    [tau_min*alpha, tau_max*alpha]; a non-finite quotient yields tau_max*alpha.
    """
    lo = tau_min * alpha
    hi = tau_max * alpha
    denom = f_trial + (2.0 * alpha - 1.0) * f_x
    if denom == 0.0:
        return hi
    quotient = alpha * alpha * f_x / denom
    if not np.isfinite(quotient):
        return hi
    return max(lo, min(quotient, hi))


def random_sphere_direction(rng: np.random.Generator, dim: int,
                            radius: float) -> np.ndarray:
    """Uniform point on the sphere of the given radius (normalized Gaussian)."""
    while True:
        g = rng.standard_normal(dim)
        norm = np.linalg.norm(g)
        if norm > 0.0:
            return (radius / norm) * g


class LineSearchResult(NamedTuple):
    alpha: float
    direction: np.ndarray
    sign: str  # "-" for d = -sigma*v, "+" for d = +sigma*v
    x_new: np.ndarray
    F_new: np.ndarray
    evals: int


def line_search(problem, x, F_x, v, sigma: float, fbar: float, eta: float,
                cfg: SolverConfig) -> LineSearchResult:
    """Two-sided backtracking accepted by f(x+a*d) <= fbar + eta - gamma*a^2*f(x).

    Probes d = -sigma*v first, then d = +sigma*v, each with its own step
    size; both step sizes shrink by the interpolating quadratic until one
    branch is accepted.  Requires ||v|| = ||F(x)||, sigma != 0, eta > 0 and
    fbar >= f(x).  Raises LineSearchError when both step sizes stall below
    the floor.
    """
    f_x = merit(F_x)
    gamma = cfg.gamma
    d_minus = -sigma * v
    d_plus = sigma * v
    alpha_p = 1.0
    alpha_m = 1.0
    evals = 0
    while True:
        x_t = x + alpha_p * d_minus
        F_t = problem.evaluate(x_t)
        evals += 1
        f_minus = merit(F_t)
        if f_minus <= fbar + eta - gamma * alpha_p * alpha_p * f_x:
            return LineSearchResult(alpha_p, d_minus, "-", x_t, F_t, evals)
        x_t = x + alpha_m * d_plus
        F_t = problem.evaluate(x_t)
        evals += 1
        f_plus = merit(F_t)
        if f_plus <= fbar + eta - gamma * alpha_m * alpha_m * f_x:
            return LineSearchResult(alpha_m, d_plus, "+", x_t, F_t, evals)
        alpha_p = quadratic_backtrack(alpha_p, f_x, f_minus, cfg.tau_min, cfg.tau_max)
        alpha_m = quadratic_backtrack(alpha_m, f_x, f_plus, cfg.tau_min, cfg.tau_max)
        if alpha_p < ALPHA_FLOOR and alpha_m < ALPHA_FLOOR:
            raise LineSearchError(
                f"both step sizes fell below {ALPHA_FLOOR:g} without acceptance")


@dataclass
class TraceEntry:
    """Per-iteration record of the solve (the state *before* the step)."""

    k: int
    residual_norm: float
    merit: float
    alpha: float
    direction_sign: str
    branch: str
    sigma: float
    cumulative_fevals: int
    elapsed_seconds: float


@dataclass
class SolveReport:
    """Termination status, counters and the per-iteration trace."""

    status: str
    iterations: int
    fevals: int
    final_residual_norm: float
    trace: list = field(default_factory=list)
    x: Optional[np.ndarray] = None

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED


class IterationState(NamedTuple):
    """Full state handed to the solve callback; arrays must not be mutated."""

    k: int
    x: np.ndarray
    F_x: np.ndarray
    sigma: float
    v: np.ndarray
    eta: float
    fbar: float
    alpha: float
    direction_sign: str
    x_trial: np.ndarray
    F_trial: np.ndarray
    x_next: np.ndarray
    F_next: np.ndarray
    branch: str


class _BudgetExceeded(Exception):
    pass


class _CountingEvaluator:
    """Counts every residual evaluation and enforces the evaluation budget."""

    __slots__ = ("_fn", "_dim", "count", "limit")

    def __init__(self, problem: ResidualProblem, limit: int):
        self._fn = problem.evaluate
        self._dim = problem.dim
        self.count = 0
        self.limit = limit

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        if self.count >= self.limit:
            raise _BudgetExceeded
        self.count += 1
        out = np.asarray(self._fn(x), dtype=float)
        if out.shape != (self._dim,):
            raise ValueError(f"residual has shape {out.shape}, "
                             f"expected ({self._dim},)")
        if not np.all(np.isfinite(out)):
            raise EvaluationError("residual evaluation returned non-finite values")
        return out


def solve(problem: ResidualProblem, x0, config: Optional[SolverConfig] = None,
          accelerator: Optional[Callable] = None,
          callback: Optional[Callable[[IterationState], None]] = None) -> SolveReport:
    """Run the solver on F(x) = 0 from x0 until ||F||_2 <= tol or a budget ends.

    ``accelerator`` is any callable ``(evaluator, x_k, F_k, x_trial, F_trial)
    -> AccelDecision``; by default one is built from ``config.accel_mode``.
    The accelerated point is used only if its merit does not exceed the
    trial's.  ``config.accel_mode == "anderson"`` runs the fixed-point
    Anderson Mixing driver instead (no line search).
    """
    cfg = config if config is not None else SolverConfig()
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (problem.dim,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({problem.dim},)")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    evaluator = _CountingEvaluator(problem, cfg.max_fevals)
    if accelerator is None and cfg.accel_mode == "anderson":
        return _solve_anderson(evaluator, x0, cfg)
    if accelerator is None and cfg.accel_mode == "secant":
        accelerator = SecantAccelerator(problem.dim, cfg)
    return _solve_residual(evaluator, x0, cfg, accelerator, callback)


def _choose_sigma(cfg: SolverConfig, k: int, x, x_prev, F, F_prev,
                  f_norm: float) -> float:
    if cfg.sigma_strategy == "conservative":
        sigma = conservative_step(k, x_prev, x, f_norm, cfg.h_init,
                                  cfg.sigma_min, cfg.sigma_max)
    elif k == 0:
        sigma = 1.0
    else:
        sigma = spectral_step(x - x_prev, F - F_prev,
                              cfg.sigma_min, cfg.sigma_max)
    return _clamp_magnitude(sigma, cfg.sigma_min, cfg.sigma_max)


def _solve_residual(evaluator, x0, cfg, accelerator, callback) -> SolveReport:
    start = time.perf_counter()
    trace: list[TraceEntry] = []
    x = x0
    k = 0
    f_norm = float("nan")
    try:
        F = evaluator.evaluate(x)
    except EvaluationError:
        return SolveReport(STATUS_EVALUATION_ERROR, 0, evaluator.count, f_norm, trace, x)
    except _BudgetExceeded:
        return SolveReport(STATUS_MAX_FEVALS, 0, evaluator.count, f_norm, trace, x)
    f_norm = float(np.linalg.norm(F))
    f0_norm = f_norm
    nonmono = NonmonotoneMemory(cfg.nonmonotone_memory)
    rng = np.random.default_rng(cfg.seed) if cfg.random_safeguard else None
    alpha_small = cfg.alpha_small
    x_prev = None
    F_prev = None
    status = None
    try:
        while True:
            if f_norm <= cfg.tol:
                status = STATUS_CONVERGED
                break
            if k >= cfg.max_iters:
                status = STATUS_MAX_ITERATIONS
                break
            sigma = _choose_sigma(cfg, k, x, x_prev, F, F_prev, f_norm)
            eta = forcing_term(k, f0_norm)
            f_x = merit(F)
            nonmono.push(f_x)
            fbar = nonmono.max()
            v = F
            ls = line_search(evaluator, x, F, v, sigma, fbar, eta, cfg)
            if rng is not None and ls.alpha < alpha_small:
                # Discard the residual direction, retry on a random one of
                # the same norm; shrink the threshold when that stalls too.
                v = random_sphere_direction(rng, x.size, f_norm)
                ls = line_search(evaluator, x, F, v, sigma, fbar, eta, cfg)
                if ls.alpha < alpha_small:
                    alpha_small /= 2.0
            if accelerator is not None:
                decision = accelerator(evaluator, x, F, ls.x_new, ls.F_new)
                x_next, F_next = decision.x_next, decision.F_next
                branch = decision.branch
                if merit(F_next) > merit(ls.F_new):
                    # Contract violation by a user accelerator; keep the trial.
                    x_next, F_next, branch = ls.x_new, ls.F_new, "trial"
            else:
                x_next, F_next, branch = ls.x_new, ls.F_new, "trial"
            trace.append(TraceEntry(k, f_norm, f_x, ls.alpha, ls.sign, branch,
                                    sigma, evaluator.count,
                                    time.perf_counter() - start))
            if callback is not None:
                callback(IterationState(k, x, F, sigma, v, eta, fbar, ls.alpha,
                                        ls.sign, ls.x_new, ls.F_new,
                                        x_next, F_next, branch))
            x_prev, F_prev = x, F
            x, F = x_next, F_next
            f_norm = float(np.linalg.norm(F))
            k += 1
    except LineSearchError:
        status = STATUS_LINE_SEARCH_FAILURE
    except EvaluationError:
        status = STATUS_EVALUATION_ERROR
    except _BudgetExceeded:
        status = STATUS_MAX_FEVALS
    return SolveReport(status, k, evaluator.count, f_norm, trace, x)


def _solve_anderson(evaluator, x0, cfg) -> SolveReport:
    start = time.perf_counter()
    trace: list[TraceEntry] = []
    x = x0
    k = 0
    f_norm = float("nan")
    try:
        F = evaluator.evaluate(x)
    except EvaluationError:
        return SolveReport(STATUS_EVALUATION_ERROR, 0, evaluator.count, f_norm, trace, x)
    except _BudgetExceeded:
        return SolveReport(STATUS_MAX_FEVALS, 0, evaluator.count, f_norm, trace, x)
    f_norm = float(np.linalg.norm(F))
    f0_norm = f_norm
    mem = SecantMemory(x0.shape[0], cfg.depth)
    status = None
    try:
        while True:
            if f_norm <= cfg.tol:
                status = STATUS_CONVERGED
                break
            if f_norm > _DIVERGENCE_FACTOR * f0_norm:
                # Diverged; report as an exhausted budget (no extra status).
                status = STATUS_MAX_FEVALS
                break
            if k >= cfg.max_iters:
                status = STATUS_MAX_ITERATIONS
                break
            x_next = anderson_step(x, F, mem, cfg.anderson_beta)
            F_next = evaluator.evaluate(x_next)
            mem.push_pair(x_next - x, F_next - F)
            trace.append(TraceEntry(k, f_norm, merit(F), 1.0, "-", "accelerated",
                                    0.0, evaluator.count,
                                    time.perf_counter() - start))
            x, F = x_next, F_next
            f_norm = float(np.linalg.norm(F))
            k += 1
    except EvaluationError:
        status = STATUS_EVALUATION_ERROR
    except _BudgetExceeded:
        status = STATUS_MAX_FEVALS
    return SolveReport(status, k, evaluator.count, f_norm, trace, x)
