"""Updatable orthogonal-triangular factorization of a tall, skinny matrix.

Maintains Y = Q R for an n-by-m matrix Y with m <= capacity << n, under
column append, leftmost-column removal and rightmost-column replacement,
each in O(n*m) flops.  Rank queries and minimum-norm least-squares solves
work on the small m-by-m triangle, so a solve costs O(n*m + m^2) in the
full-rank case and O(n*m + m^3) when the triangle is rank deficient.

The design envelope is tall (m <= n).  Wide states (m > n), which only
arise on toy-sized problems, stay correct by refactorizing from the stored
columns on every update; Q then carries zero tail columns beyond n.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

_EPS = float(np.finfo(float).eps)

# Frequency of the unconditional orthogonality audit, and the fraction of
# the 1e-12*m drift budget at which a rebuild from stored columns triggers.
_DRIFT_CHECK_EVERY = 64
_DRIFT_BUDGET = 1e-12


def default_rank_tol() -> float:
    """Relative tolerance used to decide the numerical rank (sqrt of machine eps)."""
    return float(np.sqrt(_EPS))


class UpdatableQR:
    """QR factorization of a tall matrix supporting cheap column updates.

    Q keeps orthonormal columns even when dependent columns are inserted
    (a filler direction orthogonal to the current range is used), so the
    triangle R carries the rank information.  A copy of the logical matrix
    is retained for periodic re-orthogonalization.
    """

    def __init__(self, dim: int, capacity: int, rank_tol: float | None = None):
        if dim < 1 or capacity < 1:
            raise ValueError("dim and capacity must be positive")
        self.dim = dim
        self.capacity = capacity
        self.rank_tol = default_rank_tol() if rank_tol is None else float(rank_tol)
        self._q = np.zeros((dim, capacity))
        self._r = np.zeros((capacity, capacity))
        self._cols = np.zeros((dim, capacity))
        self._m = 0
        self._updates = 0
        self._cached_rank: int | None = 0

    @classmethod
    def from_columns(cls, cols, capacity: int | None = None,
                     rank_tol: float | None = None) -> "UpdatableQR":
        """Factorize a sequence of equal-length columns from scratch, O(n*m^2)."""
        cols = [np.asarray(c, dtype=float) for c in cols]
        if not cols:
            raise ValueError("from_columns needs at least one column to fix the "
                             "dimension; construct UpdatableQR(dim, capacity) "
                             "directly for an empty factorization")
        dim = cols[0].shape[0]
        for c in cols:
            if c.shape != (dim,):
                raise ValueError("columns must share one dimension")
        cap = len(cols) if capacity is None else capacity
        if len(cols) > cap:
            raise ValueError("more columns than capacity")
        qr = cls(dim, cap, rank_tol)
        qr._cols[:, :len(cols)] = np.column_stack(cols)
        qr._m = len(cols)
        qr._refactorize()
        return qr

    # -- views -----------------------------------------------------------

    @property
    def ncols(self) -> int:
        return self._m

    @property
    def Q(self) -> np.ndarray:
        return self._q[:, :self._m]

    @property
    def R(self) -> np.ndarray:
        return self._r[:self._m, :self._m]

    def matrix(self) -> np.ndarray:
        """The logically stored matrix Y (copy)."""
        return self._cols[:, :self._m].copy()

    # -- updates ---------------------------------------------------------

    def append(self, col) -> None:
        """Append a column on the right; O(n*m)."""
        col = np.asarray(col, dtype=float)
        if col.shape != (self.dim,):
            raise ValueError(f"column has shape {col.shape}, expected ({self.dim},)")
        if self._m == self.capacity:
            raise ValueError("capacity exceeded")
        m = self._m
        self._cols[:, m] = col
        self._m = m + 1
        if self._m > self.dim:
            self._refactorize()
            self._bump()
            return
        q = self._q[:, :m]
        coeffs = q.T @ col
        w = col - q @ coeffs
        col_norm = np.linalg.norm(col)
        # Twice-is-enough: re-project once if cancellation ate over half the norm.
        if np.linalg.norm(w) < 0.5 * col_norm:
            corr = q.T @ w
            w -= q @ corr
            coeffs += corr
        rho = np.linalg.norm(w)
        if rho > self.dim * _EPS * col_norm:
            new_q = w / rho
        else:
            # Dependent (or zero) column: keep Q orthonormal with a filler
            # direction and record an exact zero on the diagonal, so the
            # triangle carries the deficiency.
            new_q = self._filler_direction(q)
            rho = 0.0
        self._q[:, m] = new_q
        self._r[:m, m] = coeffs
        self._r[m, m] = rho
        self._r[m, :m] = 0.0
        self._bump()

    def remove_leftmost(self) -> None:
        """Drop the first column and re-triangularize with plane rotations; O(n*m)."""
        if self._m == 0:
            raise ValueError("empty factorization")
        m = self._m
        self._cols[:, :m - 1] = self._cols[:, 1:m]
        if m > self.dim:
            self._m = m - 1
            self._refactorize()
            self._bump()
            return
        h = self._r[:m, 1:m]  # m x (m-1) upper Hessenberg view
        for i in range(m - 1):
            c, s = _givens(h[i, i], h[i + 1, i])
            if s != 0.0:
                rows = h[[i, i + 1], i:]
                h[i, i:] = c * rows[0] + s * rows[1]
                h[i + 1, i:] = -s * rows[0] + c * rows[1]
                qcols = self._q[:, [i, i + 1]]
                self._q[:, i] = c * qcols[:, 0] + s * qcols[:, 1]
                self._q[:, i + 1] = -s * qcols[:, 0] + c * qcols[:, 1]
            h[i + 1, i] = 0.0
        self._r[:m - 1, :m - 1] = h[:m - 1, :].copy()
        self._r[:m, m - 1] = 0.0
        self._m = m - 1
        self._bump()

    def remove_rightmost(self) -> None:
        """Drop the last column; pure truncation, no rotations needed."""
        if self._m == 0:
            raise ValueError("empty factorization")
        self._m -= 1
        self._bump()

    def replace_rightmost(self, col) -> None:
        """Replace the last column: truncate then append; O(n*m)."""
        if self._m == 0:
            raise ValueError("empty factorization")
        self._m -= 1
        self.append(col)

    def clear(self) -> None:
        self._m = 0
        self._cached_rank = 0

    # -- queries ---------------------------------------------------------

    def rank(self) -> int:
        """Numerical rank via a column-pivoted refactorization of the triangle."""
        if self._cached_rank is None:
            self._cached_rank = self._compute_rank()
        return self._cached_rank

    def solve_min_norm(self, rhs) -> np.ndarray:
        """Minimum-norm least-squares solution of Y w = rhs.

        Full-rank path: back substitution on the triangle.  Rank-deficient
        path: complete orthogonal decomposition of the pivoted triangle.
        """
        rhs = np.asarray(rhs, dtype=float)
        if self._m == 0:
            raise ValueError("empty factorization")
        if rhs.shape != (self.dim,):
            raise ValueError(f"rhs has shape {rhs.shape}, expected ({self.dim},)")
        m = self._m
        qtb = self.Q.T @ rhs
        r = self.rank()
        if r == m:
            return scipy.linalg.solve_triangular(self.R, qtb)
        if r == 0:
            return np.zeros(m)
        q2, tri, piv = scipy.linalg.qr(self.R, pivoting=True)
        # Treat the below-tolerance block as zero; T1 has full row rank r.
        t1 = tri[:r, :]
        z, u = np.linalg.qr(t1.T)  # T1^T = Z U  =>  T1 = U^T Z^T
        c = q2.T @ qtb
        y = scipy.linalg.solve_triangular(u, c[:r], trans="T")
        mu = z @ y
        omega = np.empty(m)
        omega[piv] = mu
        return omega

    def orthogonality_drift(self) -> float:
        """Frobenius distance of Q^T Q from the identity (tall states only)."""
        m = self._m
        if m == 0:
            return 0.0
        return float(np.linalg.norm(self.Q.T @ self.Q - np.eye(m)))

    # -- internals --------------------------------------------------------

    def _bump(self) -> None:
        self._cached_rank = None
        self._updates += 1
        if (self._updates % _DRIFT_CHECK_EVERY == 0
                and 0 < self._m <= self.dim
                and self.orthogonality_drift() > 0.5 * _DRIFT_BUDGET * self._m):
            self._refactorize()

    def _refactorize(self) -> None:
        m = self._m
        if m == 0:
            self._cached_rank = 0
            return
        q, r = np.linalg.qr(self._cols[:, :m], mode="reduced")
        k = q.shape[1]  # min(m, dim)
        # Normalize to a nonnegative diagonal so factors are reproducible.
        flip = np.sign(np.diagonal(r).copy())
        flip[flip == 0] = 1.0
        self._q[:, :k] = q * flip
        self._q[:, k:m] = 0.0
        self._r[:k, :m] = flip[:, None] * r
        self._r[k:m, :m] = 0.0
        self._cached_rank = None

    def _compute_rank(self) -> int:
        m = self._m
        if m == 0:
            return 0
        diag = np.abs(np.diag(scipy.linalg.qr(self.R, mode="r", pivoting=True)[0]))
        if diag.size == 0 or diag[0] == 0.0:
            return 0
        return int(np.count_nonzero(diag > self.rank_tol * diag[0]))

    def _filler_direction(self, q: np.ndarray) -> np.ndarray:
        # First canonical basis vector keeping a solid component outside
        # range(Q); deterministic, and guaranteed to exist while m < n.
        m = q.shape[1]
        if m == 0:
            e = np.zeros(self.dim)
            e[0] = 1.0
            return e
        floor = 0.1 * np.sqrt((self.dim - m) / self.dim)
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            w = e - q @ (q.T @ e)
            w -= q @ (q.T @ w)
            norm = np.linalg.norm(w)
            if norm >= floor:
                return w / norm
        raise ValueError("no direction orthogonal to range(Q) found")


def _givens(a: float, b: float) -> tuple[float, float]:
    """Rotation (c, s) with [[c, s], [-s, c]] @ [a, b] = [r, 0]."""
    if b == 0.0:
        return 1.0, 0.0
    r = float(np.hypot(a, b))
    return a / r, b / r
