"""Tests for the updatable QR factorization against rebuild and SVD oracles."""

import numpy as np
import pytest

from srmaccel.qr import UpdatableQR, default_rank_tol


def unit(n, i):
    e = np.zeros(n)
    e[i] = 1.0
    return e


def fact_residual(qr):
    y = qr.matrix()
    if qr.ncols == 0:
        return 0.0
    return np.linalg.norm(y - qr.Q @ qr.R) / max(1.0, np.linalg.norm(y))


def pinv_solve(y, rhs):
    """SVD pseudoinverse oracle for the minimum-norm least-squares solution."""
    return np.linalg.pinv(y, rcond=1e-12) @ rhs


class TestFromColumns:
    def test_single_column_normalization(self):
        qr = UpdatableQR.from_columns([np.array([3.0, 4.0])])
        np.testing.assert_allclose(qr.R, [[5.0]])
        np.testing.assert_allclose(qr.Q[:, 0], [0.6, 0.8])

    def test_empty(self):
        qr = UpdatableQR(3, 4)
        assert qr.ncols == 0
        assert qr.rank() == 0

    def test_identity_columns(self):
        qr = UpdatableQR.from_columns([unit(3, 0), unit(3, 1)])
        np.testing.assert_allclose(qr.R, np.eye(2), atol=1e-15)
        assert qr.rank() == 2

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            UpdatableQR.from_columns([np.zeros(3), np.zeros(4)])


class TestAppend:
    def test_append_unit_column(self):
        qr = UpdatableQR.from_columns([unit(3, 0)], capacity=2)
        qr.append(unit(3, 1))
        np.testing.assert_allclose(qr.R, np.eye(2), atol=1e-15)

    def test_duplicate_keeps_rank(self):
        qr = UpdatableQR.from_columns([np.array([1.0, 2.0, 2.0])], capacity=2)
        assert qr.rank() == 1
        qr.append(np.array([1.0, 2.0, 2.0]))
        assert qr.ncols == 2
        assert qr.rank() == 1
        assert fact_residual(qr) < 1e-12

    def test_append_matches_rebuild(self):
        rng = np.random.default_rng(7)
        cols = [rng.standard_normal(50) for _ in range(5)]
        qr = UpdatableQR.from_columns(cols[:4], capacity=5)
        qr.append(cols[4])
        oracle = UpdatableQR.from_columns(cols)
        # Both normalized to a nonnegative diagonal, factors must agree.
        assert fact_residual(qr) < 1e-12
        sign = np.sign(np.diag(qr.R)) * np.sign(np.diag(oracle.R))
        np.testing.assert_allclose(qr.Q * sign, oracle.Q, atol=1e-10)
        np.testing.assert_allclose(sign[:, None] * qr.R, oracle.R, atol=1e-10)

    def test_capacity_exceeded(self):
        qr = UpdatableQR.from_columns([unit(3, 0)], capacity=1)
        with pytest.raises(ValueError):
            qr.append(unit(3, 1))


class TestRemoveLeftmost:
    def test_basic(self):
        qr = UpdatableQR.from_columns([unit(3, 0), unit(3, 1)])
        qr.remove_leftmost()
        np.testing.assert_allclose(qr.R, [[1.0]])
        np.testing.assert_allclose(qr.matrix()[:, 0], unit(3, 1))

    def test_to_empty(self):
        qr = UpdatableQR.from_columns([unit(3, 0)])
        qr.remove_leftmost()
        assert qr.ncols == 0
        assert qr.rank() == 0
        with pytest.raises(ValueError):
            qr.remove_leftmost()

    def test_matches_rebuild(self):
        rng = np.random.default_rng(11)
        cols = [rng.standard_normal(50) for _ in range(6)]
        qr = UpdatableQR.from_columns(cols)
        qr.remove_leftmost()
        assert fact_residual(qr) < 1e-12
        np.testing.assert_allclose(qr.matrix(), np.column_stack(cols[1:]))
        rhs = rng.standard_normal(50)
        np.testing.assert_allclose(qr.solve_min_norm(rhs),
                                   pinv_solve(qr.matrix(), rhs), atol=1e-10)


class TestReplaceRightmost:
    def test_basic(self):
        qr = UpdatableQR.from_columns([unit(3, 0)])
        qr.replace_rightmost(unit(3, 1))
        np.testing.assert_allclose(qr.matrix()[:, 0], unit(3, 1))

    def test_replace_with_identical_column(self):
        rng = np.random.default_rng(3)
        cols = [rng.standard_normal(20) for _ in range(3)]
        qr = UpdatableQR.from_columns(cols)
        r_before = qr.R.copy()
        qr.replace_rightmost(cols[-1])
        np.testing.assert_allclose(qr.R, r_before, atol=1e-14)

    def test_matches_rebuild(self):
        rng = np.random.default_rng(13)
        cols = [rng.standard_normal(50) for _ in range(5)]
        new = rng.standard_normal(50)
        qr = UpdatableQR.from_columns(cols)
        qr.replace_rightmost(new)
        assert fact_residual(qr) < 1e-12
        np.testing.assert_allclose(qr.matrix(),
                                   np.column_stack(cols[:-1] + [new]))

    def test_empty_raises(self):
        qr = UpdatableQR(3, 2)
        with pytest.raises(ValueError):
            qr.replace_rightmost(unit(3, 0))


class TestRank:
    def test_independent(self):
        qr = UpdatableQR.from_columns([unit(3, 0), unit(3, 1)])
        assert qr.rank() == 2

    def test_duplicate(self):
        qr = UpdatableQR.from_columns([unit(3, 0), unit(3, 0)])
        assert qr.rank() == 1

    def test_near_dependent_matches_svd(self):
        cols = [np.array([1.0, 1.0]), np.array([1.0, 1.0 + 1e-15])]
        qr = UpdatableQR.from_columns(cols)
        svals = np.linalg.svd(np.column_stack(cols), compute_uv=False)
        svd_rank = int(np.sum(svals > default_rank_tol() * svals[0]))
        assert qr.rank() == svd_rank == 1

    def test_zero_matrix(self):
        qr = UpdatableQR.from_columns([np.zeros(4), np.zeros(4)])
        assert qr.rank() == 0


class TestMinNormSolve:
    def test_projection_single_column(self):
        qr = UpdatableQR.from_columns([np.array([1.0, 0.0])])
        np.testing.assert_allclose(qr.solve_min_norm(np.array([2.0, 3.0])), [2.0])

    def test_duplicated_columns_min_norm(self):
        cols = [np.array([1.0, 0.0]), np.array([1.0, 0.0])]
        qr = UpdatableQR.from_columns(cols)
        omega = qr.solve_min_norm(np.array([4.0, 0.0]))
        np.testing.assert_allclose(omega, [2.0, 2.0], atol=1e-12)

    def test_orthonormal_columns(self):
        qr = UpdatableQR.from_columns([unit(3, 0), unit(3, 1)])
        omega = qr.solve_min_norm(np.array([1.0, 2.0, 7.0]))
        np.testing.assert_allclose(omega, [1.0, 2.0], atol=1e-14)

    def test_empty_raises(self):
        qr = UpdatableQR(3, 2)
        with pytest.raises(ValueError):
            qr.solve_min_norm(np.zeros(3))


def random_sequence_checks(seed, n=50, p=8, n_ops=200):
    """Drive a random update sequence, checking residual + solve after each op."""
    rng = np.random.default_rng(seed)
    qr = UpdatableQR(n, p)
    worst_resid = 0.0
    worst_solve = 0.0
    prev_rank = 0
    for _ in range(n_ops):
        ops = ["append"] if qr.ncols == 0 else (
            ["remove", "replace", "solve"] if qr.ncols == p
            else ["append", "remove", "replace", "solve"])
        op = ops[rng.integers(len(ops))]
        if op == "append":
            # One in four appends duplicates an existing column to force
            # rank deficiency.
            if qr.ncols and rng.random() < 0.25:
                col = qr.matrix()[:, rng.integers(qr.ncols)].copy()
            else:
                col = rng.standard_normal(n)
            rank_before = qr.rank()
            qr.append(col)
            assert qr.rank() >= rank_before  # appends never lose rank
        elif op == "remove":
            rank_before = qr.rank()
            qr.remove_leftmost()
            assert qr.rank() <= rank_before
        elif op == "replace":
            qr.replace_rightmost(rng.standard_normal(n))
        worst_resid = max(worst_resid, fact_residual(qr))
        if qr.ncols:
            rhs = rng.standard_normal(n)
            got = qr.solve_min_norm(rhs)
            want = pinv_solve(qr.matrix(), rhs)
            scale = max(1.0, np.linalg.norm(want))
            worst_solve = max(worst_solve, np.linalg.norm(got - want) / scale)
            # Least-squares optimality: the residual is normal to range(Y).
            y = qr.matrix()
            normal = np.linalg.norm(y.T @ (y @ got - rhs))
            assert normal <= 1e-10 * max(1.0, np.linalg.norm(rhs)) * max(
                1.0, np.linalg.norm(y))
        prev_rank = qr.rank()
    assert prev_rank >= 0
    return worst_resid, worst_solve


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_random_update_sequences(seed):
    worst_resid, worst_solve = random_sequence_checks(seed)
    assert worst_resid < 1e-12
    assert worst_solve < 1e-8


def test_min_norm_orthogonal_to_null_space():
    rng = np.random.default_rng(42)
    base = rng.standard_normal((30, 3))
    # Two extra dependent columns create a 2-dimensional null space.
    y = np.column_stack([base, base[:, 0], base[:, 1] + base[:, 2]])
    qr = UpdatableQR.from_columns(list(y.T))
    rhs = rng.standard_normal(30)
    omega = qr.solve_min_norm(rhs)
    _, svals, vt = np.linalg.svd(y)
    null_basis = vt[np.sum(svals > 1e-10 * svals[0]):]
    assert null_basis.shape[0] == 2
    assert np.max(np.abs(null_basis @ omega)) < 1e-8 * max(1.0, np.linalg.norm(omega))


def test_orthogonality_drift_long_sequence():
    rng = np.random.default_rng(5)
    qr = UpdatableQR(40, 6)
    for i in range(1500):
        if qr.ncols == 6 or (qr.ncols and i % 3 == 0):
            qr.remove_leftmost()
        qr.append(rng.standard_normal(40))
        assert qr.orthogonality_drift() <= 1e-12 * max(qr.ncols, 1)


def test_wide_state_stays_correct():
    # More stored columns than the space dimension: toy-problem regime.
    rng = np.random.default_rng(9)
    qr = UpdatableQR(2, 5)
    for _ in range(5):
        qr.append(rng.standard_normal(2))
    assert qr.ncols == 5
    assert qr.rank() == 2
    assert fact_residual(qr) < 1e-12
    rhs = rng.standard_normal(2)
    np.testing.assert_allclose(qr.solve_min_norm(rhs),
                               pinv_solve(qr.matrix(), rhs), atol=1e-9)
    qr.remove_leftmost()
    qr.replace_rightmost(rng.standard_normal(2))
    assert fact_residual(qr) < 1e-12
