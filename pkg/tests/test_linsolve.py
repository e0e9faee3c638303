import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_qp
from pcdtomo import golden
from pcdtomo.consistency import intrinsic_adjust, signed_incidence
from pcdtomo.linsolve import (DimensionMismatch, InconsistentSystem, Infeasible, MaxIterations, NonFinite,
                              NotSymmetric, QpOptions, QpProblem, matrix_rank, min_norm_least_squares,
                              moore_penrose, qr_row_reduce, smallest_eigenvalue, solve_qp_barrier)


def low_rank(rng, m, n, r):
    return rng.normal(size=(m, r)) @ rng.normal(size=(r, n)) if r else np.zeros((m, n))


def test_pinv_identity_and_zero():
    assert np.allclose(moore_penrose(np.eye(3)), np.eye(3))
    z = moore_penrose(np.zeros((2, 3)))
    assert z.shape == (3, 2) and not z.any()


def test_pinv_star_gram():
    A = golden.STAR_SIGNED
    P = moore_penrose(A)
    assert np.allclose(A @ P @ A, A, atol=1e-12)
    assert np.allclose(P, A.T @ golden.STAR_GRAM_INV, atol=1e-12)


def test_pinv_rejects_nan():
    with pytest.raises(NonFinite):
        moore_penrose(np.array([[1.0, np.nan]]))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 12), st.integers(0, 2 ** 31))
def test_penrose_conditions(m, n, r, seed):
    rng = np.random.default_rng(seed)
    A = low_rank(rng, m, n, min(r, m, n))
    P = moore_penrose(A)
    tol = 1e-9 * max(1.0, np.linalg.norm(A, 2))
    assert np.abs(A @ P @ A - A).max() <= tol
    assert np.abs(P @ A @ P - P).max() <= tol * max(1.0, np.linalg.norm(P, 2) ** 2)
    assert np.abs((A @ P).T - A @ P).max() <= tol
    assert np.abs((P @ A).T - P @ A).max() <= tol
    assert matrix_rank(A) == min(r, m, n)


def test_min_norm_examples():
    eta = np.array([1.0, -2.0, 3.0])
    assert np.allclose(min_norm_least_squares(np.eye(3), eta), eta)
    assert min_norm_least_squares(np.ones((2, 1)), [0.0, 2.0]) == pytest.approx([1.0])
    w0 = 7.0
    eta = golden.CROSSING_TARGETS - golden.CROSSING_MATRIX @ np.full(4, w0)
    assert np.allclose(min_norm_least_squares(golden.CROSSING_MATRIX, eta), 43 / 4 - w0)
    with pytest.raises(DimensionMismatch):
        min_norm_least_squares(np.eye(2), [1.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.integers(2, 10), st.integers(0, 2 ** 31))
def test_min_norm_orthogonal_to_null_space(m, n, seed):
    rng = np.random.default_rng(seed)
    A = low_rank(rng, m, n, max(1, min(m, n) - 1))
    d = min_norm_least_squares(A, rng.normal(size=m))
    _, s, vt = np.linalg.svd(A)
    null = vt[(s > 1e-10 * s[0]).sum():]
    assert np.abs(null @ d).max(initial=0.0) <= 1e-9


def test_qr_row_reduce_examples():
    A = golden.CROSSING_MATRIX
    Ab, zb = qr_row_reduce(A, np.full(4, 21.5))
    assert Ab.shape == (3, 4)
    x = np.linalg.lstsq(Ab, zb, rcond=None)[0]
    assert np.allclose(A @ x, 21.5)
    with pytest.raises(InconsistentSystem):
        qr_row_reduce(A, golden.CROSSING_TARGETS)
    full = np.array([[1.0, 2.0], [3.0, 4.0]])
    Ab, zb = qr_row_reduce(full, [1.0, 1.0])
    assert Ab.shape == (2, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.integers(2, 9), st.integers(0, 2 ** 31))
def test_qr_row_reduce_same_solutions(m, n, seed):
    rng = np.random.default_rng(seed)
    A = low_rank(rng, m, n, max(1, min(m, n) - 1))
    z = A @ rng.normal(size=n)
    Ab, zb = qr_row_reduce(A, z)
    x = np.linalg.lstsq(Ab, zb, rcond=None)[0]
    assert np.abs(A @ x - z).max() <= 1e-9 * max(1.0, np.abs(z).max())


def test_smallest_eigenvalue():
    assert smallest_eigenvalue(np.eye(3)) == pytest.approx(1.0)
    assert smallest_eigenvalue(np.diag([5.0, 3.0, 7.0])) == pytest.approx(3.0)
    A = golden.STAR_SIGNED
    assert smallest_eigenvalue(A @ A.T) == pytest.approx(2.0, abs=1e-9)
    with pytest.raises(NotSymmetric):
        smallest_eigenvalue(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_qp_interior_optimum():
    prob = QpProblem(2 * np.eye(2), -2 * np.array([1.0, 1.0]), [[1.0, 1.0]], [2.0])
    assert solve_qp_barrier(prob) == pytest.approx([1.0, 1.0], abs=1e-6)


def test_qp_boundary_optimum():
    prob = QpProblem(2 * np.eye(2), -2 * np.array([3.0, -1.0]), [[1.0, 1.0]], [2.0])
    assert solve_qp_barrier(prob) == pytest.approx([2.0, 0.0], abs=1e-6)


def test_qp_star_matches_closed_form():
    trees = golden.star_trees(0.01)
    A = signed_incidence(trees)
    w = trees.weight_vector()
    x = solve_qp_barrier(QpProblem(2 * np.eye(w.size), -2 * w, A, np.zeros(A.shape[0])))
    assert np.abs(x - intrinsic_adjust(trees).weights).max() <= 1e-6


def test_qp_infeasible():
    with pytest.raises(Infeasible):
        solve_qp_barrier(QpProblem(np.eye(2), np.zeros(2), [[1.0, 1.0]], [-1.0]))


def test_qp_max_iterations():
    prob = QpProblem(2 * np.eye(2), -2 * np.array([3.0, -1.0]), [[1.0, 1.0]], [2.0])
    with pytest.raises(MaxIterations):
        solve_qp_barrier(prob, QpOptions(max_iter=2))


def test_qp_iterates_stay_positive():
    prob = QpProblem(2 * np.eye(3), -2 * np.array([3.0, -1.0, 0.5]), [[1.0, 1.0, 1.0]], [2.0])
    x, state = solve_qp_barrier(prob, return_state=True)
    assert state.x.min() > 0 and state.s.min() > 0
    assert state.iterations <= 200


def random_qp(rng, n):
    M = rng.normal(size=(n, n))
    H = M @ M.T + 0.1 * np.eye(n)
    c = rng.normal(size=n)
    m = int(rng.integers(0, n))
    B = rng.normal(size=(m, n))
    b = B @ np.abs(rng.normal(size=n))  # a non-negative point exists
    return QpProblem(H, c, B, b)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2 ** 31))
def test_qp_matches_brute_force(n, seed):
    prob = random_qp(np.random.default_rng(seed), n)
    x = solve_qp_barrier(prob)
    ref = brute_force_qp(prob.H, prob.c, prob.B, prob.b)
    assert x.min() >= -1e-10
    assert np.linalg.norm(prob.B @ x - prob.b) <= 1e-8 * (1 + np.linalg.norm(prob.b))
    assert prob.objective(x) <= ref[0] + 1e-6 * (1 + abs(ref[0]))
