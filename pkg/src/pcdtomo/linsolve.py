"""Dense linear algebra: pseudoinverse, minimum-norm least squares, row
reduction and a primal-dual log-barrier solver for

    minimize  1/2 x^T H x + c^T x   subject to  B x = b,  x >= 0.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

log = logging.getLogger(__name__)

EPS = np.finfo(float).eps


class LinAlgError(ValueError):
    pass


class NonFinite(LinAlgError):
    pass


class DimensionMismatch(LinAlgError):
    pass


class InconsistentSystem(LinAlgError):
    def __init__(self, msg, residual=float("nan")):
        super().__init__(msg)
        self.residual = residual


class NotSymmetric(LinAlgError):
    pass


class Infeasible(LinAlgError):
    """No non-negative point satisfies the equality constraints.

    ``residual`` is min ||Bx - b|| over x >= 0, which certifies infeasibility.
    """

    def __init__(self, msg, residual=float("nan")):
        super().__init__(msg)
        self.residual = residual


class MaxIterations(LinAlgError):
    pass


def _as_matrix(A) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if not np.all(np.isfinite(A)):
        raise NonFinite("matrix has non-finite entries")
    return A


def rank_tolerance(s: np.ndarray, shape: tuple[int, int]) -> float:
    """Singular values at or below this count as zero."""
    if s.size == 0:
        return 0.0
    return float(s.max()) * max(shape) * EPS


def moore_penrose(A) -> np.ndarray:
    """Moore-Penrose inverse through a thresholded SVD."""
    A = _as_matrix(A)
    m, n = A.shape
    if A.size == 0:
        return np.zeros((n, m))
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > rank_tolerance(s, A.shape)
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (Vt.T * inv) @ U.T


def matrix_rank(A) -> int:
    A = _as_matrix(A)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > rank_tolerance(s, A.shape)))


def min_norm_least_squares(A, eta) -> np.ndarray:
    """Minimum-norm minimizer of ||eta - A delta||_2."""
    A = _as_matrix(A)
    eta = np.asarray(eta, dtype=float).ravel()
    if eta.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"A has {A.shape[0]} rows but right-hand side has {eta.shape[0]}")
    if not np.all(np.isfinite(eta)):
        raise NonFinite("right-hand side has non-finite entries")
    return moore_penrose(A) @ eta


def qr_row_reduce(A, z, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Replace ``A x = z`` by an equivalent system with full row rank.

    With a pivoted QR factorization ``A P = Q R``, ``Q^T A`` has its last
    ``m - rank`` rows numerically zero; those rows of ``Q^T z`` must vanish
    too, otherwise the system has no solution.
    """
    A = _as_matrix(A)
    z = np.asarray(z, dtype=float).ravel()
    if z.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"A has {A.shape[0]} rows but z has {z.shape[0]}")
    r = matrix_rank(A)
    Q, _, _ = scipy.linalg.qr(A, pivoting=True)
    QA = Q.T @ A
    Qz = Q.T @ z
    dropped = float(np.linalg.norm(Qz[r:])) if r < A.shape[0] else 0.0
    if dropped > tol * max(1.0, float(np.linalg.norm(z))):
        raise InconsistentSystem(f"system is inconsistent: residual {dropped:.3g} outside range(A)",
                                 residual=dropped)
    return QA[:r], Qz[:r]


def smallest_eigenvalue(M, tol: float = 1e-12) -> float:
    M = _as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise NotSymmetric(f"matrix is {M.shape[0]}x{M.shape[1]}")
    scale = max(1.0, float(np.abs(M).max()))
    if not np.allclose(M, M.T, rtol=0.0, atol=tol * scale):
        raise NotSymmetric("matrix is not symmetric")
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


@dataclass
class QpProblem:
    """``min 1/2 x^T H x + c^T x`` subject to ``B x = b`` and ``x >= 0``."""

    H: np.ndarray
    c: np.ndarray
    B: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.H = _as_matrix(self.H)
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.B = np.asarray(self.B, dtype=float).reshape(-1, self.c.size)
        self.b = np.asarray(self.b, dtype=float).ravel()
        n = self.c.size
        if self.H.shape != (n, n):
            raise DimensionMismatch(f"H is {self.H.shape}, expected {(n, n)}")
        if self.B.shape[0] != self.b.size:
            raise DimensionMismatch(f"B has {self.B.shape[0]} rows, b has {self.b.size} entries")
        if smallest_eigenvalue(self.H, tol=1e-10) < -1e-10 * max(1.0, np.abs(self.H).max()):
            raise LinAlgError("H is not positive semidefinite")

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.H @ x + self.c @ x)


@dataclass
class IpmState:
    x: np.ndarray
    lam: np.ndarray
    s: np.ndarray
    mu: float
    iterations: int = 0
    history: list = field(default_factory=list)


@dataclass
class QpOptions:
    rho: float | None = None  # None means sqrt(n)
    tol: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.995


def nonneg_feasibility_residual(B, b) -> float:
    """min ||B x - b|| over x >= 0 (zero iff the constraints are feasible)."""
    B = _as_matrix(B)
    b = np.asarray(b, dtype=float).ravel()
    if B.shape[0] == 0:
        return 0.0
    _, res = scipy.optimize.nnls(B, b, maxiter=50 * B.shape[1] + 100)
    return float(res)


def _sym_solve(M: np.ndarray, v: np.ndarray) -> np.ndarray:
    # near the positivity boundary the Schur complement is badly scaled;
    # the solve stays accurate enough for a search direction
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            return scipy.linalg.solve(M, v, assume_a="pos")
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(M, v, rcond=None)[0]


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def _start_point(prob: QpProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = prob.c.size
    if prob.B.shape[0]:
        x_ls = moore_penrose(prob.B) @ prob.b
    else:
        x_ls = np.zeros(n)
    scale = max(1.0, float(np.abs(x_ls).max()) if n else 1.0)
    if x_ls.size and x_ls.min() > 1e-3 * scale:
        x = x_ls.copy()
    else:
        # shift into the positive orthant, then pull back onto B x = b along
        # null(B) as far as positivity allows
        x = np.maximum(x_ls, scale)
        if prob.B.shape[0]:
            corr = moore_penrose(prob.B) @ (prob.b - prob.B @ x)
            t = min(1.0, 0.9 * _max_step(x, corr))
            x = x + t * corr
    lam = np.zeros(prob.B.shape[0])
    grad = prob.H @ x + prob.c
    s = np.maximum(np.abs(grad), scale)
    return x, lam, s


def solve_qp_barrier(prob: QpProblem, opts: QpOptions | None = None,
                     return_state: bool = False):
    """Primal-dual path-following method on the log-barrier problem.

    Each iteration solves the linearized central-path conditions with
    ``Gamma = (S + X H)^-1``, ``Lambda = (B Gamma X B^T)^-1 B`` and the
    barrier target ``mu = x^T s / (n + rho)``.  Residuals of the primal and
    dual equalities are carried in the right-hand side so that the method
    also converges from a start that only satisfies ``x > 0``; from a
    feasible iterate the step is the plain feasible one.  Step lengths stop
    a fixed fraction short of the positivity boundary.
    """
    opts = opts or QpOptions()
    n = prob.c.size
    B, b = prob.B, prob.b
    if B.shape[0]:
        infeas = nonneg_feasibility_residual(B, b)
        if infeas > max(opts.tol, 1e-9 * max(1.0, float(np.linalg.norm(b)))):
            raise Infeasible(f"no x >= 0 satisfies B x = b (residual {infeas:.3g})", residual=infeas)
        if matrix_rank(B) < B.shape[0]:
            try:
                B, b = qr_row_reduce(B, b, tol=max(opts.tol, 1e-9))
            except InconsistentSystem as exc:
                raise Infeasible(str(exc), residual=exc.residual) from exc
    rho = float(np.sqrt(n)) if opts.rho is None else float(opts.rho)
    H, c = prob.H, prob.c
    x, lam, s = _start_point(QpProblem(H, c, B, b))
    state = IpmState(x, lam, s, float(x @ s) / n)
    bnorm = 1.0 + float(np.linalg.norm(b))
    cnorm = 1.0 + float(np.linalg.norm(c))

    for k in range(opts.max_iter):
        r_p = b - B @ x
        r_d = H @ x + c - B.T @ lam - s
        gap = float(x @ s) / n
        state.history.append((gap, float(np.linalg.norm(r_p)), float(np.linalg.norm(r_d))))
        if (gap <= opts.tol and np.linalg.norm(r_p) <= opts.tol * bnorm
                and np.linalg.norm(r_d) <= opts.tol * cnorm):
            break
        mu_next = float(x @ s) / (n + rho)
        M = H + np.diag(s / x)  # X^-1 (S + X H), symmetric positive definite
        try:
            cf = scipy.linalg.cho_factor(M)
        except np.linalg.LinAlgError:
            cf = None
        solve = (lambda v: scipy.linalg.cho_solve(cf, v)) if cf else (lambda v: np.linalg.solve(M, v))
        y = solve(s - mu_next / x + r_d)
        if B.shape[0]:
            MinvBt = solve(B.T)
            schur = B @ MinvBt
            dlam = _sym_solve(schur, B @ y + r_p)
            dx = MinvBt @ dlam - y
        else:
            dlam = np.zeros(0)
            dx = -y
        ds = r_d + H @ dx - B.T @ dlam
        alpha = min(1.0, opts.step_fraction * min(_max_step(x, dx), _max_step(s, ds)))
        x = x + alpha * dx
        lam = lam + alpha * dlam
        s = s + alpha * ds
        state.iterations = k + 1
    else:
        raise MaxIterations(f"barrier method did not converge in {opts.max_iter} iterations "
                            f"(gap {float(x @ s) / n:.3g})")
    state.x, state.lam, state.s, state.mu = x, lam, s, float(x @ s) / n
    log.debug("barrier QP converged in %d iterations", state.iterations)
    return (x, state) if return_state else x
