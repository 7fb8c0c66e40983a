"""Sparse solvers for the assembled systems.

SPD systems are solved by conjugate gradients preconditioned with a
sparse Cholesky factorization (CHOLMOD through cvxopt).  A failed
factorization means the matrix is not positive definite, which for the
interior penalty form signals a penalty parameter that is too small.
The augmented zero-mean system is solved through the same factorization
(Schur complement, or a pinned dof when the operator annihilates
constants).  Both paths finish with iterative refinement whose residuals
are accumulated in extended precision.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from cvxopt import cholmod, matrix, spmatrix

from .exceptions import SolverError

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MAX_ITER = 2000
# residuals below FLOOR_FACTOR * (rounding floor) are accepted
FLOOR_FACTOR = 10.0
MAX_REFINE = 8


@dataclass
class SolveReport:
    """Solution plus convergence diagnostics.

    ``floor`` is the relative residual attainable in double precision,
    ``eps * || |A| |x| || / ||b||``; fourth-order systems reach it above
    ``1e-10`` once the mesh is fine enough.
    """

    solution: np.ndarray
    residual: float
    iterations: int
    method: str
    floor: float = 0.0

    @property
    def target(self):
        return self.floor * FLOOR_FACTOR


def _relres(A, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(b - A @ x)
    return r / nb if nb > 0 else r


def rounding_floor(A, x, b):
    nb = np.linalg.norm(b)
    if nb == 0:
        return 0.0
    return float(np.finfo(float).eps * np.linalg.norm(abs(A) @ np.abs(x)) / nb)


def _cholesky(A):
    """Return a callable applying ``A^{-1}``; raise if ``A`` is not SPD."""
    low = sp.tril(A).tocoo()
    Ac = spmatrix(low.data, low.row.astype(int), low.col.astype(int), A.shape)
    cholmod.options["supernodal"] = 2
    cholmod.options["print"] = 0
    try:
        F = cholmod.symbolic(Ac)
        cholmod.numeric(Ac, F)
    except ArithmeticError as exc:
        raise SolverError(
            "matrix is not positive definite; "
            "the penalty parameter beta is likely too small") from exc

    def apply(r):
        y = matrix(np.asarray(r, dtype=float))
        cholmod.solve(F, y)
        return np.asarray(y).ravel()

    return apply


def _sgs_preconditioner(A):
    A = sp.csr_matrix(A)
    D = A.diagonal()
    if np.any(D <= 0):
        raise SolverError("non-positive diagonal entry; matrix is not SPD")
    L = sp.tril(A, format="csr")
    U = sp.triu(A, format="csr")

    def apply(r):
        y = spla.spsolve_triangular(L, r, lower=True)
        return spla.spsolve_triangular(U, D * y, lower=False)

    return apply


def _ilu_preconditioner(A):
    ilu = spla.spilu(sp.csc_matrix(A), drop_tol=1e-5, fill_factor=20,
                     diag_pivot_thresh=0.0, options=dict(SymmetricMode=True))
    return ilu.solve


def pcg(A, b, apply_prec, tol=DEFAULT_TOL, maxiter=MAX_ITER, x0=None):
    """Preconditioned conjugate gradients.

    Stops once ``||b - A x|| <= tol ||b||`` (or the rounding floor, when
    larger).  Raises :class:`SolverError` on breakdown or when ``maxiter``
    is hit.
    """
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - A @ x
    nb = np.linalg.norm(b)
    if nb == 0:
        return x, 0.0, 0
    absA = abs(A)
    eff_tol = tol
    z = apply_prec(r)
    p = z.copy()
    rz = r @ z
    res = np.linalg.norm(r) / nb
    for it in range(1, maxiter + 1):
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            raise SolverError(
                f"CG breakdown at iteration {it}: p^T A p = {pAp:.3e} <= 0; "
                "matrix is not positive definite (beta too small?)")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / nb
        if res <= eff_tol or it % 5 == 0:
            # true residual, and the attainable floor at the current iterate
            r = b - A @ x
            res = np.linalg.norm(r) / nb
            eff_tol = max(tol, FLOOR_FACTOR * np.finfo(float).eps
                          * np.linalg.norm(absA @ np.abs(x)) / nb)
            if res <= eff_tol:
                return x, res, it
        z = apply_prec(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"CG did not reach tol={tol:g} in {maxiter} iterations "
                      f"(residual {res:.3e})")


def extended_residual(A, x, b):
    """``b - A x`` accumulated in extended precision, rounded to float64."""
    A = sp.csr_matrix(A)
    wide = np.longdouble
    prod = A.data.astype(wide) * x.astype(wide)[A.indices]
    ax = np.zeros(A.shape[0], dtype=wide)
    rows = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))
    np.add.at(ax, rows, prod)
    return (b.astype(wide) - ax).astype(float)


def refine(A, b, x, apply_inverse, max_steps=MAX_REFINE):
    """Mixed-precision iterative refinement.

    Corrections come from ``apply_inverse`` (a factorization); residuals
    are formed in extended precision, so the forward error is not limited
    by the condition number.  Stops when a correction is negligible or no
    longer halves.
    """
    x = x.copy()
    prev = np.inf
    eps = np.finfo(float).eps
    for step in range(1, max_steps + 1):
        dx = apply_inverse(extended_residual(A, x, b))
        size = np.linalg.norm(dx)
        if size >= 0.5 * prev:
            break
        x += dx
        prev = size
        if size <= 4 * eps * np.linalg.norm(x):
            break
    return x


def solve(system, tol=DEFAULT_TOL, method="auto"):
    """Solve ``system`` to relative residual ``tol``.

    ``method``: ``auto``/``cholesky`` (Cholesky-preconditioned CG for SPD
    systems, a factorized saddle-point inverse for the augmented
    zero-mean system), ``ilu``, ``sgs`` (PCG with the named preconditioner).
    The residual target is relaxed to ten times the rounding floor when
    that exceeds ``tol``; see :class:`SolveReport`.
    """
    if not 0 < tol <= 1e-4:
        raise ValueError("tol must lie in (0, 1e-4]")
    A = sp.csr_matrix(system.matrix)
    b = np.asarray(system.rhs, dtype=float)
    if getattr(system, "augmented", False):
        return _solve_indefinite(A, b, tol)
    if method in ("auto", "cholesky"):
        factor = _cholesky(A)
        x, res, it = pcg(A, b, factor, tol=tol, maxiter=50)
        x = refine(A, b, x, factor)
        res = _relres(A, x, b)
        return SolveReport(x, res, it, "pcg+cholesky", rounding_floor(A, x, b))
    if method == "ilu":
        x, res, it = pcg(A, b, _ilu_preconditioner(A), tol=tol)
        return SolveReport(x, res, it, "pcg+ilu", rounding_floor(A, x, b))
    if method == "sgs":
        x, res, it = pcg(A, b, _sgs_preconditioner(A), tol=tol)
        return SolveReport(x, res, it, "pcg+sgs", rounding_floor(A, x, b))
    raise ValueError(f"unknown solver method {method!r}")


def _saddle_inverse(A, c):
    """Exact inverse of ``[[A, c], [c^T, 0]]`` built on a Cholesky factor.

    If ``A`` annihilates constants (pure fourth-order Neumann operator) one
    dof is pinned to make the factorized block SPD; the constraint row then
    fixes the constant.  Otherwise the Schur complement is used.
    """
    n = A.shape[0]
    ones = np.ones(n)
    singular = np.linalg.norm(A @ ones) <= 1e-12 * np.linalg.norm(abs(A) @ ones)
    if singular:
        keep = np.arange(1, n)
        solve_pinned = _cholesky(A[keep][:, keep])
        total = c.sum()

        def apply(rhs):
            b, s = rhs[:n], rhs[n]
            lam = b.sum() / total
            u = np.zeros(n)
            u[keep] = solve_pinned((b - lam * c)[keep])
            u += (s - c @ u) / total
            return np.append(u, lam)

        return apply
    solve_a = _cholesky(A)
    z = solve_a(c)
    cz = c @ z

    def apply(rhs):
        b, s = rhs[:n], rhs[n]
        y = solve_a(b)
        lam = (c @ y - s) / cz
        return np.append(y - lam * z, lam)

    return apply


def _solve_indefinite(A, b, tol):
    n = A.shape[0] - 1
    A = sp.csr_matrix(A)
    block = A[:n][:, :n]
    c = A[:n, n].toarray().ravel()
    inv = _saddle_inverse(block, c)
    x = refine(A, b, inv(b), inv)
    res = _relres(A, x, b)
    floor = rounding_floor(A, x, b)
    if res > max(tol, FLOOR_FACTOR * floor):
        raise SolverError(f"iterative refinement stalled at residual {res:.3e}")
    return SolveReport(x, res, 1, "schur+cholesky", floor)
