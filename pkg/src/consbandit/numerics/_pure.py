"""Pure numpy/scipy kernels for symmetric positive-definite systems.

Fallback backend used when the compiled extension is unavailable.  Both
backends expose the same five functions; `consbandit.numerics` picks one at
import time.
"""

import numpy as np
import scipy.linalg

COMPILED = False


class NotPositiveDefiniteError(ArithmeticError):
    """Cholesky factorization failed: the matrix is not positive definite."""


def cholesky_lower(mat):
    """Lower-triangular Cholesky factor L with L L^T = mat."""
    try:
        low = scipy.linalg.cholesky(mat, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc
    return np.ascontiguousarray(low)

def rank_one_update(low, vec):
    """In-place update of L so that L L^T gains + vec vec^T.

    Standard O(d^2) Cholesky rank-one update; the tail operations are
    vectorized per pivot.
    """
    d = low.shape[0]
    work = np.array(vec, dtype=np.float64, copy=True)
    for k in range(d):
        lkk = low[k, k]
        r2 = lkk * lkk + work[k] * work[k]
        if r2 <= 0.0:
            raise NotPositiveDefiniteError("rank-one update lost positive-definiteness")
        r = np.sqrt(r2)
        c = r / lkk
        s = work[k] / lkk
        low[k, k] = r
        if k + 1 < d:
            tail = low[k + 1 :, k]
            tail += s * work[k + 1 :]
            tail /= c
            work[k + 1 :] = c * work[k + 1 :] - s * tail


def solve_cholesky(low, rhs):
    """Solve (L L^T) x = rhs given the lower factor."""
    return scipy.linalg.cho_solve((low, True), rhs, check_finite=False)


def solve_lower(low, mat):
    """Solve L Z = mat (mat is d x n, one column per right-hand side)."""
    return scipy.linalg.solve_triangular(low, mat, lower=True, check_finite=False)


def inv_quad_forms(low, rows):
    """q[i] = rows[i] @ (L L^T)^{-1} @ rows[i] for each row of `rows`."""
    z = scipy.linalg.solve_triangular(low, rows.T, lower=True, check_finite=False)
    return np.einsum("ij,ij->j", z, z)


def sym_rank_one(mat, vec):
    """In-place symmetric update mat += vec vec^T (exactly symmetric)."""
    mat += np.outer(vec, vec)
    np.copyto(mat, (mat + mat.T) * 0.5)
