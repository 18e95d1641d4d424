# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for symmetric positive-definite systems.

Same surface as `_pure`: cholesky_lower, rank_one_update, solve_cholesky,
solve_lower, inv_quad_forms.  Factorization goes through LAPACK dpotrf; the
per-round hot path (rank-one updates, triangular solves, batched quadratic
forms) runs as straight C loops to avoid per-call Python overhead on the
small dense matrices this library works with (d up to a few hundred).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport dtrsm
from scipy.linalg.cython_lapack cimport dpotrf

cnp.import_array()

COMPILED = True


class NotPositiveDefiniteError(ArithmeticError):
    """Cholesky factorization failed: the matrix is not positive definite."""


def cholesky_lower(mat):
    """Lower-triangular Cholesky factor L with L L^T = mat.

    The C-contiguous buffer of a symmetric matrix doubles as its own
    Fortran-order view, so dpotrf with uplo='U' writes the transposed upper
    factor into the buffer's lower triangle: exactly the C-order L.
    """
    cdef cnp.ndarray[double, ndim=2, mode="c"] a = np.array(
        mat, dtype=np.float64, order="C", copy=True)
    cdef int n = a.shape[0]
    cdef int info = 0
    cdef char uplo = b'U'
    cdef Py_ssize_t i, j
    if n > 0:
        dpotrf(&uplo, &n, &a[0, 0], &n, &info)
    if info != 0:
        raise NotPositiveDefiniteError(
            "dpotrf failed with info=%d (matrix not positive definite?)" % info)
    for i in range(n):
        for j in range(i + 1, n):
            a[i, j] = 0.0
    return a


def rank_one_update(double[:, ::1] low, vec):
    """In-place update of L so that L L^T gains + vec vec^T."""
    cdef double[::1] work = np.array(vec, dtype=np.float64, copy=True)
    cdef Py_ssize_t d = low.shape[0]
    cdef Py_ssize_t k, i
    cdef double lkk, wk, r2, r, c, s
    for k in range(d):
        lkk = low[k, k]
        wk = work[k]
        r2 = lkk * lkk + wk * wk
        if r2 <= 0.0:
            raise NotPositiveDefiniteError(
                "rank-one update lost positive-definiteness")
        r = sqrt(r2)
        c = r / lkk
        s = wk / lkk
        low[k, k] = r
        for i in range(k + 1, d):
            low[i, k] = (low[i, k] + s * work[i]) / c
            work[i] = c * work[i] - s * low[i, k]


def solve_cholesky(double[:, ::1] low, rhs):
    """Solve (L L^T) x = rhs given the lower factor."""
    cdef cnp.ndarray[double, ndim=1] x = np.array(rhs, dtype=np.float64, copy=True)
    cdef double[::1] xv = x
    cdef Py_ssize_t d = low.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc
    # forward: L y = rhs
    for i in range(d):
        acc = xv[i]
        for j in range(i):
            acc -= low[i, j] * xv[j]
        xv[i] = acc / low[i, i]
    # backward: L^T x = y
    for i in range(d - 1, -1, -1):
        acc = xv[i]
        for j in range(i + 1, d):
            acc -= low[j, i] * xv[j]
        xv[i] = acc / low[i, i]
    return x


def solve_lower(double[:, ::1] low, mat):
    """Solve L Z = mat (mat is d x n, one column per right-hand side)."""
    cdef cnp.ndarray[double, ndim=2] z = np.array(mat, dtype=np.float64, copy=True)
    cdef double[:, ::1] zv = z
    cdef Py_ssize_t d = low.shape[0]
    cdef Py_ssize_t n = z.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double pivot
    for i in range(d):
        pivot = low[i, i]
        for k in range(n):
            zv[i, k] /= pivot
        for j in range(i + 1, d):
            pivot = low[j, i]
            for k in range(n):
                zv[j, k] -= pivot * zv[i, k]
    return z


def inv_quad_forms(double[:, ::1] low, double[:, ::1] rows):
    """q[i] = rows[i] @ (L L^T)^{-1} @ rows[i] for each row of `rows`.

    Solves L Z = rows^T in one BLAS triangular solve: the C-contiguous
    lower factor is an upper factor in Fortran order, so dtrsm is called
    with uplo='U', transa='T', and the C-contiguous copy of `rows` serves
    directly as the d x n Fortran right-hand-side block.
    """
    cdef cnp.ndarray[double, ndim=2, mode="c"] work = np.array(rows, copy=True)
    cdef int n = work.shape[0]
    cdef int d = work.shape[1]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef char side = b'L'
    cdef char uplo = b'U'
    cdef char transa = b'T'
    cdef char diag = b'N'
    cdef double alpha = 1.0
    cdef Py_ssize_t i, j
    cdef double q
    if n == 0:
        return out
    if d > 0:
        dtrsm(&side, &uplo, &transa, &diag, &d, &n, &alpha,
              &low[0, 0], &d, &work[0, 0], &d)
    for i in range(n):
        q = 0.0
        for j in range(d):
            q += work[i, j] * work[i, j]
        out[i] = q
    return out


def sym_rank_one(double[:, ::1] mat, double[::1] vec):
    """In-place symmetric update mat += vec vec^T (exactly symmetric)."""
    cdef Py_ssize_t d = mat.shape[0]
    cdef Py_ssize_t i, j
    cdef double vi, prod
    for i in range(d):
        vi = vec[i]
        mat[i, i] += vi * vi
        for j in range(i + 1, d):
            prod = vi * vec[j]
            mat[i, j] += prod
            mat[j, i] += prod
