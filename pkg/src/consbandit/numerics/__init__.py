"""Dense linear algebra for symmetric positive-definite systems.

Everything the bandit machinery needs from linear algebra lives here:
solving SPD systems, weighted norms ||u||_M and ||u||_{M^-1}, and reusable
Cholesky factors with O(d^2) rank-one updates.  Matrices are factored once
per update and the factor is reused for every solve in a round; no explicit
matrix inverse is ever formed.

Two interchangeable kernel backends exist:

* ``_spdcore`` — compiled Cython core (LAPACK factorization + C loops),
* ``_pure``    — numpy/scipy fallback.

The compiled core is preferred when importable.  Set the environment
variable ``CONSBANDIT_NUMERICS=pure`` (or ``compiled``) to force a choice;
``benchmarks/bench_backends.py`` compares them.
"""

import os

import numpy as np

from . import _pure

_FORCED = os.environ.get("CONSBANDIT_NUMERICS", "").strip().lower()

if _FORCED == "pure":
    _impl = _pure
elif _FORCED == "compiled":
    from . import _spdcore as _impl  # ImportError here means the build is missing
else:
    try:
        from . import _spdcore as _impl
    except ImportError:
        _impl = _pure


class NotPositiveDefiniteError(ArithmeticError):
    """Factorization failure: signals loss of positive-definiteness."""


def backend_name() -> str:
    """Name of the active kernel backend ('compiled' or 'pure')."""
    return "compiled" if _impl.COMPILED else "pure"


def _as_array(values, name):
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


class SpdMatrix:
    """A d x d symmetric positive-definite matrix.

    Symmetry is validated at construction (1e-12 relative); positivity is
    guaranteed by how these matrices arise (lambda*I plus rank-one outer
    products) and is checked at factorization time.
    """

    __slots__ = ("entries", "dim")

    def __init__(self, entries):
        arr = _as_array(entries, "matrix")
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {arr.shape}")
        scale = max(1.0, float(np.abs(arr).max()))
        if np.abs(arr - arr.T).max() > 1e-12 * scale:
            raise ValueError("matrix is not symmetric to 1e-12 relative")
        self.entries = arr
        self.dim = arr.shape[0]

    @classmethod
    def identity(cls, dim, scale=1.0):
        return cls(scale * np.eye(dim))


def _coerce(mat):
    return mat if isinstance(mat, SpdMatrix) else SpdMatrix(mat)


class CholeskyFactor:
    """Reusable lower-triangular Cholesky factor of an SPD matrix.

    Factor once, then issue any number of solves / quadratic-form queries;
    `update` absorbs a rank-one term in O(d^2) without refactoring.
    """

    __slots__ = ("low", "dim")

    def __init__(self, mat):
        mat = _coerce(mat)
        try:
            self.low = _impl.cholesky_lower(mat.entries)
        except _impl.NotPositiveDefiniteError as exc:
            raise NotPositiveDefiniteError(str(exc)) from exc
        self.dim = mat.dim

    def _check_dim(self, vec, name="vector"):
        if vec.shape[-1] != self.dim:
            raise ValueError(
                f"{name} has dimension {vec.shape[-1]}, expected {self.dim}")

    def solve(self, rhs):
        """x with (L L^T) x = rhs."""
        rhs = _as_array(rhs, "rhs")
        self._check_dim(rhs, "rhs")
        return _impl.solve_cholesky(self.low, rhs)

    def update(self, vec):
        """Absorb + vec vec^T into the factored matrix, in place."""
        vec = _as_array(vec, "update vector")
        self._check_dim(vec)
        try:
            _impl.rank_one_update(self.low, vec)
        except _impl.NotPositiveDefiniteError as exc:
            raise NotPositiveDefiniteError(str(exc)) from exc

    def inv_quad(self, vec):
        """u^T M^{-1} u, computed from the factor (no inverse formed)."""
        vec = _as_array(vec, "vector")
        self._check_dim(vec)
        return float(_impl.inv_quad_forms(self.low, vec.reshape(1, -1))[0])

    def inv_quads(self, rows):
        """Row-wise u^T M^{-1} u for a stack of vectors (n x d)."""
        rows = _as_array(rows, "vectors")
        if rows.ndim != 2:
            raise ValueError("expected a 2-D stack of row vectors")
        self._check_dim(rows)
        return _impl.inv_quad_forms(self.low, np.ascontiguousarray(rows))

    def norm(self, vec):
        """||u||_M = ||L^T u||_2."""
        vec = _as_array(vec, "vector")
        self._check_dim(vec)
        return float(np.linalg.norm(self.low.T @ vec))

    def inv_norm(self, vec):
        """||u||_{M^{-1}}."""
        q = self.inv_quad(vec)
        return float(np.sqrt(max(q, 0.0)))

    def solve_lower(self, mat):
        """Z with L Z = mat (d x n right-hand sides)."""
        mat = _as_array(mat, "rhs matrix")
        if mat.shape[0] != self.dim:
            raise ValueError(
                f"rhs matrix has {mat.shape[0]} rows, expected {self.dim}")
        return _impl.solve_lower(self.low, np.ascontiguousarray(mat))


def solve_spd(mat, rhs):
    """Solve M x = rhs for SPD M.

    Relative residual is ~1e-15 in practice; contract guarantees <= 1e-10.
    """
    return CholeskyFactor(mat).solve(rhs)


def weighted_norm(vec, mat):
    """||u||_M = sqrt(u^T M u); zero iff u = 0."""
    mat = _coerce(mat)
    vec = _as_array(vec, "vector")
    if vec.shape[-1] != mat.dim:
        raise ValueError(f"vector has dimension {vec.shape[-1]}, expected {mat.dim}")
    quad = float(vec @ mat.entries @ vec)
    if quad < 0.0:
        raise NotPositiveDefiniteError(
            f"negative quadratic form ({quad!r}): SPD invariant broken")
    return float(np.sqrt(quad))


def weighted_norm_inv(vec, mat):
    """||u||_{M^{-1}}, via a factored solve (never an explicit inverse)."""
    return CholeskyFactor(mat).inv_norm(vec)


def symmetrize(mat):
    """(M + M^T)/2, suppressing drift after repeated rank-one updates."""
    return (mat + mat.T) * 0.5


def sym_rank_one_update(mat, vec):
    """In-place M += v v^T keeping M exactly symmetric (no drift)."""
    _impl.sym_rank_one(mat, np.ascontiguousarray(vec, dtype=np.float64))


__all__ = [
    "SpdMatrix",
    "CholeskyFactor",
    "NotPositiveDefiniteError",
    "solve_spd",
    "weighted_norm",
    "weighted_norm_inv",
    "symmetrize",
    "sym_rank_one_update",
    "backend_name",
]
