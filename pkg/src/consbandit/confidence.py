"""Online ridge regression and the confidence ellipsoid around it.

The estimator absorbs (feature, reward) pairs one at a time:

    V = lambda*I + sum psi psi^T,      theta_bar = V^{-1} sum psi*y.

Around theta_bar sits the ellipsoid  {theta : ||theta - theta_bar||_V <= beta},
whose radius grows as

    beta(m) = sigma * sqrt(d * log((1 + (m+1) D^2 / lambda) / delta))
              + sqrt(lambda) * A,

after m absorbed observations.  Linear functionals have closed-form extrema
over the ellipsoid, which is what the optimistic/pessimistic value queries
below return.

The gram matrix is kept explicitly and re-symmetrized on every rank-one
update; its Cholesky factor is refreshed incrementally in O(d^2) and rebuilt
from scratch periodically to cap floating-point drift over long horizons.
"""

import math
from dataclasses import dataclass

import numpy as np

from .numerics import CholeskyFactor, SpdMatrix, sym_rank_one_update

_REFACTOR_EVERY = 256
_MEMBERSHIP_SLACK = 1e-9


@dataclass
class BetaParams:
    """Constants entering the ellipsoid radius.

    sigma : noise scale (sub-Gaussian parameter of the reward noise)
    d     : feature dimension
    D     : bound used for feature norms (configuration, not enforced on data)
    lam   : ridge regularizer, > 0
    A     : bound on the parameter norm
    delta : confidence level in (0, 1)
    """

    sigma: float
    d: int
    D: float
    lam: float
    A: float
    delta: float

    def __post_init__(self):
        if self.sigma < 0 or self.D < 0 or self.A < 0:
            raise ValueError("sigma, D, A must be nonnegative")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


def beta(m, params):
    """Ellipsoid radius after m absorbed observations; nondecreasing in m."""
    if m < 0:
        raise ValueError("m must be >= 0")
    arg = (1.0 + (m + 1) * params.D ** 2 / params.lam) / params.delta
    if arg <= 0.0:
        raise ValueError(f"log argument {arg!r} <= 0")
    return params.sigma * math.sqrt(params.d * math.log(arg)) + math.sqrt(params.lam) * params.A


class RidgeState:
    """Regularized least-squares state over absorbed observations."""

    __slots__ = ("lam", "dim", "V", "s", "theta", "m", "factor", "_since_refactor")

    def __init__(self, dim, lam):
        if lam <= 0:
            raise ValueError("lam must be positive")
        self.lam = float(lam)
        self.dim = int(dim)
        self.V = self.lam * np.eye(self.dim)
        self.s = np.zeros(self.dim)
        self.theta = np.zeros(self.dim)
        self.m = 0
        self.factor = CholeskyFactor(self.V)
        self._since_refactor = 0


def ridge_update(state, psi, y):
    """Absorb one observation: V += psi psi^T, s += psi*y, re-solve theta."""
    psi = np.asarray(psi, dtype=np.float64)
    if psi.shape != (state.dim,):
        raise ValueError(f"feature vector has shape {psi.shape}, expected ({state.dim},)")
    if not (np.all(np.isfinite(psi)) and math.isfinite(y)):
        raise ValueError("non-finite input to ridge update")
    sym_rank_one_update(state.V, psi)
    state._since_refactor += 1
    if state._since_refactor >= _REFACTOR_EVERY:
        state.factor = CholeskyFactor(state.V)
        state._since_refactor = 0
    else:
        state.factor.update(psi)
    state.s += psi * y
    state.theta = state.factor.solve(state.s)
    state.m += 1
    return state


class ConfidenceEllipsoid:
    """Set {theta : ||theta - center||_V <= radius}."""

    __slots__ = ("center", "factor", "radius")

    def __init__(self, center, shape, radius):
        self.center = np.asarray(center, dtype=np.float64).copy()
        if isinstance(shape, CholeskyFactor):
            self.factor = shape
        else:
            self.factor = CholeskyFactor(shape if isinstance(shape, SpdMatrix) else SpdMatrix(shape))
        if self.center.shape != (self.factor.dim,):
            raise ValueError("center dimension does not match shape matrix")
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    @classmethod
    def from_ridge(cls, ridge, params):
        """Ellipsoid around the current estimate with radius beta(ridge.m)."""
        fac = CholeskyFactor.__new__(CholeskyFactor)
        fac.low = ridge.factor.low.copy()
        fac.dim = ridge.factor.dim
        return cls(ridge.theta, fac, beta(ridge.m, params))

    @property
    def dim(self):
        return self.factor.dim

    def shape_matrix(self):
        low = self.factor.low
        return low @ low.T


def ucb_value(ellipsoid, psi):
    """max over the ellipsoid of psi^T theta = psi^T center + radius*||psi||_{V^-1}."""
    psi = np.asarray(psi, dtype=np.float64)
    return float(psi @ ellipsoid.center) + ellipsoid.radius * ellipsoid.factor.inv_norm(psi)


def lcb_value(ellipsoid, psi):
    """min over the ellipsoid of psi^T theta."""
    psi = np.asarray(psi, dtype=np.float64)
    return float(psi @ ellipsoid.center) - ellipsoid.radius * ellipsoid.factor.inv_norm(psi)


def ucb_values(ellipsoid, psis):
    """Vector of ucb_value over the rows of psis (one batched solve)."""
    psis = np.asarray(psis, dtype=np.float64)
    quads = np.clip(ellipsoid.factor.inv_quads(psis), 0.0, None)
    return psis @ ellipsoid.center + ellipsoid.radius * np.sqrt(quads)


def contains(ellipsoid, theta):
    """Membership test ||theta - center||_V <= radius (tiny relative slack)."""
    theta = np.asarray(theta, dtype=np.float64)
    dist = ellipsoid.factor.norm(theta - ellipsoid.center)
    return dist <= ellipsoid.radius * (1.0 + _MEMBERSHIP_SLACK)
