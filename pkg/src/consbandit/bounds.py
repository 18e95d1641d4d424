"""Closed-form evaluators of the theoretical guarantees.

These are reporting tools: they evaluate the displayed bounds on regret, on
the number of baseline plays, and the supporting potential/optimization
inequalities, so that simulation summaries can print theory next to
observation.  Nothing here re-proves anything; the checkers compute both
sides of an inequality numerically.
"""

import math
from dataclasses import dataclass

import numpy as np

from .numerics import CholeskyFactor


@dataclass
class TheoryParams:
    """Problem constants entering the bounds.

    delta_l/delta_h bracket the per-round gap between the optimal and the
    baseline action; r_l/r_h bracket the baseline reward.  Defaults follow
    the bounded-reward convention delta_h = r_h = 1, delta_l = 0.
    """

    d: int
    A: float
    D: float
    lam: float
    sigma: float
    delta: float
    alpha: float
    r_l: float = 0.5
    r_h: float = 1.0
    delta_l: float = 0.0
    delta_h: float = 1.0
    T: int = 2000

    def __post_init__(self):
        if not 0 <= self.delta_l <= self.delta_h:
            raise ValueError("need 0 <= delta_l <= delta_h")
        if not 0 < self.r_l < self.r_h:
            raise ValueError("need 0 < r_l < r_h")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.lam <= 0 or self.d < 1 or self.T < 1:
            raise ValueError("lam, d, T must be positive")
        if self.A < 0 or self.D < 0 or self.sigma < 0:
            raise ValueError("A, D, sigma must be nonnegative")


def ucb_regret_bound(p, m_T):
    """Regret bound of the unconstrained optimistic policy after m_T plays.

    4 sqrt(m_T d log(lam + m_T D / d))
        * [A sqrt(lam) + sigma sqrt(2 log(1/delta) + d log(1 + m_T D/(lam d)))]
    """
    if m_T < 0:
        raise ValueError("m_T must be >= 0")
    if m_T == 0:
        return 0.0
    inner = math.log(p.lam + m_T * p.D / p.d)
    if inner < 0:
        raise ValueError("bound undefined: log(lam + m_T D/d) < 0")
    width = p.A * math.sqrt(p.lam) + p.sigma * math.sqrt(
        2.0 * math.log(1.0 / p.delta) + p.d * math.log(1.0 + m_T * p.D / (p.lam * p.d)))
    return 4.0 * math.sqrt(m_T * p.d * inner) * width


def nT_upper_bound(p):
    """Upper bound on baseline plays, independent of the horizon.

    1 + 114 d^2 (A sqrt(lam) + sigma)^2 / (alpha r_l (delta_l + alpha r_l))
        * [log(62 d (A sqrt(lam) + sigma) / (sqrt(delta) (delta_l + alpha r_l)))]^2
    """
    if p.lam < max(1.0, p.D ** 2):
        raise ValueError("requires lam >= max(1, D^2)")
    if p.alpha * p.r_l <= 0:
        raise ValueError("requires alpha * r_l > 0")
    gap = p.delta_l + p.alpha * p.r_l
    width = p.A * math.sqrt(p.lam) + p.sigma
    logterm = math.log(62.0 * p.d * width / (math.sqrt(p.delta) * gap))
    return 1.0 + 114.0 * p.d ** 2 * width ** 2 / (p.alpha * p.r_l * gap) * logterm ** 2


def nT_lower_bound(p):
    """Lower bound on baseline plays.

    d^2 (A sqrt(lam) + sigma)^2 / (alpha r_h (delta_h + alpha r_h))
        * [log(10 d (A sqrt(lam) + sigma) / (sqrt(delta) (delta_h + alpha r_h)))]^2
    """
    if p.lam < p.D ** 2:
        raise ValueError("requires lam >= D^2")
    gap = p.delta_h + p.alpha * p.r_h
    width = p.A * math.sqrt(p.lam) + p.sigma
    logterm = math.log(10.0 * p.d * width / (math.sqrt(p.delta) * gap))
    return p.d ** 2 * width ** 2 / (p.alpha * p.r_h * gap) * logterm ** 2


def total_regret_bound(p):
    """Explicit three-part regret decomposition at horizon T.

    Component 1 is the optimistic-policy regret bound at m_T = T, component
    2 charges every gated round the worst per-round gap (nT upper bound
    times delta_h), and component 3 is the concentration cost of seeing only
    context distributions, 4 sqrt(2 T log(1/delta)).
    """
    ucb_term = ucb_regret_bound(p, p.T)
    conservative_term = nT_upper_bound(p) * p.delta_h
    distribution_term = 4.0 * math.sqrt(2.0 * p.T * math.log(1.0 / p.delta))
    return {
        "ucb_term": ucb_term,
        "conservative_term": conservative_term,
        "distribution_term": distribution_term,
        "total": ucb_term + conservative_term + distribution_term,
    }


def elliptical_potential_bound(k, D, lam, d):
    """RHS of the elliptical potential inequality: 2 d log(1 + k D^2/(lam d))."""
    if D < 0 or lam <= 0 or d < 1 or k < 0:
        raise ValueError("need k >= 0, D >= 0, lam > 0, d >= 1")
    return 2.0 * d * math.log(1.0 + k * D ** 2 / (lam * d))


def elliptical_potential_check(vectors, lam, D=None):
    """Verify sum_i min(1, ||Y_i||^2_{V_{i-1}^{-1}}) <= the potential bound.

    V_0 = lam*I and V_i adds Y_i Y_i^T.  D defaults to the largest vector
    norm in the sequence.  Returns (lhs, rhs, ok).
    """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    k, d = vectors.shape if vectors.size else (0, 1)
    if k == 0 or vectors.size == 0:
        return 0.0, 0.0, True
    if D is None:
        D = float(np.linalg.norm(vectors, axis=1).max())
    factor = CholeskyFactor(lam * np.eye(d))
    lhs = 0.0
    for y in vectors:
        lhs += min(1.0, factor.inv_quad(y))
        factor.update(y)
    rhs = elliptical_potential_bound(k, D, lam, d)
    return lhs, rhs, lhs <= rhs * (1.0 + 1e-12)


def lemma2_bound(c1, c2, c3):
    """(16 c1^2 / (25 c3)) [log(2 c1 sqrt(c2) e / c3)]^2."""
    if c1 <= 0 or c2 <= 0 or c3 <= 0:
        raise ValueError("c1, c2, c3 must be positive")
    return 16.0 * c1 ** 2 / (25.0 * c3) * math.log(2.0 * c1 * math.sqrt(c2) * math.e / c3) ** 2


def lemma2_check(c1, c2, c3, m_max=1e6, grid=4096):
    """Compare max_{m >= 2} [c1 sqrt(m) log(c2 m) - c3 m] with lemma2_bound.

    The maximum is located on a log-spaced grid over [2, m_max] and refined
    linearly around the best point.  Returns (lhs_max, rhs, ok).

    Note: the displayed constant is not large enough for every positive
    (c1, c2, c3); ok=False reports a genuine violation of the inequality as
    printed, not a numerical artifact.
    """
    def value(m):
        return c1 * np.sqrt(m) * np.log(c2 * m) - c3 * m

    ms = np.geomspace(2.0, m_max, grid)
    vals = value(ms)
    i = int(np.argmax(vals))
    lo = ms[max(i - 1, 0)]
    hi = ms[min(i + 1, grid - 1)]
    fine = np.linspace(lo, hi, 2048)
    lhs = float(max(vals[i], value(fine).max()))
    rhs = lemma2_bound(c1, c2, c3)
    return lhs, rhs, lhs <= rhs * (1.0 + 1e-12)
