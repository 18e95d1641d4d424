"""Bandit policies: optimistic selection, the conservative gate, baselines.

Three policies share this machinery:

* plain linear UCB — always plays the optimistic action and learns from it;
* conservative linear UCB on observed-context features — plays the
  optimistic candidate only when the safety gate passes, else the baseline;
* conservative linear UCB on expected features — same gate, but actions are
  represented by their expected features under the revealed context
  distribution.

The gate at round t asks whether, for the worst parameter still in the
confidence ellipsoid, the cumulative reward credited to the learner (its
past optimistic plays, the current candidate, and the known baseline reward
of past baseline rounds) stays above (1 - alpha) times the cumulative
baseline reward.  Failing the gate forces a baseline play, and the ellipsoid
is updated only on optimistic plays: baseline rounds reveal nothing new
about the unknown parameter.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .confidence import (
    ConfidenceEllipsoid,
    RidgeState,
    lcb_value,
    ridge_update,
    ucb_values,
)


@dataclass
class RoundDecision:
    """What a policy decided in one round."""

    action: int
    play_type: str           # "optimistic" | "baseline"
    candidate: int           # optimistic candidate, even when gated out
    lcb: Optional[float]     # pessimistic cumulative value L_t (None for plain UCB)
    margin: Optional[float]  # gate slack: LHS - RHS of the constraint check


class PolicyState:
    """Per-trial mutable policy state.

    Tracks the ridge estimator and its ellipsoid, the running sum `ell` of
    expected features of optimistic plays, the play-set sizes m (optimistic)
    and n (baseline), and the baseline-reward accumulators feeding the gate.
    """

    __slots__ = (
        "params", "ridge", "ellipsoid", "ell", "n",
        "sum_baseline_all", "sum_baseline_played",
        "_pending", "_last_play",
    )

    def __init__(self, dim, params):
        self.params = params
        self.ridge = RidgeState(dim, params.lam)
        # Empty-data ellipsoid (center 0, V = lambda*I, radius beta(0)):
        # starting from "all of R^d" would pin the policy on the baseline
        # forever, since the pessimistic value would be -inf on every round.
        self.ellipsoid = ConfidenceEllipsoid.from_ridge(self.ridge, params)
        self.ell = np.zeros(dim)
        self.n = 0
        self.sum_baseline_all = 0.0
        self.sum_baseline_played = 0.0
        self._pending = None
        self._last_play = None

    @property
    def m(self):
        return self.ridge.m

    @property
    def rounds(self):
        return self.m + self.n


def linucb_select(state, psis):
    """Index of the action maximizing the optimistic value; ties -> lowest index."""
    psis = np.asarray(psis, dtype=np.float64)
    if psis.ndim != 2 or psis.shape[0] == 0:
        raise ValueError("need a nonempty stack of feature vectors")
    return int(np.argmax(ucb_values(state.ellipsoid, psis)))


def baseline_kth_best(theta_star, psis, k):
    """Action whose expected reward psi^T theta_star has rank k (descending).

    Ties break toward the lower index; k = 1 is the best action.
    """
    psis = np.asarray(psis, dtype=np.float64)
    if not 1 <= k <= psis.shape[0]:
        raise ValueError(f"rank k={k} out of range [1, {psis.shape[0]}]")
    rewards = psis @ np.asarray(theta_star, dtype=np.float64)
    order = np.argsort(-rewards, kind="stable")
    return int(order[k - 1])


def conservative_gate(state, psi_candidate, r_b_now, alpha):
    """Evaluate the safety gate for one candidate play.

    Returns (ok, lcb, margin) where lcb is the pessimistic cumulative value
    L_t of past optimistic plays plus the candidate, and ok means

        L_t + sum of known baseline rewards over past baseline rounds
            >= (1 - alpha) * (cumulative baseline reward through this round).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if not math.isfinite(r_b_now):
        raise ValueError("baseline reward must be finite")
    lo = lcb_value(state.ellipsoid, state.ell + psi_candidate)
    lhs = lo + state.sum_baseline_played
    rhs = (1.0 - alpha) * (state.sum_baseline_all + r_b_now)
    return lhs >= rhs, lo, lhs - rhs


def _conservative_step(state, psis, baseline_index, r_b_now, alpha):
    psis = np.asarray(psis, dtype=np.float64)
    candidate = linucb_select(state, psis)
    ok, lo, margin = conservative_gate(state, psis[candidate], r_b_now, alpha)
    state.sum_baseline_all += r_b_now
    if ok:
        state._pending = psis[candidate].copy()
        state._last_play = "optimistic"
        return RoundDecision(candidate, "optimistic", candidate, lo, margin)
    state.n += 1
    state.sum_baseline_played += r_b_now
    state._pending = None
    state._last_play = "baseline"
    return RoundDecision(int(baseline_index), "baseline", candidate, lo, margin)


def cslucb_step(state, psis, baseline_index, r_b_now, alpha):
    """One round of the conservative policy on expected features.

    `psis` holds one expected feature vector per action; `r_b_now` is the
    known baseline reward for this round.  On an optimistic decision the
    caller must feed the realized reward to `absorb_reward`; on a baseline
    decision the reward is observed but never enters the estimator.
    """
    return _conservative_step(state, psis, baseline_index, r_b_now, alpha)


def clucb_step(state, phis, baseline_index, r_b_now, alpha):
    """Observed-context variant: identical gate on realized-context features.

    Under point-mass context distributions this coincides with `cslucb_step`
    round for round.
    """
    return _conservative_step(state, phis, baseline_index, r_b_now, alpha)


def linucb_step(state, psis):
    """Unconstrained round: always play and learn from the optimistic action."""
    psis = np.asarray(psis, dtype=np.float64)
    candidate = linucb_select(state, psis)
    state._pending = psis[candidate].copy()
    state._last_play = "optimistic"
    return RoundDecision(candidate, "optimistic", candidate, None, None)


def absorb_reward(state, y):
    """Feed the realized reward of this round's optimistic play.

    Updates the estimator, extends `ell` by the played feature vector, and
    rebuilds the ellipsoid with the enlarged radius.  Rejected when the
    round was a baseline play (those rewards never enter the ridge) or when
    the reward was already absorbed.
    """
    if state._pending is None:
        if state._last_play == "baseline":
            raise RuntimeError("baseline-round rewards are never absorbed")
        raise RuntimeError("no pending optimistic play (reward already absorbed?)")
    psi = state._pending
    state._pending = None
    ridge_update(state.ridge, psi, y)
    state.ell += psi
    state.ellipsoid = ConfidenceEllipsoid.from_ridge(state.ridge, state.params)
    return state
