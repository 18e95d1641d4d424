import math

import numpy as np
import pytest
from mpmath import mp, mpf

from consbandit.confidence import (
    BetaParams,
    ConfidenceEllipsoid,
    RidgeState,
    beta,
    contains,
    lcb_value,
    ridge_update,
    ucb_value,
    ucb_values,
)
from consbandit.numerics import CholeskyFactor, weighted_norm

mp.dps = 50


def make_params(**over):
    base = dict(sigma=0.1, d=2, D=1.0, lam=1.0, A=1.0, delta=0.05)
    base.update(over)
    return BetaParams(**base)


def beta_mpmath(m, p):
    arg = (1 + (m + 1) * mpf(p.D) ** 2 / mpf(p.lam)) / mpf(p.delta)
    return float(mpf(p.sigma) * mp.sqrt(p.d * mp.log(arg)) + mp.sqrt(p.lam) * mpf(p.A))


# ---------------------------------------------------------------------------
# ridge estimator
# ---------------------------------------------------------------------------

def test_empty_ridge_is_zero():
    state = RidgeState(2, lam=1.0)
    assert np.array_equal(state.theta, np.zeros(2))
    assert state.m == 0


def test_single_update_shrinks_towards_half():
    state = RidgeState(2, lam=1.0)
    ridge_update(state, np.array([1.0, 0.0]), 1.0)
    assert np.allclose(state.theta, [0.5, 0.0], atol=1e-14)
    assert state.m == 1


def test_two_updates_two_thirds():
    state = RidgeState(2, lam=1.0)
    for _ in range(2):
        ridge_update(state, np.array([1.0, 0.0]), 1.0)
    assert np.allclose(state.theta, [2.0 / 3.0, 0.0], atol=1e-14)
    assert state.m == 2


def test_ridge_reconstruction_and_residual():
    rng = np.random.default_rng(0)
    state = RidgeState(6, lam=0.7)
    recon = 0.7 * np.eye(6)
    s = np.zeros(6)
    for i in range(300):
        psi = rng.standard_normal(6)
        y = rng.standard_normal()
        ridge_update(state, psi, y)
        recon += np.outer(psi, psi)
        s += psi * y
    assert np.allclose(state.V, (recon + recon.T) / 2, rtol=1e-8)
    residual = np.linalg.norm(state.V @ state.theta - s) / np.linalg.norm(s)
    assert residual <= 1e-10
    assert state.m == 300


def test_ridge_rejects_bad_input():
    state = RidgeState(3, lam=1.0)
    with pytest.raises(ValueError):
        ridge_update(state, np.array([1.0, np.nan, 0.0]), 1.0)
    with pytest.raises(ValueError):
        ridge_update(state, np.ones(3), float("inf"))
    with pytest.raises(ValueError):
        ridge_update(state, np.ones(2), 1.0)


# ---------------------------------------------------------------------------
# radius
# ---------------------------------------------------------------------------

def test_beta_noiseless_reduces_to_prior_term():
    p = make_params(sigma=0.0)
    for m in (0, 5, 333):
        assert beta(m, p) == pytest.approx(math.sqrt(p.lam) * p.A)
    p2 = make_params(sigma=0.0, lam=4.0, A=2.0)
    assert beta(0, p2) == pytest.approx(4.0)


def test_beta_frozen_value():
    p = make_params(sigma=0.1, d=15, D=1.0, lam=1.0, A=5.0, delta=0.05)
    # high-precision evaluation of the radius formula at m = 0
    assert beta(0, p) == pytest.approx(5.743862835553095, rel=1e-12)
    assert beta(0, p) == pytest.approx(beta_mpmath(0, p), rel=1e-12)


@pytest.mark.parametrize("m", [0, 1, 10, 1000])
def test_beta_matches_high_precision(m):
    p = make_params(sigma=0.3, d=7, D=2.5, lam=1.7, A=4.0, delta=0.1)
    assert beta(m, p) == pytest.approx(beta_mpmath(m, p), rel=1e-12)


def test_beta_monotonicities():
    p = make_params()
    vals = [beta(m, p) for m in range(0, 200, 10)]
    assert all(b2 >= b1 for b1, b2 in zip(vals, vals[1:]))
    for field, lo, hi in (("sigma", 0.05, 0.2), ("A", 0.5, 2.0), ("lam", 0.5, 2.0)):
        assert beta(5, make_params(**{field: hi})) >= beta(5, make_params(**{field: lo}))


def test_beta_params_validation():
    with pytest.raises(ValueError):
        make_params(delta=1.0)
    with pytest.raises(ValueError):
        make_params(delta=0.0)
    with pytest.raises(ValueError):
        make_params(lam=0.0)
    with pytest.raises(ValueError):
        make_params(sigma=-0.1)
    with pytest.raises(ValueError):
        beta(-1, make_params())


# ---------------------------------------------------------------------------
# ellipsoid value queries
# ---------------------------------------------------------------------------

def test_degenerate_radius_behaves_like_point():
    # radius must be positive; a tiny radius approximates the point case
    ell = ConfidenceEllipsoid(np.array([1.0, -2.0]), np.eye(2), 1e-300)
    psi = np.array([3.0, 4.0])
    assert ucb_value(ell, psi) == pytest.approx(psi @ ell.center)
    assert lcb_value(ell, psi) == pytest.approx(psi @ ell.center)


def test_ucb_lcb_closed_forms():
    ell = ConfidenceEllipsoid(np.zeros(2), np.eye(2), 2.0)
    psi = np.array([3.0, 4.0])
    assert ucb_value(ell, psi) == pytest.approx(10.0)
    assert lcb_value(ell, psi) == pytest.approx(-10.0)
    ell2 = ConfidenceEllipsoid(np.array([1.0, 0.0]), np.diag([4.0, 1.0]), 1.0)
    e1 = np.array([1.0, 0.0])
    assert ucb_value(ell2, e1) == pytest.approx(1.5)
    assert lcb_value(ell2, np.zeros(2)) == 0.0


def test_ucb_matches_sampled_boundary():
    from oracles import max_over_ellipsoid_sampled

    rng = np.random.default_rng(1)
    for trial in range(5):
        d = int(rng.integers(2, 8))
        mat = np.eye(d)
        for _ in range(3 * d):
            v = rng.standard_normal(d)
            mat += np.outer(v, v)
        mat = (mat + mat.T) / 2
        center = rng.standard_normal(d)
        radius = float(rng.uniform(0.5, 3.0))
        psi = rng.standard_normal(d)
        ell = ConfidenceEllipsoid(center, mat, radius)
        # keep the exploration term ~0.05 so the finite-sample undershoot
        # of uniform boundary sampling stays well inside the window
        psi *= 0.05 / (radius * ell.factor.inv_norm(psi))
        sampled = max_over_ellipsoid_sampled(center, mat, radius, psi, 100_000, rng)
        exact = ucb_value(ell, psi)
        # sampling can only undershoot the true maximum
        assert -1e-2 <= sampled - exact <= 1e-9


def test_ucb_values_batch_matches_scalar():
    rng = np.random.default_rng(2)
    mat = np.eye(4) + np.outer(np.ones(4), np.ones(4))
    ell = ConfidenceEllipsoid(rng.standard_normal(4), mat, 1.3)
    psis = rng.standard_normal((9, 4))
    batch = ucb_values(ell, psis)
    assert np.allclose(batch, [ucb_value(ell, p) for p in psis], rtol=1e-12)


def test_sandwich_property_for_members():
    rng = np.random.default_rng(3)
    for _ in range(10):
        d = int(rng.integers(2, 6))
        mat = np.eye(d)
        for _ in range(2 * d):
            v = rng.standard_normal(d)
            mat += np.outer(v, v)
        mat = (mat + mat.T) / 2
        ell = ConfidenceEllipsoid(rng.standard_normal(d), mat, float(rng.uniform(0.5, 2.0)))
        low = CholeskyFactor(mat)
        for _ in range(100):
            u = rng.standard_normal(d)
            u *= rng.uniform(0, 1) / np.linalg.norm(u)
            # members are center + radius * L^{-T} u with ||u|| <= 1
            theta = ell.center + ell.radius * np.linalg.solve(low.low.T, u)
            assert contains(ell, theta)
            psi = rng.standard_normal(d)
            assert lcb_value(ell, psi) - 1e-9 <= psi @ theta <= ucb_value(ell, psi) + 1e-9


def test_contains_examples():
    ell = ConfidenceEllipsoid(np.zeros(3), np.eye(3), 1.0)
    assert contains(ell, np.zeros(3))
    assert not contains(ell, np.array([2.0, 0.0, 0.0]))
    # boundary point theta = center + radius * V^{-1/2} u
    rng = np.random.default_rng(4)
    mat = np.eye(3) + np.outer([1.0, 2.0, 0.5], [1.0, 2.0, 0.5])
    ell2 = ConfidenceEllipsoid(np.ones(3), mat, 1.7)
    low = CholeskyFactor(mat).low
    u = rng.standard_normal(3)
    u /= np.linalg.norm(u)
    boundary = ell2.center + ell2.radius * np.linalg.solve(low.T, u)
    assert weighted_norm(boundary - ell2.center, mat) == pytest.approx(ell2.radius)
    assert contains(ell2, boundary)


def test_empirical_coverage_small():
    # scaled-down version of the coverage acceptance run
    rng_master = np.random.default_rng(10)
    theta_star = rng_master.standard_normal(4)
    p = BetaParams(sigma=0.1, d=4, D=2.0, lam=1.0,
                   A=float(np.linalg.norm(theta_star)), delta=0.1)
    ok = 0
    runs = 50
    for run in range(runs):
        rng = np.random.default_rng((run, 77))
        state = RidgeState(4, lam=p.lam)
        ell = ConfidenceEllipsoid.from_ridge(state, p)
        good = True
        for _ in range(300):
            if not contains(ell, theta_star):
                good = False
                break
            psi = rng.standard_normal(4)
            psi /= max(1.0, np.linalg.norm(psi) / p.D)
            y = float(theta_star @ psi) + p.sigma * rng.standard_normal()
            ridge_update(state, psi, y)
            ell = ConfidenceEllipsoid.from_ridge(state, p)
        ok += good
    assert ok / runs >= 1.0 - p.delta - 0.06


def test_from_ridge_detaches_from_future_updates():
    state = RidgeState(2, lam=1.0)
    p = make_params()
    ell = ConfidenceEllipsoid.from_ridge(state, p)
    before = ucb_value(ell, np.array([1.0, 1.0]))
    ridge_update(state, np.array([3.0, 1.0]), 2.0)
    assert ucb_value(ell, np.array([1.0, 1.0])) == pytest.approx(before)
