import math

import numpy as np
import pytest
from mpmath import e as mp_e
from mpmath import log as mp_log
from mpmath import mp, mpf, sqrt as mp_sqrt

from consbandit.bounds import (
    TheoryParams,
    elliptical_potential_bound,
    elliptical_potential_check,
    lemma2_bound,
    lemma2_check,
    nT_lower_bound,
    nT_upper_bound,
    total_regret_bound,
    ucb_regret_bound,
)

mp.dps = 50


def params(**over):
    base = dict(d=3, A=1.0, D=1.0, lam=1.0, sigma=0.5, delta=0.1, alpha=0.5,
                r_l=0.5, r_h=1.0, delta_l=0.0, delta_h=1.0, T=500)
    base.update(over)
    return TheoryParams(**base)


# high-precision twins -------------------------------------------------------

def mp_ucb_regret(p, m):
    if m == 0:
        return mpf(0)
    width = mpf(p.A) * mp_sqrt(p.lam) + mpf(p.sigma) * mp_sqrt(
        2 * mp_log(1 / mpf(p.delta)) + p.d * mp_log(1 + mpf(m) * p.D / (mpf(p.lam) * p.d)))
    return 4 * mp_sqrt(mpf(m) * p.d * mp_log(mpf(p.lam) + mpf(m) * p.D / p.d)) * width


def mp_nt_upper(p):
    gap = mpf(p.delta_l) + mpf(p.alpha) * p.r_l
    width = mpf(p.A) * mp_sqrt(p.lam) + mpf(p.sigma)
    return 1 + 114 * mpf(p.d) ** 2 * width ** 2 / (mpf(p.alpha) * p.r_l * gap) \
        * mp_log(62 * p.d * width / (mp_sqrt(p.delta) * gap)) ** 2


def mp_nt_lower(p):
    gap = mpf(p.delta_h) + mpf(p.alpha) * p.r_h
    width = mpf(p.A) * mp_sqrt(p.lam) + mpf(p.sigma)
    return mpf(p.d) ** 2 * width ** 2 / (mpf(p.alpha) * p.r_h * gap) \
        * mp_log(10 * p.d * width / (mp_sqrt(p.delta) * gap)) ** 2


def mp_lemma2(c1, c2, c3):
    return 16 * mpf(c1) ** 2 / (25 * mpf(c3)) * mp_log(2 * mpf(c1) * mp_sqrt(c2) * mp_e / mpf(c3)) ** 2


def random_params(rng):
    return params(
        d=int(rng.integers(1, 30)),
        A=float(rng.uniform(0.1, 5)),
        D=float(rng.uniform(0.1, 1.0)),
        lam=float(rng.uniform(1.0, 4.0)),
        sigma=float(rng.uniform(0.0, 2.0)),
        delta=float(rng.uniform(0.01, 0.5)),
        alpha=float(rng.uniform(0.05, 0.95)),
        r_l=float(rng.uniform(0.1, 0.9)),
        T=int(rng.integers(10, 5000)),
    )


# ---------------------------------------------------------------------------

def test_ucb_regret_bound_zero_plays():
    assert ucb_regret_bound(params(), 0) == 0.0


def test_ucb_regret_bound_monotone():
    p = params()
    assert ucb_regret_bound(p, 100) < ucb_regret_bound(p, 200)


def test_ucb_regret_bound_frozen_point():
    p = params(d=1, A=1.0, sigma=1.0, lam=1.0, D=1.0, delta=0.1)
    got = ucb_regret_bound(p, 100)
    # independent high-precision evaluation of the displayed formula
    assert got == pytest.approx(float(mp_ucb_regret(p, 100)), rel=1e-12)
    assert got == pytest.approx(346.8612104289203, rel=1e-9)


def test_nt_upper_requires_preconditions():
    with pytest.raises(ValueError):
        nT_upper_bound(params(lam=0.5))
    with pytest.raises(ValueError):
        nT_upper_bound(params(D=3.0, lam=4.0))
    assert nT_upper_bound(params(D=2.0, lam=4.0)) > 1.0


def test_nt_upper_decreasing_in_alpha():
    lo, hi = nT_upper_bound(params(alpha=0.3)), nT_upper_bound(params(alpha=0.7))
    assert hi < lo


def test_nt_upper_frozen_point():
    p = params(d=1, A=1.0, sigma=1.0, lam=1.0, alpha=0.5, r_l=0.5, delta_l=0.0, delta=0.1)
    got = nT_upper_bound(p)
    assert got == pytest.approx(float(mp_nt_upper(p)), rel=1e-12)
    assert got == pytest.approx(394993.5149115277, rel=1e-9)


def test_nt_lower_precondition_and_monotonicity():
    with pytest.raises(ValueError):
        nT_lower_bound(params(D=2.0, lam=1.0))
    assert nT_lower_bound(params(alpha=0.8)) < nT_lower_bound(params(alpha=0.2))


def test_nt_lower_frozen_point():
    p = params(d=1, A=1.0, sigma=1.0, lam=1.0, alpha=0.5, r_h=1.0, delta_h=1.0, delta=0.1)
    got = nT_lower_bound(p)
    assert got == pytest.approx(float(mp_nt_lower(p)), rel=1e-12)
    assert got == pytest.approx(74.66276841618058, rel=1e-9)


def test_lower_at_most_upper_on_grid():
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 20:
        p = random_params(rng)
        try:
            up, lo = nT_upper_bound(p), nT_lower_bound(p)
        except ValueError:
            continue
        assert lo <= up
        checked += 1


def test_total_regret_components():
    p = params(D=1.0, lam=1.0)
    parts = total_regret_bound(p)
    assert parts["ucb_term"] >= 0 and parts["conservative_term"] >= 0
    assert parts["distribution_term"] >= 0
    assert parts["conservative_term"] == pytest.approx(nT_upper_bound(p) * p.delta_h, rel=1e-15)
    assert parts["distribution_term"] == pytest.approx(
        4 * math.sqrt(2 * p.T * math.log(1 / p.delta)), rel=1e-15)
    assert parts["total"] == pytest.approx(
        parts["ucb_term"] + parts["conservative_term"] + parts["distribution_term"], rel=1e-15)


def test_total_regret_matches_high_precision():
    rng = np.random.default_rng(1)
    checked = 0
    while checked < 10:
        p = random_params(rng)
        try:
            parts = total_regret_bound(p)
        except ValueError:
            continue
        expect = mp_ucb_regret(p, p.T) + mp_nt_upper(p) * mpf(p.delta_h) \
            + 4 * mp_sqrt(2 * p.T * mp_log(1 / mpf(p.delta)))
        assert parts["total"] == pytest.approx(float(expect), rel=1e-9)
        checked += 1


# elliptical potential ------------------------------------------------------

def test_elliptical_potential_zero_sequence():
    lhs, rhs, ok = elliptical_potential_check(np.empty((0, 3)), lam=1.0)
    assert lhs == 0.0 and rhs == 0.0 and ok


def test_elliptical_potential_random_sequences():
    rng = np.random.default_rng(2)
    for _ in range(20):
        d = int(rng.integers(1, 6))
        k = int(rng.integers(1, 100))
        dmax = float(rng.uniform(0.5, 3.0))
        vecs = rng.standard_normal((k, d))
        norms = np.linalg.norm(vecs, axis=1, keepdims=True)
        vecs = vecs / np.maximum(1.0, norms / dmax)
        lhs, rhs, ok = elliptical_potential_check(vecs, lam=float(rng.uniform(0.5, 2.0)))
        assert ok, (lhs, rhs)


def test_elliptical_potential_hand_case():
    # single vector with ||Y||^2 = D^2, lam = D^2, d = 1: the quadratic form
    # is taken in the pre-update matrix V_0 = lam, so
    # lhs = min(1, D^2/lam) = 1 <= 2 log 2
    lhs, rhs, ok = elliptical_potential_check(np.array([[2.0]]), lam=4.0, D=2.0)
    assert lhs == pytest.approx(1.0)
    assert rhs == pytest.approx(2.0 * math.log(2.0))
    assert ok


# lemma-2 style optimization bound ------------------------------------------

def test_lemma2_hand_value():
    got = lemma2_bound(1.0, math.e, 1.0)
    assert got == pytest.approx(float(mp_lemma2(1, mp_e, 1)), rel=1e-12)
    assert got == pytest.approx(3.0783325155827, rel=1e-9)


def test_lemma2_scaling_in_c1():
    # doubling c1 with c3 compensating the log argument scales the bound by 4
    base = lemma2_bound(1.0, 4.0, 1.0)
    scaled = lemma2_bound(2.0, 4.0, 2.0)
    assert scaled == pytest.approx(2.0 * base, rel=1e-12)  # 4x numerator, 2x denominator
    arg_preserving = lemma2_bound(2.0, 1.0, 2.0)
    assert arg_preserving == pytest.approx(2.0 * lemma2_bound(1.0, 1.0, 1.0), rel=1e-12)


def test_lemma2_matches_high_precision_random():
    rng = np.random.default_rng(3)
    for _ in range(10):
        c1, c2, c3 = (float(rng.uniform(0.2, 3.0)) for _ in range(3))
        assert lemma2_bound(c1, c2, c3) == pytest.approx(float(mp_lemma2(c1, c2, c3)), rel=1e-9)


def test_lemma2_check_reports_both_sides():
    lhs, rhs, ok = lemma2_check(1.0, math.e, 1.0)
    # grid max of sqrt(m) log(e m) - m over m >= 2 is ~0.8433
    assert lhs == pytest.approx(0.84328, abs=2e-3)
    assert rhs == pytest.approx(3.0783, abs=1e-3)
    assert ok


def test_lemma2_check_finds_known_violation():
    # the displayed constant is too small at this corner; the checker must
    # report the violation rather than mask it
    lhs, rhs, ok = lemma2_check(2.0, 2.0, 0.5)
    assert lhs > rhs
    assert not ok


def test_params_validation():
    with pytest.raises(ValueError):
        params(delta_l=2.0)  # delta_l > delta_h
    with pytest.raises(ValueError):
        params(r_l=1.5)  # r_l >= r_h
    with pytest.raises(ValueError):
        params(alpha=0.0)
    with pytest.raises(ValueError):
        lemma2_bound(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        elliptical_potential_bound(-1, 1.0, 1.0, 1)
