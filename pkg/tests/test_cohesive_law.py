import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from cohesive1d.cohesive_law import (
    UNBOUNDED,
    FullCrack,
    eta_liminf,
    full_crack_beta,
    g,
    g0,
    g_mu,
    half_time,
    m_of_s,
    profile_alpha_beta,
    profile_energy,
    s_frac,
    s_of_m,
)
from cohesive1d.errors import DomainError, FullCrackError
from cohesive1d.model import FamilyA, FamilyB

A = FamilyA(1.0)
B = FamilyB(1.5, 2.8)


# half_time -----------------------------------------------------------------


@pytest.mark.parametrize("M", [0.04, 0.25, 0.64])
@pytest.mark.parametrize("c", [0.3, 1.0, 2.5])
def test_half_time_zero_opening_closed_form(M, c):
    # int_0^M dgamma / (2 (1 - sqrt gamma)^2) = 1/(1-Q) - 1 + log(1-Q), Q = sqrt M
    Q = math.sqrt(M)
    closed = c * (1.0 / (1.0 - Q) - 1.0 + math.log(1.0 - Q))
    adaptive = c * quad(lambda gam: 0.5 / (1.0 - math.sqrt(gam)) ** 2, 0.0, M, epsabs=1e-13)[0]
    assert closed == pytest.approx(adaptive, abs=1e-10)
    assert half_time(A, 0.0, M, c) == pytest.approx(closed, abs=1e-8)


def test_half_time_vanishes_with_cap():
    s = 0.5
    vals = [half_time(A, s, M, float(A.f1(math.sqrt(M))) / s) for M in (1e-2, 1e-4, 1e-6)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-2


def test_half_time_increasing_in_c():
    s, M = 0.7, 0.3
    cmax = float(B.f1(math.sqrt(M))) / s
    cs = np.linspace(0.05, 1.0, 12) * cmax
    T = [half_time(B, s, M, c) for c in cs]
    assert np.all(np.diff(T) > 0)


def test_half_time_domain_error():
    with pytest.raises(DomainError):
        half_time(A, 1.0, 0.25, 10.0)


# g0 and m ------------------------------------------------------------------


def test_g0_examples():
    assert g0(A, 0.0).value == 0.0
    r = g0(A, 4.0)
    assert r.value == 1.0 and r.m == 0.0 and isinstance(r.profile, FullCrack)
    # direct discretized minimization (1024 nodes) gave 0.009818204
    assert g0(A, 0.01).value == pytest.approx(0.009818204, abs=1e-6)
    assert g0(A, 0.01).value == pytest.approx(0.0098175, abs=1e-5)


@pytest.mark.parametrize("s,oracle", [(0.5, 0.38244840), (1.0, 0.63910651), (2.0, 0.92038197)])
def test_g0_matches_frozen_oracle(s, oracle):
    # frozen outputs of oracle.g0_direct(FamilyA(1), s, n_nodes=1024)
    assert g0(A, s).value == pytest.approx(oracle, abs=1e-4)


def test_m_examples():
    assert m_of_s(A, 0.0) == 1.0
    assert m_of_s(A, 4.0) == 0.0
    for s in (0.2, 0.5, 1.0):
        assert s_of_m(B, m_of_s(B, s)) == pytest.approx(s, abs=1e-6)


def test_s_of_m_domain():
    with pytest.raises(DomainError):
        s_of_m(B, 0.0)
    with pytest.raises(DomainError):
        s_of_m(A, 1.5)


def test_eta_and_s_frac():
    assert eta_liminf(FamilyA(0.8)) == pytest.approx(0.4)
    assert eta_liminf(B) == 0.0
    assert s_frac(B) == UNBOUNDED
    sf = s_frac(A)
    assert 2.5 <= sf <= 3.5 and sf <= 6.0 / eta_liminf(A)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 3.5), st.floats(0.0, 3.5))
def test_g0_monotone_and_bounded(s1, s2):
    lo, hi = sorted((s1, s2))
    v_lo, v_hi = g0(A, lo).value, g0(A, hi).value
    assert 0.0 <= v_lo <= v_hi + 1e-12
    assert v_hi <= min(1.0, hi) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 2.9))
def test_g0_strictly_below_linear(s):
    assert g0(A, s).value < A.ell * s


def test_m_strictly_decreasing():
    s = np.linspace(0.0, 3.0, 40)
    m = np.array([m_of_s(A, x) for x in s])
    assert np.all(np.diff(m) <= -1e-9)


@pytest.mark.parametrize("model", [A, B])
def test_slope_at_origin(model):
    h = 1e-5
    assert (g0(model, 2 * h).value - g0(model, h).value) / h == pytest.approx(model.ell, abs=1e-3)


# g with memory -------------------------------------------------------------


@pytest.mark.parametrize("s", [0.3, 1.0, 2.0])
def test_g_without_memory_is_g0(s):
    assert g(B, s, 0.0).value == g0(B, s).value


@pytest.mark.parametrize("m", [0.3, 0.5, 0.7])
def test_g_at_zero_opening(m):
    sp = s_of_m(B, m)
    assert g(B, 0.0, sp).value == pytest.approx((1 - m) ** 2, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_g_dispatch_identity(a, b):
    s, sp = max(a, b), min(a, b)
    assert g(B, s, sp).value == g0(B, s).value


def test_g_continuous_across_dispatch():
    for sp in (0.3, 0.8, 1.5):
        below = g(B, sp * (1 - 1e-9), sp).value
        above = g(B, sp, sp).value
        assert below == pytest.approx(above, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.05, 2.0), st.floats(0.0, 1.0))
def test_g_bounds_and_monotone(s, sp, frac):
    msp = m_of_s(B, sp)
    val = g(B, s, sp).value
    assert (1 - msp) ** 2 - 1e-9 <= val <= min(1.0, (1 - msp) ** 2 + B.ell * s) + 1e-9
    assert g(B, frac * s, sp).value <= val + 1e-9
    assert g(B, s, frac * sp).value <= val + 1e-9


def test_g_above_g0_under_memory():
    assert g(B, 0.3, 1.0).value > g0(B, 0.3).value


def test_g_flat_slope_at_zero():
    for sp in (0.5, 1.0):
        h = 1e-6
        slope = (g(B, h, sp).value - g(B, 0.0, sp).value) / h
        assert abs(slope) <= 1e-3


def test_g_mu_limits():
    for s, sp in ((0.2, 0.8), (0.5, 1.5), (1.0, 0.5)):
        assert g_mu(B, s, sp, 1e-4) == pytest.approx(g(B, s, sp).value, abs=1e-6)
    for mu in (0.05, 0.1, 0.2):
        sp = 1.0
        Q = 1 - m_of_s(B, sp)
        # two exponential arcs from level 1 - mu to the cap
        assert g_mu(B, 0.0, sp, mu) == pytest.approx(Q * Q - mu * mu, abs=1e-12)


def test_g_mu_domain():
    with pytest.raises(DomainError):
        g_mu(B, 0.5, 0.5, 1.2)
    sp = s_of_m(B, 0.7)
    with pytest.raises(DomainError):
        g_mu(B, 0.1, sp, 0.35)


# profiles ------------------------------------------------------------------


@pytest.mark.parametrize("s", [0.5, 1.0, 1.5, 2.0])
def test_profile_invariants(s):
    prof = profile_alpha_beta(A, s)
    t, alpha, beta = prof.alphabeta_samples
    assert np.all((beta >= 0) & (beta <= 1))
    assert 1 - beta[0] < 1e-5 and 1 - beta[-1] < 1e-5
    assert np.all(np.diff(alpha) >= -1e-12)
    assert alpha[-1] - alpha[0] == pytest.approx(1.0, abs=1e-5)
    assert beta.min() == pytest.approx(1 - math.sqrt(prof.cap_M), abs=1e-12)
    assert prof.equipartition_residual <= 1e-4
    tg, gam = prof.gamma_samples
    assert gam[0] == pytest.approx(0, abs=1e-12) and gam[-1] == pytest.approx(0, abs=1e-12)
    assert np.all(gam <= prof.cap_M + 1e-12)
    half = tg <= 0.5
    assert np.all(np.diff(gam[half]) >= -1e-12)
    assert np.allclose(gam, np.interp(1 - tg, tg, gam), atol=1e-6)
    # (1 - beta)^2 composed with the inverse of alpha reproduces gamma
    recon = np.interp(tg, alpha, (1 - beta) ** 2)
    assert np.max(np.abs(recon - gam)) <= 1e-4
    assert profile_energy(A, s, t, alpha, beta) == pytest.approx(g0(A, s).value, abs=1e-3)


def test_constrained_profile_has_kink():
    sp = s_of_m(B, 0.2)
    prof = profile_alpha_beta(B, 0.3, s_prime=sp)
    assert prof.constrained
    t, _, beta = prof.alphabeta_samples
    k = int(np.argmin(beta))
    left = (beta[k] - beta[k - 1]) / (t[k] - t[k - 1])
    right = (beta[k + 1] - beta[k]) / (t[k + 1] - t[k])
    assert left < -1e-3 and right > 1e-3


def test_full_crack_profile_energy():
    t = np.linspace(-60, 60, 120001)
    beta = full_crack_beta(t)
    alpha = (t > 0).astype(float)
    assert profile_energy(A, 0.0, t, alpha, beta) == pytest.approx(1.0, abs=1e-6)


def test_profile_of_full_crack_raises():
    with pytest.raises(FullCrackError):
        profile_alpha_beta(A, 4.0)
