"""Cohesive energies g0(s), g(s, s') and g_mu from the optimal damage profile.

The profile problem is solved in the scalar variable gamma = (1 - beta)^2,
reparametrized by the displacement fraction.  Along a minimizer the quantity
f1(sqrt(gamma))^2 / sqrt(s^2 f1^2 + gamma'^2 / 4) is constant, so each arc
of gamma is determined by one number.  Writing q = sqrt(gamma), F = f1(q),
Q = sqrt(max gamma) and kappa = c s (c the conserved constant), the arc from
q = mu up to q = Q needs

    J(kappa) = int_mu^Q q dq / (F sqrt(F^2 - kappa^2))     (half time / c)
    E(kappa) = int_mu^Q 2 q F dq / sqrt(F^2 - kappa^2)     (energy of both arcs)

and the opening is s = 2 kappa J(kappa).  An unconstrained profile has a
smooth maximum, which forces kappa = f1(Q); a profile pinned by the memory
cap has kappa < f1(Q) and a kink at its maximum.

The integrals are evaluated after the substitution q = Q - (Q - mu) u^2 with
the divided difference of f1 taken analytically, so F^2 - kappa^2 is never
formed by subtraction.  A graded Gauss rule in u resolves the inner scale
sqrt(F^2 - kappa^2) however small it gets.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import DomainError, FullCrackError, NonConvergenceWarning, ToleranceNotMetError
from .model import FamilyA, FamilyB, MaterialModel
from .quadrature import gauss_rule, graded_rule

log = logging.getLogger(__name__)

__all__ = [
    "UNBOUNDED",
    "FullCrack",
    "Profile",
    "G0Result",
    "GResult",
    "half_time",
    "g0",
    "g",
    "g_mu",
    "m_of_s",
    "s_of_m",
    "eta_liminf",
    "s_frac",
    "profile_alpha_beta",
    "full_crack_beta",
]

UNBOUNDED = math.inf
FULL_CRACK_TOL = 1e-6
M_MIN = 1e-9  # smallest well depth distinguished from a full crack
Q_TINY = 1e-14
XTOL = 1e-15
WELL_TAIL = 1e-6  # alpha/beta windows end where 1 - beta drops below this


# --------------------------------------------------------------------------
# arc integrals


def _arc(model: MaterialModel, Q: float, kappa: float | None = None, mu: float = 0.0):
    """Return (kappa, J, E) for the arc from q = mu to q = Q."""
    u, w = graded_rule()
    W = Q - mu
    q = Q - W * u * u
    F = model.f1(q)
    FQ = float(model.f1(Q))
    a = W * model.f1_divdiff(q, Q) * (F + FQ)
    if kappa is None:
        kappa, delta = FQ, 0.0
    else:
        delta = (FQ - kappa) * (FQ + kappa)
    root = np.sqrt(delta + a * u * u)
    jac = 2.0 * W * u * w
    J = float(np.sum(jac * q / (F * root)))
    E = float(np.sum(jac * 2.0 * q * F / root))
    return kappa, J, E


def _s_free(model, Q, mu=0.0):
    """Opening of the unconstrained arc pair with peak depth Q."""
    kappa, J, _ = _arc(model, Q, None, mu)
    return 2.0 * kappa * J


def _solve_kappa(model, Q, s, mu=0.0):
    """kappa in (0, f1(Q)) with 2 kappa J(kappa) = s on arcs peaking at Q."""
    FQ = float(model.f1(Q))

    def resid(k):
        k_, J, _ = _arc(model, Q, k, mu)
        return 2.0 * k_ * J - s

    return brentq(resid, 0.0, FQ, xtol=XTOL * max(FQ, 1e-300), rtol=1e-15, maxiter=200)


# --------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class FullCrack:
    """Marker for the fully cracked profile: beta = 1 - exp(-|t|/2), alpha a step."""

    s: float

    @property
    def value(self) -> float:
        return 1.0


class Profile:
    """Optimal profile for one (s, cap) pair.

    ``gamma_samples`` is (t, gamma) on [0, 1]; ``alphabeta_samples`` is
    (t, alpha, beta) on a real-line window and is filled by
    :func:`profile_alpha_beta`.  Samples are computed on first access.
    """

    def __init__(self, model, s, Q, kappa, mu=0.0, constrained=False, J=None):
        self.model = model
        self.s = float(s)
        self.Q = float(Q)
        self.kappa = float(kappa)
        self.mu = float(mu)
        self.constrained = bool(constrained)
        if J is None:
            J = _arc(model, Q, kappa, mu)[1] if Q > mu else 0.0
        self._J = J
        self.alphabeta_samples = None
        self.equipartition_residual = math.nan

    @property
    def cap_M(self) -> float:
        return self.Q * self.Q

    @property
    def m(self) -> float:
        return 1.0 - self.Q

    @property
    def c_const(self) -> float:
        # s = 2 kappa J and c = kappa / s
        return math.inf if self._J <= 0 else 1.0 / (2.0 * self._J)

    def __repr__(self):
        return (
            f"Profile(s={self.s:.6g}, cap_M={self.cap_M:.6g}, c={self.c_const:.6g}, "
            f"constrained={self.constrained})"
        )

    @cached_property
    def gamma_samples(self):
        if self.Q <= self.mu:
            t = np.linspace(0.0, 1.0, 3)
            return t, np.full(3, self.mu**2)
        x = np.linspace(0.0, 1.0, 161)
        half = self.Q - (self.Q - self.mu) * x * x
        half[-1] = self.mu
        A, _ = _arc_tails(self.model, self.Q, self.kappa, self.mu, half[:-1])
        t_half = np.concatenate([0.5 - self.c_const * A, [0.0]])
        t_half = np.clip(t_half, 0.0, 0.5)
        t_half[0] = 0.5
        t = np.concatenate([t_half[::-1], 1.0 - t_half[1:]])
        gam = np.concatenate([half[::-1] ** 2, half[1:] ** 2])
        return t, gam


class G0Result(NamedTuple):
    value: float
    m: float
    profile: object  # Profile or FullCrack


class GResult(NamedTuple):
    value: float
    profile: object
    clamped: bool = False


# --------------------------------------------------------------------------
# public operations


def half_time(model: MaterialModel, s: float, cap_M: float, c: float) -> float:
    """Time for gamma to rise from 0 to cap_M at first-integral constant c."""
    if s < 0 or c <= 0 or not (0.0 < cap_M <= 1.0):
        raise DomainError(f"need s >= 0, c > 0 and cap_M in (0, 1]; got s={s}, cap_M={cap_M}, c={c}")
    Q = math.sqrt(cap_M)
    FQ = float(model.f1(Q))
    kappa = c * s
    if kappa > FQ * (1.0 + 1e-12):
        raise DomainError(f"c*s = {kappa} exceeds f1(sqrt(cap_M)) = {FQ}")
    kappa = min(kappa, FQ)
    _, J, _ = _arc(model, Q, kappa)
    if not math.isfinite(J):
        raise ToleranceNotMetError("half-time quadrature diverged", {"s": s, "cap_M": cap_M, "c": c})
    return c * J


@lru_cache(maxsize=8192)
def _g0_core(model: MaterialModel, s: float):
    """(value, Q, J) for s > 0; Q = None for a full crack."""
    q_hi = 1.0 - M_MIN
    if s >= _s_free(model, q_hi):
        return 1.0, None, 0.0
    if s <= _s_free(model, Q_TINY):
        return model.ell * s, 0.0, 0.0
    try:
        Q = brentq(lambda Q: _s_free(model, Q) - s, Q_TINY, q_hi, xtol=XTOL, rtol=1e-15, maxiter=300)
    except ValueError as exc:  # bracket failed
        raise ToleranceNotMetError("no bracket for the well depth", {"s": s}) from exc
    _, J, E = _arc(model, Q)
    if E >= 1.0 - FULL_CRACK_TOL:
        return 1.0, None, 0.0
    return E, Q, J


def g0(model: MaterialModel, s: float, tol: float = FULL_CRACK_TOL) -> G0Result:
    """Cohesive energy of a pristine point opened by s, with well depth m_s."""
    s = float(s)
    if not s >= 0:
        raise DomainError(f"opening must be nonnegative, got {s}")
    if s == 0.0:
        return G0Result(0.0, 1.0, Profile(model, 0.0, 0.0, 0.0))
    value, Q, J = _g0_core(model, s)
    if Q is None or value >= 1.0 - tol:
        return G0Result(1.0, 0.0, FullCrack(s))
    return G0Result(value, 1.0 - Q, Profile(model, s, Q, float(model.f1(Q)), J=J))


def g(model: MaterialModel, s: float, s_prime: float, tol: float = FULL_CRACK_TOL) -> GResult:
    """Cohesive energy of opening s at a point whose largest past opening is s_prime."""
    s, s_prime = float(s), float(s_prime)
    if not (s >= 0 and s_prime >= 0):
        raise DomainError(f"openings must be nonnegative, got s={s}, s'={s_prime}")
    if s >= s_prime:
        r = g0(model, s, tol)
        return GResult(r.value, r.profile)
    m_prime = g0(model, s_prime, tol).m
    if m_prime <= 0.0:
        # cap at gamma = 1: only the full crack remains (flagged extrapolation)
        log.info("g(%g, %g): memory beyond s_frac, returning 1", s, s_prime)
        return GResult(1.0, FullCrack(s), True)
    Q = 1.0 - m_prime
    if Q <= Q_TINY:
        # memory too small to leave a resolvable well: no constraint
        r = g0(model, s, tol)
        return GResult(r.value, r.profile)
    if s == 0.0:
        return GResult(Q * Q, Profile(model, 0.0, Q, 0.0, constrained=True))
    if s >= _s_free(model, Q):
        r = g0(model, s, tol)
        return GResult(r.value, r.profile)
    kappa = _solve_kappa(model, Q, s)
    _, J, E = _arc(model, Q, kappa)
    value, clamped = _clamp(E, tol, ("g", s, s_prime))
    return GResult(value, Profile(model, s, Q, kappa, constrained=True, J=J), clamped)


def _clamp(value, tol, where):
    if value < 0.0:
        log.warning("clamped %s = %.3e up to 0", where, value)
        return 0.0, True
    if value >= 1.0 - tol:
        if value > 1.0 + tol:
            log.warning("clamped %s = %.9f down to 1", where, value)
        return 1.0, True
    return value, False


def g_mu(model: MaterialModel, s: float, s_prime: float, mu: float, tol: float = FULL_CRACK_TOL) -> float:
    """Energy with damage fixed at 1 - mu at both ends of the cell.

    The well may stay shallower than the memory cap only if s_prime = 0.
    """
    s, s_prime, mu = float(s), float(s_prime), float(mu)
    if not (s >= 0 and s_prime >= 0):
        raise DomainError("openings must be nonnegative")
    if not (0.0 < mu < 1.0):
        raise DomainError(f"mu must lie in (0, 1), got {mu}")
    full = 1.0 - mu * mu
    Q_cap = None
    if s_prime > 0:
        Q_cap = 1.0 - g0(model, s_prime, tol).m
        if not Q_cap > mu:
            raise DomainError(f"need mu < 1 - m_s' = {Q_cap}, got mu={mu}")
    if s == 0.0:
        return 0.0 if Q_cap is None else min(full, Q_cap * Q_cap - mu * mu)
    if Q_cap is None or s >= _s_free(model, Q_cap, mu):
        # cap inactive: free arcs from mu up to their own peak
        q_hi = 1.0 - M_MIN
        if s >= _s_free(model, q_hi, mu):
            return full
        lo = mu + (1.0 - mu) * 1e-12
        if s <= _s_free(model, lo, mu):
            return min(full, _arc(model, lo, None, mu)[2])
        Q = brentq(lambda Q: _s_free(model, Q, mu) - s, lo, q_hi, xtol=XTOL, rtol=1e-15, maxiter=300)
        value = _arc(model, Q, None, mu)[2]
    else:
        kappa = _solve_kappa(model, Q_cap, s, mu)
        value = _arc(model, Q_cap, kappa, mu)[2]
    return min(full, value)


def m_of_s(model_or_law, s: float) -> float:
    """Minimum of the optimal damage profile for opening s."""
    if hasattr(model_or_law, "m_interp"):
        return float(model_or_law.m_interp(s))
    return g0(model_or_law, s).m


def s_of_m(model_or_law, m: float) -> float:
    """Opening whose optimal profile bottoms out at m (inverse of m_of_s)."""
    m = float(m)
    if hasattr(model_or_law, "s_of_m"):
        return model_or_law.s_of_m(m)
    model = model_or_law
    if not (0.0 <= m <= 1.0):
        raise DomainError(f"m must lie in [0, 1], got {m}")
    if m == 1.0:
        return 0.0
    if m < M_MIN:
        sf = s_frac(model)
        if math.isinf(sf):
            raise DomainError("m = 0 is not attained: this model never cracks fully")
        return sf
    return _s_free(model, 1.0 - m)


def eta_liminf(model: MaterialModel) -> float:
    """lim of f1(t) / (1 - t^2) as t -> 1."""
    if isinstance(model, FamilyA):
        return model.ell / 2.0
    if isinstance(model, FamilyB):
        return 0.0
    k = np.arange(4, 26)
    t = 1.0 - 2.0**-k
    r = np.asarray(model.f1(t)) / (1.0 - t * t)
    rich = 2.0 * r[1:] - r[:-1]  # error is first order in 1 - t
    diffs = np.abs(np.diff(rich[-6:]))
    if diffs.max() > 1e-6 * max(1.0, abs(rich[-1])):
        warnings.warn("eta extrapolation did not settle; tail may oscillate", NonConvergenceWarning)
    return max(0.0, float(rich[-1]))


@lru_cache(maxsize=64)
def s_frac(model: MaterialModel, tol: float = FULL_CRACK_TOL) -> float:
    """Smallest opening with g0 = 1, or ``UNBOUNDED``."""
    eta = eta_liminf(model)
    if eta <= 0.0:
        return UNBOUNDED
    lo, hi = 0.0, 6.0 / eta
    if g0(model, hi).value < 1.0:
        return UNBOUNDED
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g0(model, mid).value < 1.0 - tol:
            lo = mid
        else:
            hi = mid
    return hi


# --------------------------------------------------------------------------
# profile reconstruction


def _arc_tails(model, Q, kappa, mu, targets):
    """For each target depth q < Q return

    A(q) = int_q^Q p dp / (F sqrt(F^2 - kappa^2))      (displacement fraction / c)
    B(q) = int_q^Q 2 F dp / (p sqrt(F^2 - kappa^2))    (real-line time)
    """
    targets = np.asarray(targets, dtype=float)
    A = np.empty_like(targets)
    B = np.empty_like(targets)
    FQ = float(model.f1(Q))
    delta = (FQ - kappa) * (FQ + kappa)
    split = max(0.5 * Q, mu)
    upper = targets >= split

    def direct(qt):
        u, w = graded_rule()
        W = (Q - qt)[:, None]
        p = Q - W * u[None, :] ** 2
        F = model.f1(p)
        a = W * model.f1_divdiff(p, Q) * (F + FQ)
        root = np.sqrt(delta + a * u[None, :] ** 2)
        jac = 2.0 * W * u[None, :] * w[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            ia = np.sum(jac * p / (F * root), axis=1)
            ib = np.sum(jac * 2.0 * F / (p * root), axis=1)
        at_top = (Q - qt) <= 0.0
        return np.where(at_top, 0.0, ia), np.where(at_top, 0.0, ib)

    if np.any(upper):
        A[upper], B[upper] = direct(targets[upper])
    lower = ~upper
    if np.any(lower):
        A0, B0 = direct(np.array([split]))
        # log variable below the split: the integrands are smooth in ln p
        lt = np.log(targets[lower])
        knots = np.unique(np.concatenate([lt, np.arange(math.log(split), lt.min(), -0.25), [math.log(split)]]))
        x, w = gauss_rule(16)
        z0, z1 = knots[:-1], knots[1:]
        z = z0[:, None] + (z1 - z0)[:, None] * x[None, :]
        p = np.exp(z)
        F = model.f1(p)
        root = np.sqrt((F - kappa) * (F + kappa))
        wa = (z1 - z0)[:, None] * w[None, :]
        dA = np.sum(wa * p * p / (F * root), axis=1)
        dB = np.sum(wa * 2.0 * F / root, axis=1)
        cumA = np.concatenate([np.cumsum(dA[::-1])[::-1], [0.0]]) + A0[0]
        cumB = np.concatenate([np.cumsum(dB[::-1])[::-1], [0.0]]) + B0[0]
        idx = np.searchsorted(knots, lt)
        A[lower] = cumA[idx]
        B[lower] = cumB[idx]
    return A, B


def full_crack_beta(t):
    """Optimal damage profile of a full crack."""
    return 1.0 - np.exp(-0.5 * np.abs(np.asarray(t, dtype=float)))


def profile_alpha_beta(
    model: MaterialModel,
    s: float,
    window_T: float | None = None,
    s_prime: float = 0.0,
    n_upper: int = 241,
    n_lower: int = 1200,
) -> Profile:
    """Reconstruct the optimal pair (alpha, beta) on a real-line window.

    beta has its minimum at t = 0 and alpha(0) = 1/2.  Without ``window_T``
    the window ends where 1 - beta < 1e-6, padded by one unit.
    """
    res = g(model, s, s_prime)
    prof = res.profile
    if isinstance(prof, FullCrack) or res.value >= 1.0:
        raise FullCrackError(f"g = 1 at s={s}: the optimal profile is the full crack")
    if prof.s == 0.0 and not prof.constrained:
        raise FullCrackError("s = 0 has no damage well")
    Q, kappa = prof.Q, prof.kappa
    c = prof.c_const
    x = np.linspace(0.0, 1.0, n_upper)[1:]
    q_up = Q - 0.5 * Q * x * x
    q_end = min(WELL_TAIL, 0.25 * Q)
    q_lo = np.geomspace(0.5 * Q, q_end, n_lower)[1:]
    q = np.concatenate([[Q], q_up, q_lo])
    A, B = _arc_tails(model, Q, kappa, 0.0, q[1:])
    t = np.concatenate([[0.0], B])
    alpha = 0.5 + c * np.concatenate([[0.0], A])

    # exponential tail beyond q_end, padded one unit past the cut
    F_end = float(model.f1(q_end))
    lam = math.sqrt(max(0.0, 1.0 - (kappa / F_end) ** 2))
    t_cut = t[-1]
    t_win = t_cut + 1.0 if window_T is None else float(window_T)
    if t_win > t_cut:
        dt_tail = np.linspace(0.0, t_win - t_cut, 41)[1:]
        decay = np.exp(-0.5 * lam * dt_tail)
        q_tail = q_end * decay
        a_tail = alpha[-1] + c * q_end**2 * (1.0 - decay**2) / (2.0 * F_end**2 * lam)
        t = np.concatenate([t, t_cut + dt_tail])
        q = np.concatenate([q, q_tail])
        alpha = np.concatenate([alpha, a_tail])
    keep = t <= t_win + 1e-12
    t, q, alpha = t[keep], q[keep], alpha[keep]
    # alpha totals one over the whole line; the truncated tails carry the rest
    beta = 1.0 - q

    full_t = np.concatenate([-t[:0:-1], t])
    full_alpha = np.concatenate([1.0 - alpha[:0:-1], alpha])
    full_beta = np.concatenate([beta[:0:-1], beta])
    prof.alphabeta_samples = (full_t, full_alpha, full_beta)
    prof.equipartition_residual = equipartition_residual(model, prof.s, t, alpha, beta)
    return prof


def equipartition_residual(model, s, t, alpha, beta) -> float:
    """sup |s^2 f(beta)^2 alpha'^2 + beta'^2 - (1 - beta)^2 / 4| on one half-line.

    Derivatives come from cubic splines through the samples, so the check
    is independent of the ODE used to produce them.
    """
    _, idx = np.unique(t, return_index=True)
    t, alpha, beta = t[idx], alpha[idx], beta[idx]
    da = CubicSpline(t, alpha)(t, 1)
    db = CubicSpline(t, beta)(t, 1)
    q = 1.0 - beta
    f = np.asarray(model.f1(q)) / np.maximum(q, 1e-300)
    lhs = s * s * f * f * da * da + db * db
    return float(np.max(np.abs(lhs - q * q / 4.0)))


def profile_energy(model, s, t, alpha, beta) -> float:
    """Direct quadrature of the cell energy of a sampled (alpha, beta) pair.

    The two sides of t = 0 are integrated separately so that a kink at the
    bottom of the well does not spoil the spline derivatives.
    """
    t, alpha, beta = (np.asarray(a, dtype=float) for a in (t, alpha, beta))
    left, right = t <= 0, t >= 0
    if left.sum() > 3 and right.sum() > 3:
        return _half_energy(model, s, t[left], alpha[left], beta[left]) + _half_energy(
            model, s, t[right], alpha[right], beta[right]
        )
    return _half_energy(model, s, t, alpha, beta)


def _half_energy(model, s, t, alpha, beta):
    _, idx = np.unique(t, return_index=True)
    t, alpha, beta = t[idx], alpha[idx], beta[idx]
    da = CubicSpline(t, alpha)(t, 1)
    db = CubicSpline(t, beta)(t, 1)
    q = 1.0 - beta
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(q > 0, np.asarray(model.f1(q)) / q, 0.0)
    dens = s * s * f * f * da * da + q * q / 4.0 + db * db
    return float(np.trapezoid(dens, t))
