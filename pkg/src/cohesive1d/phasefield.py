"""Phase-field (damage) approximation of the cohesive energy on a 1-D bar.

Fields live on the extended interval (-1, 2) with P1 elements.  The discrete
energy is

    sum_k a_k (u_{k+1} - u_k)^2 / dx               a_k = mean of f_eps^2(v) at the cell ends
  + sum_i w_i (1 - v_i)^2 / (4 eps)                trapezoid weights w_i
  + eps sum_k (v_{k+1} - v_k)^2 / dx

with f_eps = min(1, sqrt(eps) f).  u is clamped to b(0) left of -L_eps and to
b(1) right of 1 + L_eps; pinned nodes carry the cap v <= m of their memory.
As eps -> 0 the minimum approaches the cohesive limit energy.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from . import cohesive_law as cl
from .errors import FullCrackError, GridMismatchError, NoWellError
from .model import MaterialModel, eval_f_eps_sq

log = logging.getLogger(__name__)

__all__ = [
    "PhaseFieldState",
    "AltOptions",
    "AltResult",
    "PhaseFieldScenario",
    "SweepRow",
    "SweepResult",
    "BlowupReport",
    "make_state",
    "energy_F_eps",
    "energy_parts",
    "alt_minimize",
    "gamma_sweep",
    "limit_energy",
    "blowup_extract",
]

OMEGA = (-1.0, 2.0)


@dataclass(eq=False)
class PhaseFieldState:
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray
    eps: float
    L_eps: float
    b: tuple
    pins: tuple = ()  # (node index, cap)

    def __post_init__(self):
        n = self.x.size
        if self.u.size != n or self.v.size != n:
            raise GridMismatchError("u, v and the grid must have the same number of nodes")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def clamp_left(self) -> np.ndarray:
        return self.x < -self.L_eps

    @property
    def clamp_right(self) -> np.ndarray:
        return self.x > 1.0 + self.L_eps

    @property
    def upper(self) -> np.ndarray:
        """Nodal upper bound for v: 1, or the cap at pinned nodes."""
        ub = np.ones(self.x.size)
        for i, cap in self.pins:
            ub[i] = min(ub[i], cap)
        return ub

    def copy(self) -> "PhaseFieldState":
        return PhaseFieldState(self.x, self.u.copy(), self.v.copy(), self.eps, self.L_eps, self.b, self.pins)


def make_state(eps, b, pins=(), model_or_law=None, cells_per_eps: int = 8, L_eps=None, v0=None) -> PhaseFieldState:
    """Uniform grid with dx <= eps / cells_per_eps, u linear, v = 1 (or v0).

    ``pins`` are (x, s_prime) pairs; the cap is the well depth m of s_prime,
    taken from ``model_or_law``.  The clamp layer defaults to L_eps = eps^(3/4),
    which vanishes while L_eps / eps grows.  The layer lowers the elastic
    energy by O(L_eps); at L_eps = sqrt(eps) that outweighs the O(eps)
    regularization excess and the gap to the limit changes sign.
    """
    n_cells = int(math.ceil((OMEGA[1] - OMEGA[0]) * cells_per_eps / eps))
    x = np.linspace(OMEGA[0], OMEGA[1], n_cells + 1)
    L = eps**0.75 if L_eps is None else float(L_eps)
    b0, b1 = float(b[0]), float(b[1])
    u = np.clip(b0 + (b1 - b0) * (x + L) / (1.0 + 2.0 * L), min(b0, b1), max(b0, b1))
    pin_list = []
    for xp, sp in pins:
        if pins and model_or_law is None:
            raise ValueError("pins need a model or law to turn memory into a cap")
        i = int(np.argmin(np.abs(x - xp)))
        pin_list.append((i, float(cl.m_of_s(model_or_law, sp))))
    v = np.ones_like(x) if v0 is None else np.asarray(v0(x) if callable(v0) else v0, dtype=float)
    st = PhaseFieldState(x, u, v, float(eps), L, (b0, b1), tuple(pin_list))
    st.v = np.clip(st.v, 0.0, st.upper)
    return st


def _weights(n, dx):
    w = np.full(n, dx)
    w[[0, -1]] *= 0.5
    return w


def energy_parts(state: PhaseFieldState, model: MaterialModel) -> dict:
    dx, eps = state.dx, state.eps
    F, _, _ = eval_f_eps_sq(model, state.v, eps)
    a = 0.5 * (F[:-1] + F[1:])
    du = np.diff(state.u)
    elastic = float(np.sum(a * du * du) / dx)
    well = float(np.sum(_weights(state.x.size, dx) * (1.0 - state.v) ** 2) / (4.0 * eps))
    dv = np.diff(state.v)
    grad = float(eps * np.sum(dv * dv) / dx)
    return {"elastic": elastic, "well": well, "gradient": grad, "total": elastic + well + grad}


def energy_F_eps(state: PhaseFieldState, model: MaterialModel, constrained: bool = True) -> float:
    """Discrete energy; with ``constrained`` a violated pin or clamp gives +inf."""
    if constrained:
        tol = 1e-12
        if np.any(state.v > state.upper + tol) or np.any(state.v < -tol):
            return math.inf
        if np.any(np.abs(state.u[state.clamp_left] - state.b[0]) > tol) or np.any(
            np.abs(state.u[state.clamp_right] - state.b[1]) > tol
        ):
            return math.inf
    return energy_parts(state, model)["total"]


# --------------------------------------------------------------------------
# alternate minimization


@dataclass
class AltOptions:
    tol: float = 1e-10
    max_iter: int = 20000
    v_newton_iter: int = 30
    a_floor: float = 1e-14
    monotone_slack: float = 1e-12


@dataclass
class AltResult:
    state: PhaseFieldState
    energy: float
    iterations: int
    converged: bool
    u_residual: float


def _u_step(state: PhaseFieldState, model, opts: AltOptions) -> float:
    """Exact minimization in u: SPD tridiagonal solve on the unclamped nodes."""
    F, _, _ = eval_f_eps_sq(model, state.v, state.eps)
    a = np.maximum(0.5 * (F[:-1] + F[1:]), opts.a_floor)
    n = state.x.size
    free = ~(state.clamp_left | state.clamp_right)
    free[[0, -1]] = False
    u = state.u.copy()
    u[state.clamp_left] = state.b[0]
    u[state.clamp_right] = state.b[1]
    if not np.any(free):
        state.u = u
        return 0.0
    idx = np.flatnonzero(free)
    lo, hi = idx[0], idx[-1]  # free nodes form one contiguous block
    left, right = a[lo - 1 : hi], a[lo : hi + 1]
    diag = left + right
    rhs = np.zeros(idx.size)
    rhs[0] += a[lo - 1] * u[lo - 1]
    rhs[-1] += a[hi] * u[hi + 1]
    ab = np.zeros((3, idx.size))
    ab[0, 1:] = -a[lo:hi]
    ab[1] = diag
    ab[2, :-1] = -a[lo:hi]
    sol = solve_banded((1, 1), ab, rhs)
    u[lo : hi + 1] = sol
    Au = diag * sol
    Au[1:] -= a[lo:hi] * sol[:-1]
    Au[:-1] -= a[lo:hi] * sol[1:]
    res = float(np.max(np.abs(Au - rhs)) / max(np.max(np.abs(rhs)), np.max(np.abs(Au)), 1e-300))
    state.u = u
    return res


def _v_energy(v, e, w, eps, dx, model):
    F, _, _ = eval_f_eps_sq(model, v, eps)
    dv = np.diff(v)
    return float(0.5 * np.sum(e * (F[:-1] + F[1:])) + np.sum(w * (1 - v) ** 2) / (4 * eps) + eps * np.sum(dv * dv) / dx)


def _v_step(state: PhaseFieldState, model, opts: AltOptions) -> None:
    """Projected Newton descent in v on the box [0, upper].

    The Hessian is tridiagonal; the curvature of f_eps^2 enters only where it
    is nonnegative, so the model stays positive definite.  Above the cap of
    f_eps the one-sided derivative (zero) is used.  Steps are backtracked
    until the energy does not increase.
    """
    eps, dx = state.eps, state.dx
    n = state.x.size
    du = np.diff(state.u)
    e = du * du / dx
    w = _weights(n, dx)
    ub = state.upper
    v = np.clip(state.v, 0.0, ub)
    E = _v_energy(v, e, w, eps, dx, model)
    k = eps / dx
    ecell = np.zeros(n)
    ecell[:-1] += 0.5 * e
    ecell[1:] += 0.5 * e
    for _ in range(opts.v_newton_iter):
        F, F1, F2 = eval_f_eps_sq(model, v, eps)
        lap = np.zeros(n)
        lap[:-1] += v[:-1] - v[1:]
        lap[1:] += v[1:] - v[:-1]
        grad = F1 * ecell - w * (1 - v) / (2 * eps) + 2 * k * lap
        fixed = ((v <= 0.0) & (grad > 0)) | ((v >= ub) & (grad < 0))
        pg = np.where(fixed, 0.0, grad)
        if np.max(np.abs(pg)) < 1e-13:
            break
        nb = np.full(n, 2.0)
        nb[[0, -1]] = 1.0
        diag = np.maximum(F2, 0.0) * ecell + w / (2 * eps) + 2 * k * nb
        off = np.full(n - 1, -2 * k)
        off[fixed[:-1] | fixed[1:]] = 0.0
        diag = np.where(fixed, 1.0, diag)
        ab = np.zeros((3, n))
        ab[0, 1:] = off
        ab[1] = diag
        ab[2, :-1] = off
        step = -solve_banded((1, 1), ab, pg)
        lam = 1.0
        accepted = False
        for _ in range(50):
            trial = np.clip(v + lam * step, 0.0, ub)
            Et = _v_energy(trial, e, w, eps, dx, model)
            if Et <= E:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            # projected gradient as a fallback direction
            lam = 1.0 / (4 * k + 1.0 / (2 * eps) + np.max(np.abs(F2 * ecell)) + 1e-300)
            for _ in range(50):
                trial = np.clip(v - lam * pg, 0.0, ub)
                Et = _v_energy(trial, e, w, eps, dx, model)
                if Et <= E:
                    accepted = True
                    break
                lam *= 0.5
        if not accepted:
            break
        dE = E - Et
        v, E = trial, Et
        if dE <= 1e-15 * max(abs(E), 1.0):
            break
    state.v = v


def alt_minimize(state: PhaseFieldState, model: MaterialModel, opts: AltOptions | None = None) -> AltResult:
    """Alternate exact u-steps and projected descent v-steps until the
    relative energy decrease per round drops below ``opts.tol``."""
    opts = opts or AltOptions()
    st = state.copy()
    st.v = np.clip(st.v, 0.0, st.upper)
    res = _u_step(st, model, opts)
    E = energy_F_eps(st, model)
    converged = False
    worst_res = res
    it = 0
    for it in range(1, opts.max_iter + 1):
        E_round = E
        _v_step(st, model, opts)
        E_v = energy_F_eps(st, model)
        if E_v > E + opts.monotone_slack * max(1.0, abs(E)):
            raise AssertionError(f"v-step increased the energy: {E} -> {E_v}")
        res = _u_step(st, model, opts)
        worst_res = max(worst_res, res)
        E_u = energy_F_eps(st, model)
        if E_u > E_v + opts.monotone_slack * max(1.0, abs(E_v)):
            raise AssertionError(f"u-step increased the energy: {E_v} -> {E_u}")
        E = E_u
        if E_round - E <= opts.tol * max(abs(E), 1e-300):
            converged = True
            break
    if not converged:
        log.warning("alternate minimization stopped after %d rounds at eps=%g", it, st.eps)
    return AltResult(st, E, it, converged, worst_res)


# --------------------------------------------------------------------------
# eps sweeps


@dataclass
class PhaseFieldScenario:
    b: tuple = (0.0, 1.0)
    pins: tuple = ()  # (x, s_prime)
    cells_per_eps: int = 8
    notch_centers: tuple = (0.5,)


@dataclass
class SweepRow:
    eps: float
    energy: float
    gap: float
    min_v: float
    x_min: float
    seed: str
    converged: bool
    iterations: int


@dataclass
class SweepResult:
    limit_energy: float
    rows: list
    states: dict = field(default_factory=dict, repr=False)

    @property
    def eps(self) -> np.ndarray:
        return np.array([r.eps for r in self.rows])

    @property
    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.rows])

    def relative_gaps(self) -> np.ndarray:
        return self.gaps / self.limit_energy

    def orders(self) -> np.ndarray:
        """Empirical orders log(gap_i / gap_{i+1}) / log(eps_i / eps_{i+1})."""
        g, e = np.abs(self.gaps), self.eps
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(g[:-1] / g[1:]) / np.log(e[:-1] / e[1:])


def limit_energy(scenario: PhaseFieldScenario, law, n_cells: int = 16) -> float:
    """Minimum of the cohesive limit energy with the scenario's data.

    The bar problem is solved by the evolution module's step minimizer with
    pins turned into memory at the nearest node, without penalty.
    """
    from .evolution import CrackState, minimize_step, total_energy

    mem = np.zeros(n_cells + 1)
    for xp, sp in scenario.pins:
        mem[int(round(np.clip(xp, 0.0, 1.0) * n_cells))] = sp
    state = CrackState(n_cells, mem)
    u = minimize_step(state, scenario.b, None, law)
    return total_energy(u, state, scenario.b, None, law)["total"]


def _notch(center, eps, depth=0.0):
    return lambda x: 1.0 - (1.0 - depth) * np.exp(-np.abs(x - center) / (2.0 * eps))


def gamma_sweep(
    scenario: PhaseFieldScenario,
    eps_list,
    model: MaterialModel,
    law,
    opts: AltOptions | None = None,
    keep_states: bool = True,
) -> SweepResult:
    """Minimize the constrained phase-field energy for each eps (multistart)
    and compare with the limit minimum."""
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    phi = limit_energy(scenario, law)
    rows, states = [], {}
    prev = None
    for eps in eps_list:
        seeds = {"intact": None}
        centers = [xp for xp, _ in scenario.pins] + list(scenario.notch_centers)
        for c in centers:
            seeds[f"notch@{c:g}"] = _notch(c, eps)
        if prev is not None:
            seeds["continuation"] = lambda x, p=prev: np.interp(x, p.x, p.v)
        best = None
        for name, v0 in seeds.items():
            st = make_state(eps, scenario.b, scenario.pins, law, scenario.cells_per_eps, v0=v0)
            r = alt_minimize(st, model, opts)
            log.info("eps=%g seed=%s energy=%.8g rounds=%d", eps, name, r.energy, r.iterations)
            if best is None or r.energy < best[1].energy:
                best = (name, r)
        name, r = best
        k = int(np.argmin(r.state.v))
        rows.append(SweepRow(eps, r.energy, r.energy - phi, float(r.state.v[k]), float(r.state.x[k]), name, r.converged, r.iterations))
        if keep_states:
            states[eps] = r.state
        prev = r.state
    return SweepResult(phi, rows, states)


# --------------------------------------------------------------------------
# blow-up


@dataclass
class BlowupReport:
    x_center: float
    s_estimate: float
    m_observed: float
    m_reference: float
    t: np.ndarray
    w: np.ndarray
    z: np.ndarray
    beta_ref: np.ndarray
    alpha_ref: np.ndarray
    beta_error: float  # ||w - beta|| / ||1 - beta|| on the window
    alpha_error: float  # ||z - s (alpha - 1/2)|| / ||s (alpha - 1/2)||
    outer_dissipation: float
    full_crack: bool

    def columns(self) -> dict:
        return {"t": self.t, "w": self.w, "z": self.z, "beta_ref": self.beta_ref, "alpha_ref": self.alpha_ref}


def blowup_extract(
    state: PhaseFieldState,
    model: MaterialModel,
    law=None,
    T_win: float = 20.0,
    n_t: int = 801,
    s_prime: float = 0.0,
    eta: float = 0.1,
) -> BlowupReport:
    """Rescale the fields around the deepest damage node and compare with the
    optimal profile of the opening read off across the well."""
    v, u, x, eps = state.v, state.u, state.x, state.eps
    k = int(np.argmin(v))  # argmin takes the leftmost of ties
    if v[k] >= 0.9:
        raise NoWellError(f"min v = {v[k]:.4g}: no damage well")
    xc = float(x[k])
    t = np.linspace(-T_win, T_win, n_t)
    w = np.interp(xc + eps * t, x, v)
    uc = float(u[k])
    z = np.interp(xc + eps * t, x, u) - uc

    # opening: increment across the window minus the far-field elastic part
    dx = state.dx
    lo, hi = xc - eps * T_win, xc + eps * T_win
    slope_l = (np.interp(lo, x, u) - np.interp(lo - 4 * dx, x, u)) / (4 * dx)
    slope_r = (np.interp(hi + 4 * dx, x, u) - np.interp(hi, x, u)) / (4 * dx)
    jump = float(np.interp(hi, x, u) - np.interp(lo, x, u))
    s = abs(jump - 0.5 * (slope_l + slope_r) * (hi - lo))

    source = law if law is not None else model
    try:
        prof = cl.profile_alpha_beta(model, s, window_T=T_win, s_prime=s_prime)
        tr, ar, br = prof.alphabeta_samples
        beta_ref = np.interp(t, tr, br)
        alpha_ref = np.interp(t, tr, ar)
        m_ref = float(cl.m_of_s(source, s)) if s_prime == 0 else float(np.min(br))
        full = False
    except FullCrackError:
        beta_ref = cl.full_crack_beta(t)
        alpha_ref = np.where(t < 0, 0.0, np.where(t > 0, 1.0, 0.5))
        m_ref, full = 0.0, True
    sign = 1.0 if jump >= 0 else -1.0
    z_ref = sign * s * (alpha_ref - 0.5)

    def l2(f):
        return math.sqrt(np.trapezoid(f * f, t))

    beta_err = l2(w - beta_ref) / max(l2(1.0 - beta_ref), 1e-300)
    alpha_err = l2(z - z_ref) / max(l2(z_ref), 1e-300)

    outside = np.abs(x - xc) >= eta
    wts = _weights(x.size, dx)
    dv = np.diff(v) / dx
    cell_out = outside[:-1] & outside[1:]
    outer = float(np.sum((wts * (1 - v) ** 2)[outside]) / (4 * eps) + eps * np.sum((dv * dv)[cell_out]) * dx)
    return BlowupReport(xc, s, float(v[k]), m_ref, t, w, z, beta_ref, alpha_ref, beta_err, alpha_err, outer, full)
