"""Time-discrete quasi-static cohesive evolution on a 1-D bar.

The bar [0, 1] is split into N cells with nodes x_i = i/N.  A displacement is
stored as a continuous piecewise-linear part c plus jumps J_i at nodes, so on
cell k

    u(x) = c(x) + sum_{i <= k} J_i .

Node 0 and node N carry the boundary jumps: the continuous part starts at
b(0) and ends at b(1) - sum(J), so u^-(0) = b(0) and u^+(1) = b(1).

The energy of a step is

    sum_k dx h(strain_k) + sum_i g(|J_i|, memory_i) + w_pen * int |u - w|^2

with the relaxed elastic density h and the cohesive law g.  Every step is a
global minimization (multistart + alternating directions); the crack memory
is then updated with the irreversibility rule.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import GridMismatchError, NonConvergenceWarning
from .model import eval_h, eval_h_prime

log = logging.getLogger(__name__)

__all__ = [
    "TimeTable",
    "SeparableField",
    "LoadProgram",
    "CrackState",
    "Displacement",
    "StepProblem",
    "StepOptions",
    "EvolutionTrace",
    "total_energy",
    "minimize_step",
    "update_state",
    "run",
    "reduced_energy_batch",
    "work_increment",
]

# --------------------------------------------------------------------------
# loading


@dataclass(frozen=True)
class TimeTable:
    """Piecewise-linear function of time, constant beyond its end points."""

    times: tuple
    values: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size < 1 or t.size != len(self.values) or np.any(np.diff(t) <= 0):
            raise ValueError("time table needs strictly increasing times and one value per time")

    def __call__(self, t):
        return float(np.interp(t, self.times, self.values))

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class SeparableField:
    """w(t, x) = amplitude(t) * shape(x), shape piecewise linear on a uniform grid."""

    amplitude: TimeTable
    shape: tuple

    def __call__(self, t, x):
        xs = np.linspace(0.0, 1.0, len(self.shape))
        return self.amplitude(t) * np.interp(x, xs, self.shape)

    @property
    def sup(self) -> float:
        return self.amplitude.sup * float(np.max(np.abs(self.shape)))


def _zero_field(t, x):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass
class LoadProgram:
    T_final: float
    tau: float
    b0: Callable = field(default_factory=lambda: TimeTable((0.0,), (0.0,)))
    b1: Callable = field(default_factory=lambda: TimeTable((0.0,), (0.0,)))
    w: Callable = _zero_field
    penalty_weight: float = 0.0
    s_bar: float = 0.05

    def __post_init__(self):
        if not (self.T_final > 0 and self.tau > 0):
            raise ValueError("T_final and tau must be positive")
        if not self.s_bar > 0:
            raise ValueError("s_bar must be positive")
        if self.penalty_weight < 0:
            raise ValueError("penalty_weight must be nonnegative")

    def times(self) -> np.ndarray:
        n = int(math.floor(self.T_final / self.tau + 1e-9))
        t = self.tau * np.arange(n + 1)
        if self.T_final - t[-1] > 1e-12 * self.T_final:
            t = np.append(t, self.T_final)
        return t

    def b(self, t):
        return float(self.b0(t)), float(self.b1(t))

    def w_nodal(self, t, n_cells):
        return np.asarray(self.w(t, np.linspace(0.0, 1.0, n_cells + 1)), dtype=float)

    def reach(self, n_cells, times=None) -> float:
        """Bound on |jump|: twice the largest boundary or target value."""
        times = self.times() if times is None else times
        sup = 0.0
        for t in times:
            b0, b1 = self.b(t)
            sup = max(sup, abs(b0), abs(b1), float(np.max(np.abs(self.w_nodal(t, n_cells)))))
        return 2.0 * sup


# --------------------------------------------------------------------------
# state


@dataclass(frozen=True, eq=False)
class CrackState:
    """Crack sites (nodes with memory > 0) of a bar with n_cells cells."""

    n_cells: int
    memory: np.ndarray

    def __post_init__(self):
        mem = np.array(self.memory, dtype=float)
        if mem.shape != (self.n_cells + 1,):
            raise GridMismatchError(f"memory needs {self.n_cells + 1} entries, got {mem.shape}")
        mem.setflags(write=False)
        object.__setattr__(self, "memory", mem)

    @classmethod
    def empty(cls, n_cells: int) -> "CrackState":
        return cls(n_cells, np.zeros(n_cells + 1))

    @property
    def sites(self):
        idx = np.flatnonzero(self.memory > 0)
        return [(int(i), float(self.memory[i])) for i in idx]

    @property
    def delta_min(self) -> float:
        idx = np.flatnonzero(self.memory > 0)
        if idx.size < 2:
            return math.inf
        return float(np.min(np.diff(idx))) / self.n_cells

    def contains(self, other: "CrackState") -> bool:
        """True if every site of ``other`` is a site here with at least its memory."""
        return bool(np.all(self.memory >= other.memory))


@dataclass(eq=False)
class Displacement:
    c: np.ndarray  # continuous part at the N+1 nodes
    jumps: np.ndarray  # J_i at the N+1 nodes
    energy: float = math.nan
    converged: bool = True

    @property
    def n_cells(self) -> int:
        return self.c.size - 1

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.c.size)

    @property
    def _partial(self):
        return np.cumsum(self.jumps)

    @property
    def u_plus(self) -> np.ndarray:
        return self.c + self._partial

    @property
    def u_minus(self) -> np.ndarray:
        return self.c + np.concatenate([[0.0], self._partial[:-1]])

    @property
    def strains(self) -> np.ndarray:
        return np.diff(self.c) * self.n_cells

    def sup_norm(self) -> float:
        return float(max(np.max(np.abs(self.u_plus[:-1])), np.max(np.abs(self.u_minus[1:]))))


# --------------------------------------------------------------------------
# step energy


@dataclass(frozen=True, eq=False)
class StepProblem:
    """Data of one minimization step."""

    n_cells: int
    b: tuple
    w: np.ndarray
    penalty: float
    memory: np.ndarray
    reach: float

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_cells + 1)


def _surface(problem: StepProblem, law, J):
    """Surface energy for a batch of jump vectors J (B, N+1)."""
    aJ = np.abs(J)
    mem = problem.memory
    pristine = mem == 0
    total = np.zeros(J.shape[0])
    if np.any(pristine):
        total += np.sum(law.g0_interp(aJ[:, pristine]), axis=1)
    for i in np.flatnonzero(~pristine):
        total += law.g(aJ[:, i], mem[i])
    return total


def _parts(problem: StepProblem, law, c, J, ell):
    """(elastic, surface, penalty) energies for batches c, J of shape (B, N+1)."""
    dx = problem.dx
    xi = np.diff(c, axis=1) / dx
    elastic = dx * np.sum(eval_h(ell, xi), axis=1)
    surface = _surface(problem, law, J)
    if problem.penalty > 0:
        S = np.cumsum(J, axis=1)[:, :-1]
        d0 = c[:, :-1] + S - problem.w[None, :-1]
        d1 = c[:, 1:] + S - problem.w[None, 1:]
        pen = problem.penalty * dx / 3.0 * np.sum(d0 * d0 + d0 * d1 + d1 * d1, axis=1)
    else:
        pen = np.zeros(J.shape[0])
    return elastic, surface, pen


def _thomas(lower, diag, upper, rhs):
    """Batched tridiagonal solve along the last axis."""
    n = diag.shape[-1]
    cp = np.empty_like(diag)
    dp = np.empty_like(rhs)
    cp[..., 0] = upper[..., 0] / diag[..., 0] if n > 1 else 0.0
    dp[..., 0] = rhs[..., 0] / diag[..., 0]
    for k in range(1, n):
        den = diag[..., k] - lower[..., k - 1] * cp[..., k - 1]
        if k < n - 1:
            cp[..., k] = upper[..., k] / den
        dp[..., k] = (rhs[..., k] - lower[..., k - 1] * dp[..., k - 1]) / den
    out = np.empty_like(rhs)
    out[..., -1] = dp[..., -1]
    for k in range(n - 2, -1, -1):
        out[..., k] = dp[..., k] - cp[..., k] * out[..., k + 1]
    return out


def _linear_part(problem: StepProblem, J):
    """Continuous part with all strains equal (the optimum without penalty)."""
    b0, b1 = problem.b
    end = b1 - np.sum(J, axis=1)
    x = problem.x
    return b0 + (end - b0)[:, None] * x[None, :]


def _inner_solve(problem: StepProblem, J, ell, c0=None, tol=1e-13, max_iter=100):
    """Minimize over the interior continuous-part values at fixed jumps.

    Without penalty the optimum is the linear interpolant.  Otherwise damped
    Newton on the convex C^1 energy; the elastic Hessian (2 or 0 per cell)
    is floored at 1e-12 and the penalty mass matrix keeps it definite.
    """
    c = _linear_part(problem, J) if c0 is None else np.array(c0, dtype=float)
    b0, b1 = problem.b
    c[:, 0] = b0
    c[:, -1] = b1 - np.sum(J, axis=1)
    N = problem.n_cells
    if problem.penalty == 0 or N < 2:
        return _linear_part(problem, J) if N >= 1 else c
    dx, pen = problem.dx, problem.penalty
    S = np.cumsum(J, axis=1)[:, :-1]
    w = problem.w

    def energy(c):
        xi = np.diff(c, axis=1) / dx
        d0 = c[:, :-1] + S - w[None, :-1]
        d1 = c[:, 1:] + S - w[None, 1:]
        return dx * np.sum(eval_h(ell, xi), axis=1) + pen * dx / 3.0 * np.sum(d0 * d0 + d0 * d1 + d1 * d1, axis=1)

    E = energy(c)
    for _ in range(max_iter):
        xi = np.diff(c, axis=1) / dx
        hp = eval_h_prime(ell, xi)
        hpp = np.where(np.abs(xi) < 0.5 * ell, 2.0, 0.0)
        d0 = c[:, :-1] + S - w[None, :-1]
        d1 = c[:, 1:] + S - w[None, 1:]
        # gradient w.r.t. interior nodes 1..N-1
        g_full = np.zeros_like(c)
        g_full[:, :-1] -= hp
        g_full[:, 1:] += hp
        g_full[:, :-1] += pen * dx * (2.0 * d0 + d1) / 3.0
        g_full[:, 1:] += pen * dx * (d0 + 2.0 * d1) / 3.0
        grad = g_full[:, 1:-1]
        if np.max(np.abs(grad)) < tol:
            break
        cell = hpp / dx
        diag = cell[:, :-1] + cell[:, 1:] + 4.0 * pen * dx / 3.0 + 1e-12
        off = -cell[:, 1:-1] + pen * dx / 3.0
        step = -_thomas(off, diag, off, grad)
        lam = np.ones(c.shape[0])
        trial = c.copy()
        for _ in range(40):
            trial[:, 1:-1] = c[:, 1:-1] + lam[:, None] * step
            Et = energy(trial)
            bad = Et > E + 1e-4 * lam * np.sum(grad * step, axis=1) + 1e-15 * np.abs(E)
            if not np.any(bad):
                break
            lam = np.where(bad, 0.5 * lam, lam)
        ok = Et <= E
        c = np.where(ok[:, None], trial, c)
        dE = np.where(ok, E - Et, 0.0)
        E = np.where(ok, Et, E)
        if np.all(dE <= 1e-16 * np.maximum(1.0, np.abs(E))):
            break
    return c


def reduced_energy_batch(problem: StepProblem, law, J) -> np.ndarray:
    """Step energy at jumps J (B, N+1) with the continuous part optimized."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    ell = law.model.ell
    c = _inner_solve(problem, J, ell)
    return np.sum(_parts(problem, law, c, J, ell), axis=0)


def total_energy(u: Displacement, state: CrackState, b_k, w_k, law, program: LoadProgram | None = None) -> dict:
    """Energy breakdown of a displacement against a crack memory."""
    N = u.n_cells
    if state.n_cells != N or u.jumps.size != N + 1:
        raise GridMismatchError("displacement and crack state use different grids")
    w = np.zeros(N + 1) if w_k is None else np.asarray(w_k, dtype=float)
    if w.size != N + 1:
        raise GridMismatchError(f"w needs {N + 1} nodal values")
    pen = program.penalty_weight if program is not None else 0.0
    prob = StepProblem(N, tuple(b_k), w, pen, state.memory, math.inf)
    el, su, pe = _parts(prob, law, u.c[None, :], u.jumps[None, :], law.model.ell)
    return {"elastic": float(el[0]), "surface": float(su[0]), "penalty": float(pe[0]), "total": float(el[0] + su[0] + pe[0])}


# --------------------------------------------------------------------------
# step minimization


@dataclass
class StepOptions:
    tol_energy: float = 1e-12
    max_sweeps: int = 60
    n_candidates: int = 8
    n_grid: int = 129
    xtol: float = 1e-10


class _Seed:
    __slots__ = ("c", "J", "E", "converged")

    def __init__(self, c, J, E, converged=False):
        self.c, self.J, self.E, self.converged = c, J, E, converged


class _StepSolver:
    def __init__(self, problem: StepProblem, law, opts: StepOptions):
        self.p = problem
        self.law = law
        self.opts = opts
        self.ell = law.model.ell
        N = problem.n_cells
        x = problem.x
        idx = np.arange(N)
        # shape of the move u -> u + t (H(x - x_i) - x) per node i, on both cell ends
        self.e0 = (idx[None, :] >= np.arange(N + 1)[:, None]).astype(float) - x[None, :-1]
        self.e1 = (idx[None, :] >= np.arange(N + 1)[:, None]).astype(float) - x[None, 1:]

    def energy(self, c, J):
        parts = _parts(self.p, self.law, c[None, :], J[None, :], self.ell)
        return float(sum(p[0] for p in parts))

    def inner(self, J, c0=None):
        return _inner_solve(self.p, J[None, :], self.ell, None if c0 is None else c0[None, :])[0]

    def _move_profile(self, c, J, i):
        """Energy along the move at node i as a function of t (vectorized)."""
        p = self.p
        dx = p.dx
        xi = np.diff(c) / dx
        mem_i = p.memory[i]
        others = self.energy(c, J) - self._node_surface(J[i], mem_i)
        if p.penalty > 0:
            S = np.cumsum(J)[:-1]
            d0 = c[:-1] + S - p.w[:-1]
            d1 = c[1:] + S - p.w[1:]
            e0, e1 = self.e0[i], self.e1[i]
            a2 = np.sum(e0 * e0 + e0 * e1 + e1 * e1)
            a1 = np.sum(2 * d0 * e0 + d0 * e1 + d1 * e0 + 2 * d1 * e1)
            pen_scale = p.penalty * dx / 3.0
        else:
            a2 = a1 = pen_scale = 0.0
        el0 = dx * np.sum(eval_h(self.ell, xi))

        def f(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            el = dx * np.sum(eval_h(self.ell, xi[None, :] - t[:, None]), axis=1)
            su = self._node_surface(J[i] + t, mem_i)
            pe = pen_scale * (a2 * t * t + a1 * t)
            return others - el0 + el + su + pe

        return f

    def _node_surface(self, j, mem):
        # reach <= s_max, so the column interpolants are called without range checks
        col = self.law.column(mem)
        return col(np.abs(np.asarray(j, dtype=float)))

    def line_search(self, c, J, i):
        """Global 1-D minimization of the move at node i; returns (t, E)."""
        R = self.p.reach
        f = self._move_profile(c, J, i)
        lo, hi = -R - J[i], R - J[i]
        grid = np.linspace(lo, hi, self.opts.n_grid)
        grid = np.union1d(grid, [0.0, -J[i]])
        vals = f(grid)
        k = int(np.argmin(vals))
        best_t, best_E = float(grid[k]), float(vals[k])
        a = grid[max(k - 1, 0)]
        b = grid[min(k + 1, grid.size - 1)]
        # zero jump is a kink of the pristine surface term: polish each side separately
        pieces = [(a, b)]
        z = -J[i]
        if a < z < b:
            pieces = [(a, z), (z, b)]
        for lo_, hi_ in pieces:
            if hi_ - lo_ <= self.opts.xtol:
                continue
            r = minimize_scalar(lambda t: float(f(t)[0]), bounds=(lo_, hi_), method="bounded",
                                options={"xatol": self.opts.xtol})
            if r.fun < best_E:
                best_t, best_E = float(r.x), float(r.fun)
        return best_t, best_E

    def active_nodes(self, J):
        """Nodes worth a move.  Without penalty the energy does not see where a
        pristine node sits, so one closed pristine node stands for all of them."""
        N = self.p.n_cells
        if self.p.penalty > 0:
            return range(N + 1)
        idle = (J == 0) & (self.p.memory == 0)
        keep = list(np.flatnonzero(~idle))
        if np.any(idle):
            keep.append(int(np.flatnonzero(idle)[0]))
        return sorted(keep)

    def apply_move(self, c, J, i, t):
        c = c - t * self.p.x
        J = J.copy()
        J[i] += t
        if abs(J[i]) < 1e-14:
            J[i] = 0.0
        return c, J

    def polish(self, c, J):
        """Joint smooth minimization over the open jumps, c re-solved inside.

        Pristine jumps keep their sign (zero is a kink there); memory sites
        may cross zero, where their surface energy is flat.
        """
        R = self.p.reach
        mem = self.p.memory
        active = np.flatnonzero((J != 0) | (mem > 0))
        c = self.inner(J, c)
        if active.size == 0:
            return c, J, self.energy(c, J)
        bounds = [(-R, R) if mem[i] > 0 else ((0.0, R) if J[i] > 0 else (-R, 0.0)) for i in active]
        cache = {}

        def red(z):
            key = z.tobytes()
            if key not in cache:
                Jz = J.copy()
                Jz[active] = z
                cz = self.inner(Jz, c)
                cache[key] = (self.energy(cz, Jz), cz)
            return cache[key][0]

        def fun(z):
            h = 1e-7
            grad = np.empty(z.size)
            for k in range(z.size):
                lo, hi = bounds[k]
                zp, zm = z.copy(), z.copy()
                zp[k] = min(z[k] + h, hi)
                zm[k] = max(z[k] - h, lo)
                grad[k] = (red(zp) - red(zm)) / (zp[k] - zm[k])
            return red(z), grad

        z0 = J[active].copy()
        E0 = red(z0)
        r = minimize(fun, z0, jac=True, method="L-BFGS-B", bounds=bounds,
                     options={"ftol": 1e-15, "gtol": 1e-11, "maxiter": 200})
        if r.fun < E0:
            J = J.copy()
            J[active] = r.x
            J[np.abs(J) < 1e-14] = 0.0
            c = self.inner(J, c)
            return c, J, self.energy(c, J)
        return c, J, E0

    def sweep_seed(self, seed: _Seed, known=()) -> _Seed:
        c, J, E = seed.c, seed.J, seed.E
        converged = False
        for _ in range(self.opts.max_sweeps):
            E_start = E
            for i in self.active_nodes(J):
                t, Et = self.line_search(c, J, i)
                if Et < E - 1e-15 and t != 0.0:
                    c, J = self.apply_move(c, J, i, t)
                    E = self.energy(c, J)
            c2, J2, E2 = self.polish(c, J)
            if E2 <= E:
                c, J, E = c2, J2, E2
            if E_start - E < self.opts.tol_energy:
                converged = True
                break
            # a state some earlier seed already settled in ends this seed
            if any(np.allclose(J, k.J, atol=1e-9) for k in known):
                return _Seed(c, J, E, True)
        return _Seed(c, J, E, converged)

    def seed_single_jump(self, c_free, i) -> _Seed:
        J = np.zeros(self.p.n_cells + 1)
        t, _ = self.line_search(c_free, J, i)
        c, J = self.apply_move(c_free, J, i, t)
        c = self.inner(J, c)
        return _Seed(c, J, self.energy(c, J))


def minimize_step(
    state_prev: CrackState,
    b_k,
    w_k,
    law,
    opts: StepOptions | None = None,
    penalty_weight: float = 0.0,
    previous: Displacement | None = None,
    b_prev=None,
    reach: float | None = None,
) -> Displacement:
    """Approximate global minimizer of the step energy (multistart)."""
    opts = opts or StepOptions()
    N = state_prev.n_cells
    w = np.zeros(N + 1) if w_k is None else np.asarray(w_k, dtype=float)
    if w.size != N + 1:
        raise GridMismatchError(f"w needs {N + 1} nodal values")
    b_k = (float(b_k[0]), float(b_k[1]))
    if reach is None:
        reach = 2.0 * max(abs(b_k[0]), abs(b_k[1]), float(np.max(np.abs(w))))
    reach = min(reach, law.s_max)
    problem = StepProblem(N, b_k, w, float(penalty_weight), state_prev.memory, reach)
    solver = _StepSolver(problem, law, opts)
    x = problem.x

    seeds = []
    if previous is not None:
        pb = b_prev if b_prev is not None else (previous.c[0], previous.c[-1] + previous.jumps.sum())
        c = previous.c + (b_k[0] - pb[0]) * (1 - x) + (b_k[1] - pb[1]) * x
        J = previous.jumps.copy()
        c = solver.inner(J, c)
        seeds.append(_Seed(c, J, solver.energy(c, J)))
    J0 = np.zeros(N + 1)
    c_free = solver.inner(J0)
    seeds.append(_Seed(c_free, J0.copy(), solver.energy(c_free, J0)))
    if reach > 0:
        strain = np.abs(np.diff(c_free)) * N
        node_strain = np.maximum(np.concatenate([[0.0], strain]), np.concatenate([strain, [0.0]]))
        order = np.argsort(-node_strain, kind="stable")
        candidates = list(np.flatnonzero(problem.memory > 0))
        for i in order[: opts.n_candidates]:
            if i not in candidates:
                candidates.append(int(i))
        pristine_seen = False
        for i in candidates:
            if problem.penalty == 0 and problem.memory[i] == 0:
                # without penalty all pristine nodes are equivalent
                if pristine_seen:
                    continue
                pristine_seen = True
            seeds.append(solver.seed_single_jump(c_free, i))

    best = None
    done = []
    for seed in seeds:
        res = solver.sweep_seed(seed, done)
        done.append(res)
        if best is None or res.E < best.E - 1e-14:
            best = res
    if not best.converged:
        warnings.warn(f"step minimization hit max_sweeps={opts.max_sweeps}", NonConvergenceWarning)
    return Displacement(best.c, best.J, best.E, best.converged)


def update_state(state: CrackState, u: Displacement, s_bar: float) -> CrackState:
    """Irreversibility: open sites where |J| > s_bar; memory = max(old, |J|)."""
    aJ = np.abs(u.jumps)
    mem = state.memory
    new = np.where((mem > 0) | (aJ > s_bar), np.maximum(mem, aJ), 0.0)
    return CrackState(state.n_cells, new)


# --------------------------------------------------------------------------
# runs


def work_increment(u: Displacement, b_now, b_next, w_now, w_next, penalty_weight, ell) -> float:
    """tau * theta over one step: the work of the boundary and target rates."""
    N = u.n_cells
    dx = 1.0 / N
    x = u.x
    db0, db1 = b_next[0] - b_now[0], b_next[1] - b_now[1]
    elastic = dx * np.sum(eval_h_prime(ell, u.strains)) * (db1 - db0)
    if penalty_weight == 0:
        return float(elastic)
    S = np.cumsum(u.jumps)[:-1]
    d0 = u.c[:-1] + S - w_now[:-1]
    d1 = u.c[1:] + S - w_now[1:]
    rate = db0 * (1 - x) + db1 * x - (w_next - w_now)
    e0, e1 = rate[:-1], rate[1:]
    pen = dx / 6.0 * np.sum(2 * d0 * e0 + d0 * e1 + d1 * e0 + 2 * d1 * e1)
    return float(elastic + 2.0 * penalty_weight * pen)


@dataclass
class EvolutionTrace:
    t: np.ndarray
    E_total: np.ndarray
    E_elastic: np.ndarray
    E_surface: np.ndarray
    E_penalty: np.ndarray
    W: np.ndarray
    residual: np.ndarray
    n_cracks: np.ndarray
    max_memory: np.ndarray
    states: list
    displacements: list
    converged: np.ndarray
    aborted: bool = False

    @property
    def delta_min(self) -> float:
        return min((s.delta_min for s in self.states), default=math.inf)

    def irreversible(self) -> bool:
        return all(b.contains(a) for a, b in zip(self.states, self.states[1:]))

    def columns(self) -> dict:
        return {
            "t": self.t,
            "E_total": self.E_total,
            "E_elastic": self.E_elastic,
            "E_surface": self.E_surface,
            "E_penalty": self.E_penalty,
            "W": self.W,
            "residual": self.residual,
            "n_cracks": self.n_cracks,
            "max_memory": self.max_memory,
        }


def run(
    program: LoadProgram,
    law,
    n_cells: int = 32,
    opts: StepOptions | None = None,
    keep_every: int = 1,
    max_failures: int = 3,
    initial_state: CrackState | None = None,
) -> EvolutionTrace:
    """Iterate minimization and memory update over the program's time grid."""
    opts = opts or StepOptions()
    times = program.times()
    reach = program.reach(n_cells, times)
    if reach > law.s_max * (1 + 1e-12) and law.g0_table[-1] < 1.0:
        raise ValueError(f"law covers openings up to {law.s_max}, program needs {reach}")
    ell = law.model.ell
    state = initial_state or CrackState.empty(n_cells)
    rows = {k: [] for k in ("E_total", "E_elastic", "E_surface", "E_penalty", "W", "residual", "n_cracks", "max_memory")}
    states, disps, conv = [], [], []
    prev_u, prev_b = None, None
    W = 0.0
    E0 = None
    failures = 0
    aborted = False
    for k, t in enumerate(times):
        b = program.b(t)
        w = program.w_nodal(t, n_cells)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonConvergenceWarning)
            u = minimize_step(state, b, w, law, opts, program.penalty_weight, prev_u, prev_b, reach)
        parts = total_energy(u, state, b, w, law, program)
        if E0 is None:
            E0 = parts["total"]
        state = update_state(state, u, program.s_bar)
        rows["E_total"].append(parts["total"])
        rows["E_elastic"].append(parts["elastic"])
        rows["E_surface"].append(parts["surface"])
        rows["E_penalty"].append(parts["penalty"])
        rows["W"].append(W)
        rows["residual"].append(parts["total"] - E0 - W)
        rows["n_cracks"].append(len(state.sites))
        rows["max_memory"].append(float(state.memory.max()))
        states.append(state)
        disps.append(u if k % keep_every == 0 else None)
        conv.append(u.converged)
        if not u.converged:
            failures += 1
            log.warning("step %d (t=%g) did not converge", k, t)
            if failures >= max_failures:
                aborted = True
                break
        else:
            failures = 0
        if k + 1 < times.size:
            t_next = times[k + 1]
            W += work_increment(u, b, program.b(t_next), w, program.w_nodal(t_next, n_cells), program.penalty_weight, ell)
        prev_u, prev_b = u, b
    n = len(rows["E_total"])
    return EvolutionTrace(
        t=times[:n],
        **{k: np.asarray(v) for k, v in rows.items()},
        states=states,
        displacements=disps,
        converged=np.asarray(conv),
        aborted=aborted,
    )
