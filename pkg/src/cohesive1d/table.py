"""Tabulated cohesive laws with shape-preserving interpolation."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import cohesive_law as cl
from .errors import DomainError
from .model import MaterialModel

log = logging.getLogger(__name__)

__all__ = ["CohesiveLaw", "tabulate_law", "default_s_grid"]


def default_s_grid(s_max: float, n: int = 97) -> np.ndarray:
    """Grid on [0, s_max] refined toward 0, where g0 bends like s^(5/3)."""
    x = np.linspace(0.0, 1.0, n)
    return s_max * x**1.5


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


class _Column:
    """Monotone interpolant of s -> value with a Lipschitz clamp.

    With ``from_origin`` the column vanishes at s = 0 with slope ell and bends
    like s^(5/3); the cubic is then fitted to value / s as a function of
    s^(2/3), in which that ratio is smooth.
    """

    def __init__(self, s, v, ell, from_origin=False):
        self.s = np.asarray(s, dtype=float)
        self.v = np.asarray(v, dtype=float)
        self.ell = ell
        self.from_origin = from_origin
        if from_origin:
            ratio = np.concatenate([[ell], self.v[1:] / self.s[1:]])
            self._p = PchipInterpolator(self.s ** (2.0 / 3.0), ratio, extrapolate=False)
        else:
            self._p = PchipInterpolator(self.s, self.v, extrapolate=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, self.s[0], self.s[-1])
        if self.from_origin:
            out = xc * np.asarray(self._p(xc ** (2.0 / 3.0)), dtype=float)
        else:
            out = np.asarray(self._p(xc), dtype=float)
        k = np.clip(np.searchsorted(self.s, x, side="right") - 1, 0, len(self.s) - 2)
        s0, s1 = self.s[k], self.s[k + 1]
        v0, v1 = self.v[k], self.v[k + 1]
        lo = np.maximum(v0, v1 - self.ell * (s1 - x))
        hi = np.minimum(v1, v0 + self.ell * (x - s0))
        return np.clip(out, np.minimum(lo, hi), hi)


class _Merged:
    """g(., s') below the memory value s', the g0 interpolant above it."""

    def __init__(self, lower: _Column, upper: _Column, s_prime: float):
        self.lower, self.upper, self.s_prime = lower, upper, s_prime

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.s_prime, self.lower(np.minimum(x, self.s_prime)), self.upper(x))


@dataclass(eq=False)
class CohesiveLaw:
    model: MaterialModel
    s_grid: np.ndarray
    g0_table: np.ndarray
    m_table: np.ndarray
    s_frac_estimate: float
    sprime_grid: np.ndarray
    g_table: np.ndarray  # shape (len(s_grid), len(sprime_grid))
    threads: int = 1
    _columns: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._g0 = _Column(self.s_grid, self.g0_table, self.model.ell, from_origin=True)
        # the well depth also moves like s^(2/3) near the origin
        self._m = PchipInterpolator(self.s_grid ** (2.0 / 3.0), self.m_table, extrapolate=False)

    @property
    def s_max(self) -> float:
        return float(self.s_grid[-1])

    def _check_range(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise DomainError("openings must be nonnegative")
        beyond = s > self.s_max * (1 + 1e-12)
        if np.any(beyond) and self.g0_table[-1] < 1.0:
            raise DomainError(
                f"opening {float(np.max(s)):.6g} beyond the tabulated range [0, {self.s_max:.6g}]"
            )
        return s, beyond

    def g0_interp(self, s):
        s, beyond = self._check_range(s)
        out = np.where(beyond, 1.0, self._g0(s))
        return float(out) if out.ndim == 0 else out

    def m_interp(self, s):
        s, beyond = self._check_range(s)
        inside = np.clip(s, 0.0, self.s_max)
        out = np.where(beyond, 0.0, np.clip(self._m(inside ** (2.0 / 3.0)), 0.0, 1.0))
        return float(out) if out.ndim == 0 else out

    def s_of_m(self, m: float) -> float:
        if not (0.0 <= m <= 1.0):
            raise DomainError(f"m must lie in [0, 1], got {m}")
        if m >= 1.0:
            return 0.0
        if m <= 0.0:
            if math.isinf(self.s_frac_estimate):
                raise DomainError("m = 0 is not attained: this model never cracks fully")
            return self.s_frac_estimate
        if m < self.m_table[-1]:
            raise DomainError(f"m = {m} lies below the tabulated range")
        lo, hi = 0.0, self.s_max
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.m_interp(mid) > m:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-13 * max(1.0, hi):
                break
        return 0.5 * (lo + hi)

    def column(self, s_prime: float) -> _Column:
        """Interpolant of s -> g(s, s_prime) on [0, s_max]."""
        key = float(s_prime)
        col = self._columns.get(key)
        if col is not None:
            return col
        hit = np.flatnonzero(self.sprime_grid == key)
        if key == 0.0:
            col = self._g0
        elif hit.size:
            col = _Column(self.s_grid, self.g_table[:, hit[0]], self.model.ell)
        else:
            below = self.s_grid[self.s_grid < key]
            vals = _map(lambda x: cl.g(self.model, x, key).value, list(below), self.threads)
            # join the g0 interpolant at the memory value so the two pieces agree
            nodes = np.concatenate([below, [key]])
            lower = _Column(nodes, np.concatenate([vals, [float(self._g0(key))]]), self.model.ell)
            col = _Merged(lower, self._g0, key)
        self._columns[key] = col
        return col

    def g(self, s, s_prime):
        """g(s, s_prime); s may be an array, s_prime a scalar memory."""
        s, beyond = self._check_range(s)
        col = self.column(s_prime)
        out = np.where(beyond, 1.0, col(np.minimum(s, self.s_max)))
        return float(out) if out.ndim == 0 else out

    def describe(self) -> dict:
        return {
            **self.model.describe(),
            "n_s": int(self.s_grid.size),
            "s_max": self.s_max,
            "s_frac": "unbounded" if math.isinf(self.s_frac_estimate) else self.s_frac_estimate,
        }


def _annotated(exc, where):
    try:
        return type(exc)(f"{exc} (at {where})")
    except TypeError:
        return RuntimeError(f"{type(exc).__name__}: {exc} (at {where})")


def tabulate_law(model: MaterialModel, s_grid, sprime_grid=(), threads: int = 1) -> CohesiveLaw:
    """Tabulate g0, m_s and g(s, s') on the given grids."""
    s_grid = np.asarray(s_grid, dtype=float)
    sprime_grid = np.asarray(sprime_grid, dtype=float).reshape(-1)
    for name, grid in (("s_grid", s_grid), ("sprime_grid", sprime_grid)):
        if grid.size and (grid[0] != 0.0 and name == "s_grid"):
            raise ValueError(f"{name} must start at 0")
        if grid.size > 1 and np.any(np.diff(grid) <= 0):
            raise ValueError(f"{name} must be strictly increasing")
    if s_grid.size < 2:
        raise ValueError("s_grid needs at least two points")

    def one(s):
        try:
            return cl.g0(model, s)
        except Exception as exc:
            raise _annotated(exc, f"s={s}") from exc

    res = _map(one, list(s_grid), threads)
    g0_tab = np.array([r.value for r in res])
    m_tab = np.array([r.m for r in res])
    sf = cl.s_frac(model)
    g_tab = np.empty((s_grid.size, sprime_grid.size))
    for j, sp in enumerate(sprime_grid):
        def cell(s, sp=sp):
            try:
                return cl.g(model, s, sp).value
            except Exception as exc:
                raise _annotated(exc, f"s={s}, s'={sp}") from exc

        g_tab[:, j] = _map(cell, list(s_grid), threads)
    return CohesiveLaw(model, s_grid, g0_tab, m_tab, sf, sprime_grid, g_tab, threads)
