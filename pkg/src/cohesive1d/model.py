"""Material models: the damage-stiffness function f, its companion f1 and the
elastic and phase-field densities built from them.

Every model exposes ``f1(q) = q * f(1 - q)`` together with its first two
derivatives.  The profile solvers work almost exclusively with f1 in the
variable ``q = 1 - beta`` (the depth of the damage well), so f itself is
only needed by the phase-field code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, ModelError, PoleError

__all__ = [
    "MaterialModel",
    "FamilyA",
    "FamilyB",
    "CustomSampled",
    "eval_model",
    "eval_h",
    "eval_h_prime",
    "eval_f_eps",
    "eval_f_eps_sq",
    "validate_model",
    "ValidationReport",
    "Check",
]


class MaterialModel:
    """Common interface.  Subclasses implement ``f1``, ``f1_prime``,
    ``f1_second`` and report ``ell``, ``ell1`` and ``family``."""

    family: str = "abstract"
    ell: float
    ell1: float

    # --- f1 and derivatives, vectorized over q in [0, 1] ---
    def f1(self, q):
        raise NotImplementedError

    def f1_prime(self, q):
        raise NotImplementedError

    def f1_second(self, q):
        raise NotImplementedError

    def f1_divdiff(self, q, Q):
        """(f1(q) - f1(Q)) / (Q - q), evaluated without cancellation."""
        q = np.asarray(q, dtype=float)
        gap = Q - q
        direct = (self.f1(q) - self.f1(Q)) / np.where(gap == 0.0, 1.0, gap)
        mid = -self.f1_prime(0.5 * (q + Q))
        return np.where(np.abs(gap) > 1e-6, direct, mid)

    # --- f and derivatives on [0, 1); f has a pole at 1 whenever ell > 0 ---
    def f(self, t):
        t = np.asarray(t, dtype=float)
        r = 1.0 - t
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.f1(r) / r
        return np.where(r > 0, out, np.inf)

    def f_prime(self, t):
        t = np.asarray(t, dtype=float)
        r = 1.0 - t
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (self.f1(r) - r * self.f1_prime(r)) / (r * r)
        return np.where(r > 0, out, np.inf)

    def f_second(self, t):
        t = np.asarray(t, dtype=float)
        r = 1.0 - t
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (r * r * self.f1_second(r) + 2.0 * self.f1(r) - 2.0 * r * self.f1_prime(r)) / r**3
        return np.where(r > 0, out, np.inf)

    def describe(self) -> dict:
        return {"family": self.family, "ell": self.ell, "ell1": self.ell1}


@dataclass(frozen=True)
class FamilyA(MaterialModel):
    """f(t) = ell t / (1 - t), so f1(q) = ell (1 - q)."""

    ell: float = 1.0
    family: str = field(default="A", init=False)

    def __post_init__(self):
        if not (self.ell > 0 and math.isfinite(self.ell)):
            raise ModelError(f"ell must be positive and finite, got {self.ell}")

    @property
    def ell1(self) -> float:
        return self.ell

    def f1(self, q):
        return self.ell * (1.0 - np.asarray(q, dtype=float))

    def f1_prime(self, q):
        return np.full_like(np.asarray(q, dtype=float), -self.ell)

    def f1_second(self, q):
        return np.zeros_like(np.asarray(q, dtype=float))

    def f1_divdiff(self, q, Q):
        return np.full_like(np.asarray(q, dtype=float), self.ell)


@dataclass(frozen=True)
class FamilyB(MaterialModel):
    """f1(q) = (ell + b q)(1 - q)^2 with b in (-ell, 2 ell); ell1 = 2 ell - b."""

    ell: float = 1.5
    b: float = 2.8
    family: str = field(default="B", init=False)

    def __post_init__(self):
        if not (self.ell > 0 and math.isfinite(self.ell)):
            raise ModelError(f"ell must be positive and finite, got {self.ell}")
        if not (-self.ell < self.b < 2.0 * self.ell):
            raise ModelError(
                f"FamilyB requires b in (-ell, 2*ell) = ({-self.ell}, {2 * self.ell}), got b={self.b}"
            )

    @property
    def ell1(self) -> float:
        return 2.0 * self.ell - self.b

    @property
    def _coeffs(self):
        # f1 = c0 + c1 q + c2 q^2 + c3 q^3
        ell, b = self.ell, self.b
        return ell, b - 2.0 * ell, ell - 2.0 * b, b

    def f1(self, q):
        q = np.asarray(q, dtype=float)
        return (self.ell + self.b * q) * (1.0 - q) ** 2

    def f1_prime(self, q):
        q = np.asarray(q, dtype=float)
        return self.b * (1.0 - q) ** 2 - 2.0 * (self.ell + self.b * q) * (1.0 - q)

    def f1_second(self, q):
        q = np.asarray(q, dtype=float)
        return 2.0 * (self.ell + self.b * q) - 4.0 * self.b * (1.0 - q)

    def f1_divdiff(self, q, Q):
        q = np.asarray(q, dtype=float)
        _, c1, c2, c3 = self._coeffs
        return -(c1 + c2 * (q + Q) + c3 * (q * q + q * Q + Q * Q))

    def describe(self) -> dict:
        return {"family": self.family, "ell": self.ell, "b": self.b, "ell1": self.ell1}


@dataclass(frozen=True, eq=False)
class CustomSampled(MaterialModel):
    """f given by samples (t_i, f_i) on [0, 1).

    The interpolant is built for f1(q) = q f(1 - q) in q = 1 - t with a
    shape-preserving cubic, which keeps f1 monotone whenever the samples are.
    ``ell`` = f1(0) may be supplied; otherwise it is extrapolated linearly
    from the two samples closest to t = 1.  Near t = 1 the function f is
    capped at ``1 / pole_tol``.
    """

    t: tuple
    values: tuple
    ell_given: float | None = None
    pole_tol: float = 1e-12
    family: str = field(default="custom", init=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 4:
            raise ModelError("custom model needs at least 4 (t, f) samples of equal length")
        if np.any(np.diff(t) <= 0) or t[0] < 0 or t[-1] >= 1:
            raise ModelError("custom sample abscissae must increase strictly inside [0, 1)")
        q = 1.0 - t
        f1 = q * v
        if t[0] > 0:
            q = np.concatenate([[1.0], q])
            f1 = np.concatenate([[0.0], f1])
        if self.ell_given is None:
            slope = (f1[-1] - f1[-2]) / (q[-1] - q[-2])
            ell = f1[-1] - slope * q[-1]
        else:
            ell = float(self.ell_given)
        if not ell > 0:
            raise ModelError(f"custom model must have f1(0) = ell > 0, got {ell}")
        q = np.concatenate([q, [0.0]])[::-1]
        f1 = np.concatenate([f1, [ell]])[::-1]
        object.__setattr__(self, "_interp", PchipInterpolator(q, f1, extrapolate=False))
        object.__setattr__(self, "_ell", float(ell))

    @property
    def ell(self) -> float:
        return self._ell

    @property
    def ell1(self) -> float:
        return float(-self._interp.derivative(1)(0.0))

    def _eval(self, q, nu):
        q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
        fn = self._interp if nu == 0 else self._interp.derivative(nu)
        return np.asarray(fn(q), dtype=float)

    def f1(self, q):
        return self._eval(q, 0)

    def f1_prime(self, q):
        return self._eval(q, 1)

    def f1_second(self, q):
        return self._eval(q, 2)

    def f(self, t):
        return np.minimum(super().f(t), 1.0 / self.pole_tol)

    def describe(self) -> dict:
        return {"family": self.family, "ell": self.ell, "ell1": self.ell1, "n_samples": len(self.t)}


_WHICH = ("f", "f1", "f1_prime", "f1_sq_of_sqrt")


def eval_model(model: MaterialModel, which: str, t):
    """Evaluate f, f1, f1' or f1(sqrt(t))^2 at t in [0, 1]."""
    if which not in _WHICH:
        raise ValueError(f"which must be one of {_WHICH}, got {which!r}")
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise DomainError(f"argument must lie in [0, 1], got {t}")
    if which == "f":
        if np.any(arr >= 1) and not isinstance(model, CustomSampled):
            raise PoleError("f has a pole at t = 1")
        out = model.f(arr)
    elif which == "f1":
        out = model.f1(arr)
    elif which == "f1_prime":
        out = model.f1_prime(arr)
    else:
        out = model.f1(np.sqrt(arr)) ** 2
    return float(out) if np.ndim(out) == 0 else out


def _ell_of(model_or_ell) -> float:
    return float(model_or_ell) if isinstance(model_or_ell, (int, float)) else model_or_ell.ell


def eval_h(model, xi):
    """Elastic density: quadratic up to |xi| = ell/2, then linear with slope ell."""
    ell = _ell_of(model)
    a = np.abs(np.asarray(xi, dtype=float))
    out = np.where(a <= 0.5 * ell, a * a, ell * a - 0.25 * ell * ell)
    return float(out) if out.ndim == 0 else out


def eval_h_prime(model, xi):
    ell = _ell_of(model)
    x = np.asarray(xi, dtype=float)
    out = np.clip(2.0 * x, -ell, ell)
    return float(out) if out.ndim == 0 else out


def eval_f_eps(model: MaterialModel, v, eps: float):
    """min(1, sqrt(eps) f(v)), equal to 1 at v = 1."""
    v = np.asarray(v, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        val = math.sqrt(eps) * model.f(np.minimum(v, 1.0))
    out = np.where(v >= 1.0, 1.0, np.minimum(1.0, val))
    return float(out) if out.ndim == 0 else out


def eval_f_eps_sq(model: MaterialModel, v, eps: float):
    """f_eps(v)^2 together with its first and second derivative in v.

    Above the kink where sqrt(eps) f reaches 1 the function is constant, so
    both derivatives vanish there (the one-sided choice at the kink).
    """
    v = np.asarray(v, dtype=float)
    vc = np.minimum(v, 1.0)
    with np.errstate(over="ignore", invalid="ignore"):
        fv = model.f(vc)
        val = eps * fv * fv
        below = (val < 1.0) & (v < 1.0)
        fp = np.where(below, model.f_prime(np.where(below, vc, 0.0)), 0.0)
        fpp = np.where(below, model.f_second(np.where(below, vc, 0.0)), 0.0)
        fvb = np.where(below, fv, 0.0)
    value = np.where(below, val, 1.0)
    d1 = np.where(below, 2.0 * eps * fvb * fp, 0.0)
    d2 = np.where(below, 2.0 * eps * (fp * fp + fvb * fpp), 0.0)
    return value, d1, d2


@dataclass
class Check:
    name: str
    passed: bool
    worst: float
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list
    ell_numeric: float
    ell1_numeric: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.passed]


def validate_model(model: MaterialModel, grid_size: int = 256, tol: float = 1e-10) -> ValidationReport:
    """Sample the structural assumptions on f and f1.  Never raises for a
    badly shaped model; failures are listed in the report."""
    if grid_size < 16:
        raise ValueError("grid_size must be at least 16")
    checks = []
    t = np.linspace(0.0, 1.0, grid_size, endpoint=False)
    with np.errstate(all="ignore"):
        fv = np.asarray(model.f(t), dtype=float)
        q = np.linspace(0.0, 1.0, grid_size)
        f1v = np.asarray(model.f1(q), dtype=float)

    checks.append(Check("f(0) = 0", abs(fv[0]) <= tol, abs(float(fv[0]))))
    pos = fv[1:]
    checks.append(Check("f > 0 on (0,1)", bool(np.all(pos > 0)), float(max(0.0, -pos.min()))))
    dec = np.diff(fv)
    checks.append(Check("f nondecreasing", bool(np.all(dec >= -tol)), float(max(0.0, -dec.min()))))
    d1 = np.diff(f1v)
    checks.append(Check("f1 strictly decreasing", bool(np.all(d1 < 0)), float(max(0.0, d1.max()))))
    checks.append(Check("f1(0) = ell", abs(f1v[0] - model.ell) <= tol, abs(float(f1v[0] - model.ell))))
    checks.append(Check("f1(1) = 0", abs(f1v[-1]) <= tol, abs(float(f1v[-1]))))

    tt = np.linspace(0.0, 1.0, 1024)
    with np.errstate(all="ignore"):
        comp = np.asarray(model.f1(np.sqrt(tt)), dtype=float)
    second = comp[:-2] - 2.0 * comp[1:-1] + comp[2:]
    checks.append(
        Check("f1(sqrt t) convex", bool(np.all(second >= -1e-8)), float(max(0.0, -second.min())))
    )

    h = 1e-6
    ell_num = float(model.f1(0.0))
    ell1_num = float(-(model.f1(h) - model.f1(0.0)) / h)
    checks.append(
        Check("stored ell matches f1(0)", abs(ell_num - model.ell) <= 1e-8, abs(ell_num - model.ell))
    )
    gap = abs(ell1_num - model.ell1)
    checks.append(
        Check("stored ell1 matches -f1'(0)", gap <= 1e-4 * max(1.0, abs(model.ell1)), gap)
    )
    if isinstance(model, FamilyB):
        inside = -model.ell < model.b < 2 * model.ell
        checks.append(Check("b in (-ell, 2 ell)", inside, 0.0 if inside else abs(model.b)))
    return ValidationReport(checks, ell_num, ell1_num)
