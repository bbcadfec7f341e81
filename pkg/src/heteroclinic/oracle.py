"""Ground truth for constant coefficients.

For a(t) = a the heteroclinic obeys the first integral 1/2 x'^2 = a V(x),
so its action is a position integral of sqrt(2 a V) and its profile solves
the scalar equation x' = sqrt(2 a V(x)). None of this touches the discrete
action, which is what makes it usable as an independent check.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path as FilePath

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from .potential import ModifiedPotential
from .trajectory import format_float

__all__ = [
    "AutonomousOracle",
    "position_action",
    "level_quadrature",
    "tanh_exact",
    "profile_integrate",
    "autonomous_oracle",
    "equipartition_residual",
    "save_profile",
]


def _base(pot):
    return pot.base if isinstance(pot, ModifiedPotential) else pot


def position_action(pot, a_const: float, x0: float, x1: float, tol: float = 1e-12) -> float:
    """Integral of sqrt(2 a V(s)) over [x0, x1]."""
    if not a_const > 0:
        raise ValueError("a_const must be positive")
    V = _base(pot)

    def density(s):
        return np.sqrt(2.0 * a_const * max(float(V.eval(s)), 0.0))

    val, _ = quad(density, x0, x1, epsabs=tol, epsrel=tol, limit=200)
    return float(val)


def level_quadrature(pot, a_const: float) -> float:
    """Heteroclinic action level for constant a."""
    return position_action(pot, a_const, -1.0, 1.0)


def tanh_exact(a_const: float):
    """x(t) = tanh(sqrt(a/2) t), the heteroclinic of the quartic well."""
    if not a_const > 0:
        raise ValueError("a_const must be positive")
    k = np.sqrt(a_const / 2.0)
    return lambda t: np.tanh(k * np.asarray(t, dtype=float))


def _rk4_branch(f, x_start, step, n_steps, target, kappa, switch):
    """March x' = f(x) from x_start towards `target` (= +-1) with fixed step.

    Inside |x - target| < switch the linearised decay
    x = target - (target - x_c) exp(-kappa (t - t_c)) takes over.
    """
    xs = np.empty(n_steps + 1)
    xs[0] = x_start
    x = x_start
    k = 0
    while k < n_steps and abs(target - x) >= switch:
        k1 = f(x)
        k2 = f(x + 0.5 * step * k1)
        k3 = f(x + 0.5 * step * k2)
        k4 = f(x + step * k3)
        x = x + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        k += 1
        xs[k] = x
    if k < n_steps:
        gap = target - x
        elapsed = np.arange(1, n_steps - k + 1) * abs(step)
        xs[k + 1 :] = target - gap * np.exp(-kappa * elapsed)
    return xs


def profile_integrate(pot, a_const: float, t_max: float = 12.0, step: float = 1e-3,
                      switch: float = 1e-6):
    """Sample the constant-coefficient heteroclinic with x(0) = 0 on [-t_max, t_max].

    Classical RK4 on x' = sqrt(2 a V(x)) in both time directions, switching
    to the linearised exponential tail within `switch` of either well.
    Returns ``(t, x)``; values within 1e-12 of a well are clamped to it.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if not a_const > 0:
        raise ValueError("a_const must be positive")
    V = _base(pot)

    def f(x):
        v = float(V.eval(x))
        if v < 0:
            raise ValueError(f"V({x:.6g}) = {v:.3g} < 0: potential is not non-negative")
        return np.sqrt(2.0 * a_const * v)

    n = int(round(t_max / step))
    k_plus = np.sqrt(a_const * float(V.second_deriv(1.0)))
    k_minus = np.sqrt(a_const * float(V.second_deriv(-1.0)))
    fwd = _rk4_branch(f, 0.0, step, n, 1.0, k_plus, switch)
    bwd = _rk4_branch(lambda x: -f(x), 0.0, step, n, -1.0, k_minus, switch)
    t = step * np.arange(-n, n + 1)
    x = np.concatenate([bwd[::-1], fwd[1:]])
    x[np.abs(x - 1.0) < 1e-12] = 1.0
    x[np.abs(x + 1.0) < 1e-12] = -1.0
    x = np.maximum.accumulate(x)
    return t, x


@dataclass(frozen=True)
class AutonomousOracle:
    a_const: float
    pot: object
    level: float
    t: np.ndarray
    x: np.ndarray

    def profile(self, times):
        """Profile at arbitrary times (cubic Hermite through the samples)."""
        V = _base(self.pot)
        dx = np.sqrt(2.0 * self.a_const * np.maximum(V.eval(self.x), 0.0))
        spline = CubicHermiteSpline(self.t, self.x, dx)
        times = np.asarray(times, dtype=float)
        out = spline(np.clip(times, self.t[0], self.t[-1]))
        return np.clip(out, -1.0, 1.0)


def autonomous_oracle(pot, a_const: float, t_max: float = 12.0, step: float = 1e-3) -> AutonomousOracle:
    t, x = profile_integrate(pot, a_const, t_max, step)
    return AutonomousOracle(a_const=float(a_const), pot=pot, level=level_quadrature(pot, a_const), t=t, x=x)


def equipartition_residual(t, x, pot, a_const: float) -> float:
    """max |x'^2/2 - a V(x)| with x' from fourth-order central differences."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    h = t[1] - t[0]
    dx = (x[:-4] - 8.0 * x[1:-3] + 8.0 * x[3:-1] - x[4:]) / (12.0 * h)
    v = _base(pot).eval(x[2:-2])
    return float(np.max(np.abs(0.5 * dx * dx - a_const * v)))


def save_profile(t, x, file) -> None:
    lines = [f"{format_float(ti)} {format_float(xi)}\n" for ti, xi in zip(t, x)]
    FilePath(file).write_text("".join(lines))
