"""Discrete action, its exact gradient, the H^1 dual norm and the ODE residual.

The action of a grid path is

    J = sum_cells (x_{i+1} - x_i)^2 / (2h) + P(x)

with the potential term P given by one of two quadratures:

``midpoint``   h * sum_cells a(eps t_{i+1/2}) V((x_i + x_{i+1}) / 2)
``trapezoid``  h * sum_nodes w_i a(eps t_i) V(x_i), w = 1/2 at the two ends

The gradient is the exact derivative of whichever discrete J is chosen. Under
the trapezoid rule the stationarity equations coincide with the
central-difference ODE, so the residual of a minimiser only reflects the
stopping tolerance; under the midpoint rule the residual of a minimiser is a
genuine O(h^2) consistency error.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np
from scipy.linalg import cholesky_banded, cho_solve_banded

from .potential import ModifiedPotential, DEFAULT_DELTA, well_constants
from .trajectory import Grid, Path

__all__ = [
    "RULES",
    "DEFAULT_RULE",
    "ActionReport",
    "DiscreteAction",
    "action",
    "gradient",
    "dual_norm",
    "h1_operator",
    "H1Solver",
    "residual",
    "tail_truncation_bound",
    "action_report",
]

RULES = ("midpoint", "trapezoid")
DEFAULT_RULE = "midpoint"


def h1_operator(grid: Grid, weights=None):
    """Banded (upper form) discrete H^1 operator on the interior nodes.

    Stiffness (1/h) tridiag(-1, 2, -1) plus lumped mass h diag(weights),
    unit weights by default.
    """
    h = grid.h
    n = grid.N - 2
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    ab = np.empty((2, n))
    ab[0, 0] = 0.0
    ab[0, 1:] = -1.0 / h
    ab[1, :] = 2.0 / h + h * w
    return ab


class H1Solver:
    """Cholesky factor of `h1_operator`, reused across solves."""

    def __init__(self, grid: Grid, weights=None):
        ab = h1_operator(grid, weights)
        if not np.all(np.isfinite(ab)):
            raise ValueError("singular H^1 operator")
        try:
            self.factor = cholesky_banded(ab)
        except np.linalg.LinAlgError:
            raise ValueError("singular H^1 operator") from None

    def solve(self, g):
        return cho_solve_banded((self.factor, False), g)


def dual_norm(g, grid: Grid) -> float:
    """sqrt(g^T M^{-1} g) for the interior H^1 operator M of `grid`."""
    g = np.asarray(g, dtype=float)
    if g.shape != (grid.N - 2,):
        raise ValueError(f"gradient must have {grid.N - 2} entries")
    return _scaled_dual(g, H1Solver(grid))


def _scaled_dual(g, solver) -> float:
    # scale first so that g^T M^{-1} g neither underflows nor overflows
    s = float(np.max(np.abs(g))) if g.size else 0.0
    if s == 0.0:
        return 0.0
    u = g / s
    return s * float(np.sqrt(max(u @ solver.solve(u), 0.0)))


class DiscreteAction:
    """Action, gradient and residual for a fixed grid, potential and coefficient."""

    def __init__(self, grid: Grid, pot, coef, eps: float = 1.0, rule: str = DEFAULT_RULE):
        if not eps > 0:
            raise ValueError("eps must be positive")
        if rule not in RULES:
            raise ValueError(f"unknown quadrature rule {rule!r}")
        self.grid, self.pot, self.coef = grid, pot, coef
        self.eps, self.rule = float(eps), rule
        t = grid.times
        self.a_nodes = np.asarray(coef.eval(self.eps * t), dtype=float) * np.ones_like(t)
        tm = 0.5 * (t[1:] + t[:-1])
        self.a_mid = np.asarray(coef.eval(self.eps * tm), dtype=float) * np.ones_like(tm)
        w = np.full_like(t, grid.h)
        w[0] = w[-1] = 0.5 * grid.h
        self.w_nodes = w * self.a_nodes
        self.w_mid = grid.h * self.a_mid
        self._h1 = None

    @property
    def h1(self):
        if self._h1 is None:
            self._h1 = H1Solver(self.grid)
        return self._h1

    def value(self, x) -> float:
        h = self.grid.h
        kin = 0.5 * np.sum(np.diff(x) ** 2) / h
        if self.rule == "midpoint":
            pot = np.sum(self.w_mid * self.pot.eval(0.5 * (x[1:] + x[:-1])))
        else:
            pot = np.sum(self.w_nodes * self.pot.eval(x))
        return float(kin + pot)

    def gradient(self, x) -> np.ndarray:
        """Partial derivatives of `value` with respect to the interior nodes."""
        h = self.grid.h
        g = (2.0 * x[1:-1] - x[:-2] - x[2:]) / h
        if self.rule == "midpoint":
            f = self.w_mid * self.pot.deriv(0.5 * (x[1:] + x[:-1]))
            g += 0.5 * (f[:-1] + f[1:])
        else:
            g += self.w_nodes[1:-1] * self.pot.deriv(x[1:-1])
        return g

    def change(self, x, step) -> float:
        """value(x + step) - value(x) without cancellation; `step` is zero at the ends."""
        h = self.grid.h
        dx = np.diff(x)
        ds = np.diff(step)
        kin = 0.5 * np.sum(ds * (2.0 * dx + ds)) / h
        if self.rule == "midpoint":
            pot = np.sum(self.w_mid * self.pot.increment(0.5 * (x[1:] + x[:-1]), 0.5 * (step[1:] + step[:-1])))
        else:
            pot = np.sum(self.w_nodes * self.pot.increment(x, step))
        return float(kin + pot)

    def residual(self, x) -> np.ndarray:
        h = self.grid.h
        d2 = (x[:-2] - 2.0 * x[1:-1] + x[2:]) / h**2
        return d2 - self.a_nodes[1:-1] * self.pot.deriv(x[1:-1])

    def dual(self, g) -> float:
        return _scaled_dual(np.asarray(g, dtype=float), self.h1)


def action(path: Path, pot, coef, eps: float = 1.0, rule: str = DEFAULT_RULE) -> float:
    return DiscreteAction(path.grid, pot, coef, eps, rule).value(path.x)


def gradient(path: Path, pot, coef, eps: float = 1.0, rule: str = DEFAULT_RULE) -> np.ndarray:
    return DiscreteAction(path.grid, pot, coef, eps, rule).gradient(path.x)


def residual(path: Path, pot, coef, eps: float = 1.0) -> float:
    """max over interior nodes of |(x_{i-1} - 2x_i + x_{i+1})/h^2 - a(eps t_i) V'(x_i)|."""
    if path.grid.N < 5:
        raise ValueError("residual needs N >= 5")
    r = DiscreteAction(path.grid, pot, coef, eps).residual(path.x)
    return float(np.max(np.abs(r)))


def tail_truncation_bound(grid: Grid, pot, coef, eps: float = 1.0) -> float:
    """2 (c2 / kappa) exp(-2 kappa T), kappa the slower of the two end decay rates."""
    delta = pot.delta if isinstance(pot, ModifiedPotential) else DEFAULT_DELTA
    wc = well_constants(pot, min(delta, 0.5))
    base = pot.base if isinstance(pot, ModifiedPotential) else pot
    T = grid.T
    rates = [
        np.sqrt(float(coef.eval(-eps * T)) * float(base.second_deriv(-1.0))),
        np.sqrt(float(coef.eval(eps * T)) * float(base.second_deriv(1.0))),
    ]
    kappa = min(rates)
    return float(2.0 * wc.c2 / kappa * np.exp(-2.0 * kappa * T))


@dataclass(frozen=True)
class ActionReport:
    value: float
    grad_dual: float
    grad_l2: float
    residual_inf: float
    tail_truncation_bound: float

    def to_dict(self):
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def action_report(path: Path, pot, coef, eps: float = 1.0, rule: str = DEFAULT_RULE,
                  functional: DiscreteAction | None = None) -> ActionReport:
    F = functional or DiscreteAction(path.grid, pot, coef, eps, rule)
    g = F.gradient(path.x)
    return ActionReport(
        value=F.value(path.x),
        grad_dual=F.dual(g),
        grad_l2=float(np.linalg.norm(g)),
        residual_inf=float(np.max(np.abs(F.residual(path.x)))),
        tail_truncation_bound=tail_truncation_bound(path.grid, pot, coef, eps),
    )
