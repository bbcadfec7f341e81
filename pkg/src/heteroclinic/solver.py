"""Direct minimisation of the discrete action and the level diagnostics built on it."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict

import numpy as np

from .action import DiscreteAction, ActionReport, H1Solver, action_report, DEFAULT_RULE, RULES
from .coefficient import Coefficient, make_standard
from .oracle import position_action
from .potential import ModifiedPotential
from .trajectory import Grid, Path, tanh_seed, segment_tail_masses

__all__ = [
    "SolveConfig",
    "MinimizeResult",
    "NumericalError",
    "TheoremReport",
    "LevelTable",
    "SweepRow",
    "SweepTable",
    "C_RES",
    "default_seed",
    "minimize",
    "verify_solution",
    "estimate_levels",
    "epsilon_sweep",
    "lambda_tau",
]

log = logging.getLogger(__name__)

# Residual constant for verify_solution: residual_inf <= C_RES h^2.
# On the default grid the midpoint minimisers measure 0.15 h^2 for const(1),
# 0.6 h^2 for const(2), at most 0.33 h^2 for the bounded standard instances
# and 4.7 h^2 for coercive_quad(16), whose a(12) = 2305 is the stiffest case.
C_RES = 5.0


class NumericalError(RuntimeError):
    """Action or gradient became non-finite during descent."""


@dataclass(frozen=True)
class SolveConfig:
    max_iters: int = 50_000
    tol_grad_dual: float = 1e-8
    tol_step: float = 1e-12
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    acceleration: str = "secant_two_point"
    metric: str = "weighted"
    rule: str = DEFAULT_RULE

    def __post_init__(self):
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.acceleration not in ("steepest", "secant_two_point"):
            raise ValueError(f"unknown acceleration {self.acceleration!r}")
        if self.metric not in ("weighted", "h1"):
            raise ValueError(f"unknown descent metric {self.metric!r}")
        if self.rule not in RULES:
            raise ValueError(f"unknown quadrature rule {self.rule!r}")
        if self.max_iters < 0 or not self.tol_grad_dual > 0 or not self.tol_step > 0:
            raise ValueError("max_iters, tol_grad_dual and tol_step must be positive")

    def to_dict(self):
        return asdict(self)


@dataclass
class MinimizeResult:
    path: Path
    report: ActionReport
    iterations: int
    converged: bool
    monotone_J: bool
    reason: str
    history: list = field(default_factory=list, repr=False)


def default_seed(grid: Grid, pot, coef: Coefficient, eps: float = 1.0) -> Path:
    """tanh seed whose slope matches the autonomous profile for a(0)."""
    base = pot.base if isinstance(pot, ModifiedPotential) else pot
    curv = 0.5 * (float(base.second_deriv(-1.0)) + float(base.second_deriv(1.0)))
    a0 = float(coef.eval(0.0))
    return tanh_seed(grid, np.sqrt(a0 * curv) / 2.0)


def _metric_sq(s, h, w):
    """Squared norm of an interior vector (zero at both ends) in the descent metric."""
    full = np.concatenate(([0.0], s, [0.0]))
    return float(np.sum(np.diff(full) ** 2) / h + h * np.sum(w * s * s))


def _metric_weights(grid, pot, coef, eps, metric):
    if metric == "h1":
        return np.ones(grid.N - 2)
    base = pot.base if isinstance(pot, ModifiedPotential) else pot
    curv = 0.5 * (float(base.second_deriv(-1.0)) + float(base.second_deriv(1.0)))
    a = np.asarray(coef.eval(eps * grid.times[1:-1]), dtype=float) * np.ones(grid.N - 2)
    return curv * a


def minimize(seed: Path, pot, coef: Coefficient, eps: float = 1.0,
             config: SolveConfig | None = None) -> MinimizeResult:
    """Descend the discrete action from `seed` with Armijo backtracking.

    The search direction is the Sobolev gradient -M_w^{-1} g. With
    ``metric="h1"`` M_w is the plain H^1 operator; ``"weighted"`` puts
    a(eps t) V''(+-1) in the mass term, which matches the curvature of the
    action near the wells and keeps coercive coefficients well conditioned.
    The stopping test always uses the plain H^1 dual norm. With
    ``secant_two_point`` the first trial step is the two-point secant
    (Barzilai-Borwein) length measured in M_w; every accepted step
    satisfies the sufficient-decrease test, so J strictly decreases.
    """
    cfg = config or SolveConfig()
    if seed.x[0] != -1.0 or seed.x[-1] != 1.0:
        raise ValueError("seed must satisfy the end clamps")
    grid = seed.grid
    h = grid.h
    F = DiscreteAction(grid, pot, coef, eps, cfg.rule)
    x = seed.x.copy()
    J = F.value(x)
    g = F.gradient(x)
    if not (np.isfinite(J) and np.all(np.isfinite(g))):
        raise NumericalError("non-finite action or gradient at the seed")
    weights = _metric_weights(grid, pot, coef, eps, cfg.metric)
    descent = F.h1 if cfg.metric == "h1" else H1Solver(grid, weights)

    history = [J]
    monotone = True
    converged = False
    reason = "max_iters"
    alpha = 1.0
    prev_x = prev_g = None
    step_vec = np.zeros_like(x)
    it = 0
    while True:
        gd = F.dual(g)
        if gd <= cfg.tol_grad_dual:
            converged, reason = True, "grad_dual"
            break
        if it >= cfg.max_iters:
            break
        p = descent.solve(g)
        slope = -float(g @ p)

        if cfg.acceleration == "secant_two_point" and prev_x is not None:
            s = x[1:-1] - prev_x
            y = g - prev_g
            sy = float(s @ y)
            alpha = _metric_sq(s, h, weights) / sy if sy > 0 else min(2.0 * alpha, 1.0)
        elif cfg.acceleration == "steepest":
            alpha = min(2.0 * alpha, 1.0) if it else 1.0

        while True:
            step_vec[1:-1] = -alpha * p
            dJ = F.change(x, step_vec)
            if not np.isfinite(dJ):
                raise NumericalError(f"non-finite action change at iteration {it}")
            if dJ <= cfg.armijo_c * alpha * slope:
                break
            alpha *= cfg.backtrack_factor
            if alpha < cfg.tol_step:
                break
        if alpha < cfg.tol_step:
            reason = "step_collapse"
            break

        prev_x, prev_g = x[1:-1].copy(), g
        x += step_vec
        if dJ >= 0:
            monotone = False
        J += dJ
        g = F.gradient(x)
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient at iteration {it}")
        history.append(J)
        it += 1

    path = Path(grid, x)
    report = action_report(path, pot, coef, eps, cfg.rule, functional=F)
    if not converged:
        log.warning("minimize stopped without convergence (%s) after %d iterations, grad_dual=%.3g",
                    reason, it, report.grad_dual)
    return MinimizeResult(path, report, it, converged, monotone, reason, history)


@dataclass
class TheoremReport:
    checks: dict
    residual_inf: float
    residual_limit: float
    min_gap_to_wells: float
    saturated_nodes: int
    tail_masses: tuple
    tail_tol: float
    sup: float
    collar_edge: float

    @property
    def passed(self):
        return all(self.checks.values())

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


# Nodes within this distance of a well are at the rounding floor of 1.
SATURATION_ULPS = 4
_SAT = SATURATION_ULPS * np.finfo(float).eps


def _range_check(x):
    """Strict -1 < x_i < 1 on the interior, allowing for underflowed tails.

    Where the exact tail 1 + x_i (1 - x_i) is below the representable
    spacing at 1, the computed node rounds onto the well or a few ulps past
    it. Such nodes are accepted only as a run glued to the matching clamp;
    anywhere else a node at or beyond a well fails the check.
    """
    inner = x[1:-1]
    n = inner.size
    lo_sat = np.abs(inner + 1.0) <= _SAT
    hi_sat = np.abs(inner - 1.0) <= _SAT
    # contiguous runs starting at each clamp
    run_lo = n if lo_sat.all() else int(np.argmin(lo_sat))
    run_hi = n if hi_sat.all() else int(np.argmin(hi_sat[::-1]))
    core = inner[run_lo : n - run_hi]
    ok = bool(np.all(core > -1.0) and np.all(core < 1.0))
    return ok, int(run_lo + run_hi)


def verify_solution(result: MinimizeResult, pot, coef: Coefficient, eps: float = 1.0, *,
                    c_res: float = C_RES, tail_tol: float = 1e-3) -> TheoremReport:
    """Grade a candidate minimiser as a solution of the original problem.

    Checks: second-order residual, range strictly inside (-1, 1), decay of
    the outer-half tail masses, and that the path never leaves the collar
    where the modified and original potentials agree.
    """
    path = result.path
    x = path.x
    h = path.grid.h
    F = DiscreteAction(path.grid, pot, coef, eps)
    res = float(np.max(np.abs(F.residual(x))))
    limit = c_res * h * h
    in_range, saturated = _range_check(x)
    tails = segment_tail_masses(path, 0.5)
    edge = 1.0 + pot.delta if isinstance(pot, ModifiedPotential) else float("inf")
    sup = float(np.abs(x).max())
    inner = x[1:-1]
    gap = float(min(np.min(inner + 1.0), np.min(1.0 - inner)))
    checks = {
        "residual": res <= limit,
        "range": in_range,
        "tails": max(tails) <= tail_tol,
        "collar": sup <= edge,
    }
    return TheoremReport(
        checks=checks,
        residual_inf=res,
        residual_limit=limit,
        min_gap_to_wells=gap,
        saturated_nodes=saturated,
        tail_masses=tails,
        tail_tol=tail_tol,
        sup=sup,
        collar_edge=edge,
    )


def lambda_tau(pot, a_inf: float, tau: float) -> float:
    """Action of the constant-a_inf heteroclinic between levels -1+tau and 1-tau.

    Computed in position variables via the first integral, so no profile
    inversion is involved.
    """
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    return position_action(pot, a_inf, -1.0 + tau, 1.0 - tau)


@dataclass
class LevelEstimate:
    name: str
    value: float
    grad_dual: float
    residual_inf: float
    converged: bool
    coefficient: str
    eps: float
    T: float
    N: int
    result: MinimizeResult = field(repr=False, default=None)

    def row(self):
        return {
            "level": self.name,
            "J": self.value,
            "grad_dual": self.grad_dual,
            "residual_inf": self.residual_inf,
            "converged": self.converged,
            "coefficient": self.coefficient,
            "eps": self.eps,
            "T": self.T,
            "N": self.N,
        }


@dataclass
class LevelTable:
    levels: dict
    lambda_tau: dict
    flags: dict
    tolerance: dict
    notes: list = field(default_factory=list)

    @property
    def b_eps(self):
        return self._v("b_eps")

    @property
    def b_0(self):
        return self._v("b_0")

    @property
    def b_inf(self):
        return self._v("b_inf")

    @property
    def b_p(self):
        return self._v("b_p")

    def _v(self, key):
        est = self.levels.get(key)
        return None if est is None else est.value

    @property
    def converged(self):
        return all(e.converged for e in self.levels.values())


def _level_tol(v):
    return 1e-6 * max(1.0, abs(v))


def _run_level(name, grid, pot, coef, eps, config, seed=None):
    seed = seed or default_seed(grid, pot, coef, eps)
    res = minimize(seed, pot, coef, eps, config)
    r = res.report
    return LevelEstimate(name, r.value, r.grad_dual, r.residual_inf, res.converged,
                         coef.name, float(eps), grid.T, grid.N, res)


LEVELS_BY_CLASS = {
    "constant": ("b_eps", "b_0", "b_inf"),
    "rabinowitz": ("b_eps", "b_0", "b_inf"),
    "asymptotically_periodic": ("b_eps", "b_p"),
    "coercive": ("b_eps", "b_0"),
    "periodic": ("b_eps",),
    "bounded_generic": ("b_eps",),
}


def estimate_levels(pot, coef: Coefficient, eps: float = 1.0, grid: Grid | None = None,
                    config: SolveConfig | None = None, *, levels=None,
                    taus=(0.1, 1e-2, 1e-3, 1e-6), bp_extension: float = 1.5,
                    trend_eps=None) -> LevelTable:
    """Minimise for each requested level and evaluate the inequalities among them.

    ``b_0`` uses const(a(0)), ``b_inf`` const(a_inf), ``b_p`` the periodic
    envelope; ``b_p`` is recomputed on a window `bp_extension` times wider
    to expose truncation bias. ``beps_to_b0_trend`` is only evaluated when
    `trend_eps` (a decreasing eps list) is given; it then records whether
    the sweep stays above b_0 and is non-increasing.
    """
    grid = grid or Grid()
    config = config or SolveConfig()
    wanted = tuple(levels) if levels is not None else LEVELS_BY_CLASS[coef.class_tag]
    p = coef.params
    out = {}
    notes = []
    for name in wanted:
        if name == "b_eps":
            out[name] = _run_level(name, grid, pot, coef, eps, config)
        elif name == "b_0":
            a0 = float(coef.eval(0.0))
            out[name] = _run_level(name, grid, pot, make_standard(f"const({a0!r})"), 1.0, config)
        elif name == "b_inf":
            if p.a_inf is None or not np.isfinite(p.a_inf):
                raise ValueError(f"b_inf needs a finite a_inf for {coef.name}")
            out[name] = _run_level(name, grid, pot, make_standard(f"const({p.a_inf!r})"), 1.0, config)
        elif name == "b_p":
            if p.envelope is None:
                raise ValueError(f"b_p needs a periodic envelope for {coef.name}")
            est = _run_level(name, grid, pot, p.envelope, eps, config)
            out[name] = est
            wide = grid.with_spacing(bp_extension * grid.T)
            est_w = _run_level("b_p_wide", wide, pot, p.envelope, eps, config)
            out["b_p_wide"] = est_w
            notes.append(f"b_p truncation bias (T={wide.T:g} minus T={grid.T:g}): {est_w.value - est.value:.3e}")
        else:
            raise ValueError(f"unknown level {name!r}")

    lam = {}
    if p.a_inf is not None and np.isfinite(p.a_inf):
        lam = {float(tau): lambda_tau(pot, p.a_inf, tau) for tau in taus}

    tol = {k: _level_tol(v.value) for k, v in out.items()}
    flags = {}
    if "b_0" in out and "b_inf" in out:
        flags["b0_lt_binf"] = out["b_inf"].value - out["b_0"].value > tol["b_0"] + tol["b_inf"]
    if "b_0" in out and "b_eps" in out:
        flags["beps_ge_b0"] = out["b_eps"].value >= out["b_0"].value - tol["b_0"]
    if "b_p" in out and "b_eps" in out:
        flags["b_lt_bp"] = out["b_p"].value - out["b_eps"].value > tol["b_p"] + tol["b_eps"]
    flags["beps_to_b0_trend"] = None
    if trend_eps is not None and "b_0" in out:
        sweep = epsilon_sweep(pot, coef, trend_eps, grid, config, b_0=out["b_0"])
        flags["beps_to_b0_trend"] = sweep.above_b0 and sweep.non_increasing
        notes.append(f"trend sweep over eps={list(map(float, trend_eps))}: final gap {sweep.final_gap:.3e}")
    return LevelTable(out, lam, flags, tol, notes)


@dataclass
class SweepRow:
    eps: float
    J: float
    grad_dual: float
    residual_inf: float
    converged: bool
    error: str | None = None
    result: MinimizeResult = field(repr=False, default=None)

    def row(self):
        return {"eps": self.eps, "J": self.J, "grad_dual": self.grad_dual,
                "residual_inf": self.residual_inf, "converged": self.converged}


@dataclass
class SweepTable:
    rows: list
    b_0: float
    tolerance: float
    above_b0: bool
    non_increasing: bool
    final_gap: float

    def values(self):
        return np.array([r.J for r in self.rows])


def epsilon_sweep(pot, coef: Coefficient, eps_list, grid: Grid | None = None,
                  config: SolveConfig | None = None, *, continuation: bool = True,
                  b_0: LevelEstimate | None = None) -> SweepTable:
    """Levels b_eps along a strictly decreasing list of eps.

    With `continuation` each entry starts from the previous converged
    minimiser. A failing entry is recorded and the sweep moves on.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list or any(e <= 0 for e in eps_list):
        raise ValueError("eps_list must be non-empty and positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    grid = grid or Grid()
    config = config or SolveConfig()
    if b_0 is None:
        a0 = float(coef.eval(0.0))
        b_0 = _run_level("b_0", grid, pot, make_standard(f"const({a0!r})"), 1.0, config)
    rows = []
    seed = None
    for e in eps_list:
        start = seed if (continuation and seed is not None) else default_seed(grid, pot, coef, e)
        try:
            res = minimize(start, pot, coef, e, config)
        except (NumericalError, ValueError) as exc:
            rows.append(SweepRow(e, float("nan"), float("nan"), float("nan"), False, str(exc)))
            continue
        r = res.report
        rows.append(SweepRow(e, r.value, r.grad_dual, r.residual_inf, res.converged, None, res))
        if res.converged:
            seed = res.path
    tol = _level_tol(b_0.value)
    vals = np.array([r.J for r in rows])
    finite = vals[np.isfinite(vals)]
    above = bool(finite.size and np.all(finite >= b_0.value - tol))
    non_inc = bool(np.all(np.diff(finite) <= tol))
    gap = float(abs(finite[-1] - b_0.value)) if finite.size else float("nan")
    return SweepTable(rows, b_0.value, tol, above, non_inc, gap)
