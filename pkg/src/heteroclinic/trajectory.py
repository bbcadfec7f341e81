"""Clamped trajectories on a uniform grid over [-T, T] and their diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, asdict
from functools import cached_property
from pathlib import Path as FilePath

import numpy as np

__all__ = [
    "Grid",
    "Path",
    "TailReport",
    "BoundReport",
    "TransitionReport",
    "tanh_seed",
    "tail_report",
    "sup_bound_check",
    "coercive_radius",
    "segment_tail_masses",
    "transition_interval",
    "save_path",
    "load_path",
    "format_float",
]


def format_float(v) -> str:
    return "%.17g" % v


@dataclass(frozen=True)
class Grid:
    T: float = 12.0
    N: int = 1201

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("grid half-width T must be positive")
        if int(self.N) != self.N or self.N < 3 or self.N % 2 == 0:
            raise ValueError(f"node count N must be an odd integer >= 3, got {self.N}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "N", int(self.N))

    @property
    def h(self) -> float:
        return 2.0 * self.T / (self.N - 1)

    @cached_property
    def times(self) -> np.ndarray:
        # integer numerators keep t_{N-1-i} = -t_i and t_mid = 0 exact
        k = 2 * np.arange(self.N) - (self.N - 1)
        t = self.T * k / (self.N - 1)
        t.setflags(write=False)
        return t

    @property
    def mid(self) -> int:
        return (self.N - 1) // 2

    def with_spacing(self, T: float) -> "Grid":
        """Grid of half-width about `T` with the same spacing (N kept odd)."""
        cells = 2 * int(round(T / self.h))
        return Grid(T=cells * self.h / 2.0, N=cells + 1)


@dataclass(frozen=True, eq=False)
class Path:
    """Positions at every grid node; by default x_0 = -1 and x_{N-1} = +1 exactly."""

    grid: Grid
    x: np.ndarray
    clamped: bool = True

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        if x.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} values, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("path values must be finite")
        if self.clamped and (x[0] != -1.0 or x[-1] != 1.0):
            raise ValueError("clamped path needs x_0 = -1 and x_{N-1} = +1")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def t(self):
        return self.grid.times

    @property
    def interior(self):
        return self.x[1:-1]

    def with_interior(self, values) -> "Path":
        x = self.x.copy()
        x[1:-1] = values
        return Path(self.grid, x, self.clamped)

    def reflected(self) -> "Path":
        """x~(t) = -x(-t)."""
        return Path(self.grid, -self.x[::-1], self.clamped)


def tanh_seed(grid: Grid, k: float = 1.0 / np.sqrt(2.0)) -> Path:
    """tanh(k t) rescaled so that the ends land exactly on -1 and +1."""
    if not k > 0:
        raise ValueError("slope k must be positive")
    x = np.tanh(k * grid.times) / np.tanh(k * grid.T)
    x[0], x[-1] = -1.0, 1.0
    return Path(grid, x)


def _trapezoid(y, h):
    return h * (y.sum() - 0.5 * (y[0] + y[-1]))


@dataclass(frozen=True)
class TailReport:
    """Squared H^1 distances of each half-path to its well.

    ``weighted_*`` use a(eps t) in front of the L^2 part.
    """

    left_h1: float
    right_h1: float
    weighted_left: float
    weighted_right: float
    sup_on_window: float

    def to_dict(self):
        return asdict(self)


def _half_masses(x, h, weight):
    n = x.size
    m = (n - 1) // 2
    slope2 = (np.diff(x) / h) ** 2
    kin_left = h * slope2[:m].sum()
    kin_right = h * slope2[m:].sum()
    pot_left = _trapezoid(weight[: m + 1] * (x[: m + 1] + 1.0) ** 2, h)
    pot_right = _trapezoid(weight[m:] * (x[m:] - 1.0) ** 2, h)
    return kin_left + pot_left, kin_right + pot_right


def tail_report(path: Path, coef=None, eps: float = 1.0) -> TailReport:
    """H^1 tail masses over [-T, 0] and [0, T].

    Forward differences for the derivative, trapezoid rule for the L^2 part.
    """
    h = path.grid.h
    ones = np.ones_like(path.x)
    left, right = _half_masses(path.x, h, ones)
    if coef is None:
        wl, wr = left, right
    else:
        a = np.asarray(coef.eval(eps * path.t), dtype=float) * ones
        wl, wr = _half_masses(path.x, h, a)
    return TailReport(
        left_h1=float(left),
        right_h1=float(right),
        weighted_left=float(wl),
        weighted_right=float(wr),
        sup_on_window=float(np.abs(path.x).max()),
    )


def segment_tail_masses(path: Path, fraction: float = 0.5):
    """Squared H^1 distance to the wells over [-T, -fT] and [fT, T]."""
    t, x, h = path.t, path.x, path.grid.h
    T = path.grid.T
    left = t <= -fraction * T + 1e-12 * T
    right = t >= fraction * T - 1e-12 * T
    out = []
    for mask, well in ((left, -1.0), (right, 1.0)):
        idx = np.flatnonzero(mask)
        seg = x[idx[0] : idx[-1] + 1]
        kin = h * ((np.diff(seg) / h) ** 2).sum()
        out.append(float(kin + _trapezoid((seg - well) ** 2, h)))
    return tuple(out)


@dataclass(frozen=True)
class BoundReport:
    action: float
    action_bound: float
    T: float
    l0: float
    threshold: float
    C: float
    bound: float
    sup: float
    passed: bool

    def to_dict(self):
        return asdict(self)


def coercive_radius(pot, level: float, tol: float = 1e-14) -> float:
    """Smallest c >= 1 with pot(x) > level for every |x| >= c.

    Uses bisection on each coercive branch |x| > 1 (where pot is
    increasing in |x|) and returns the larger of the two radii.
    """
    if not level > 0:
        return 1.0
    radii = []
    for sign in (-1.0, 1.0):
        lo, hi = 1.0, 2.0
        while float(pot.eval(sign * hi)) <= level:
            lo, hi = hi, 2.0 * hi
            if hi > 1e150:
                raise ValueError("potential is not coercive")
        while hi - lo > tol * hi:
            mid = 0.5 * (lo + hi)
            if float(pot.eval(sign * mid)) > level:
                hi = mid
            else:
                lo = mid
        radii.append(hi)
    return max(radii)


def sup_bound_check(path: Path, action_bound: float, pot, coef, eps: float = 1.0, rule=None) -> BoundReport:
    """Check max |x_i| <= C + 2 sqrt(A T) for a path with action <= A.

    C is the coercivity radius of `pot` at level A / (l0 T), l0 being the
    sampled minimum of a(eps t) on the grid.
    """
    from .action import action, DEFAULT_RULE

    J = action(path, pot, coef, eps, rule=rule or DEFAULT_RULE)
    if J > action_bound:
        raise ValueError(f"path action {J:.6g} exceeds the bound A = {action_bound:.6g}")
    a = np.asarray(coef.eval(eps * path.t), dtype=float)
    l0 = float(np.min(a))
    if not l0 > 0:
        raise ValueError("coefficient has no positive lower bound on the window")
    T = path.grid.T
    threshold = action_bound / (l0 * T)
    C = coercive_radius(pot, threshold)
    bound = C + 2.0 * np.sqrt(action_bound * T)
    sup = float(np.abs(path.x).max())
    return BoundReport(
        action=float(J),
        action_bound=float(action_bound),
        T=T,
        l0=l0,
        threshold=float(threshold),
        C=float(C),
        bound=float(bound),
        sup=sup,
        passed=bool(sup <= bound),
    )


@dataclass(frozen=True)
class TransitionReport:
    """Where the path leaves the left well and settles into the right one.

    ``s``/``t`` use the eps/2 collar; ``s_eps``/``t_eps`` the wider eps collar.
    """

    s: float
    t: float
    s_eps: float
    t_eps: float
    margin: float
    non_monotone: bool
    collar_only: bool

    @property
    def length(self):
        return self.t - self.s

    def to_dict(self):
        d = asdict(self)
        d["length"] = self.length
        return d


def _crossings(x, lower, upper):
    below = np.flatnonzero(x <= lower)
    i = int(below[-1]) if below.size else 0
    not_above = np.flatnonzero(x < upper)
    j = int(not_above[-1]) + 1 if not_above.size else 0
    return i, j


def transition_interval(path: Path, eps: float) -> TransitionReport:
    if not 0 < eps < 1:
        raise ValueError("margin eps must lie in (0, 1)")
    x, t = path.x, path.t
    if x[0] != -1.0 or x[-1] != 1.0:
        raise ValueError("transition_interval needs a clamped path")
    lower, upper = -1.0 + eps / 2, 1.0 - eps / 2
    i, j = _crossings(x, lower, upper)
    ie, je = _crossings(x, -1.0 + eps, 1.0 - eps)
    early = bool(np.any(x[:i] > lower))
    inside = x[i + 1 : j]
    strays = bool(np.any((inside < lower) | (inside > upper)))
    collar_only = bool(not np.any((x > lower) & (x < upper)))
    return TransitionReport(
        s=float(t[i]),
        t=float(t[j]),
        s_eps=float(t[ie]),
        t_eps=float(t[je]),
        margin=float(eps),
        non_monotone=early or strays,
        collar_only=collar_only,
    )


def save_path(path: Path, file) -> None:
    """Two-column ``t x`` text, 17 significant digits."""
    lines = [f"{format_float(ti)} {format_float(xi)}\n" for ti, xi in zip(path.t, path.x)]
    FilePath(file).write_text("".join(lines))


def load_path(file) -> Path:
    data = np.loadtxt(file, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{file}: expected two columns")
    t, x = data[:, 0], data[:, 1]
    grid = Grid(T=float(t[-1]), N=t.size)
    if not np.allclose(grid.times, t, rtol=0, atol=1e-12 * grid.T):
        raise ValueError(f"{file}: time column is not a symmetric uniform grid")
    return Path(grid, x, clamped=bool(x[0] == -1.0 and x[-1] == 1.0))
