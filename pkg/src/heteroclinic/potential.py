"""Double-well potentials with wells at -1 and +1.

A `Potential` carries V, V' and V'' as vectorised callables. `modify`
builds the coercive extension used by the action functional, and
`well_constants` measures the quadratic sandwich constants around the wells.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path as FilePath

import numpy as np
from scipy.interpolate import CubicHermiteSpline

__all__ = [
    "Potential",
    "QuarticPotential",
    "TabulatedPotential",
    "ModifiedPotential",
    "WellConstants",
    "PotentialFileError",
    "make_quartic",
    "load_tabulated",
    "modify",
    "well_constants",
    "DEFAULT_DELTA",
]

DEFAULT_DELTA = 0.1
COLLAR_SAMPLES = 10_000


class PotentialFileError(ValueError):
    """Malformed potential table; the message carries the offending line."""


class Potential:
    """Scalar double well. Subclasses implement `eval`, `deriv`, `second_deriv`."""

    kind = "abstract"
    well_minus = -1.0
    well_plus = 1.0

    def eval(self, x):
        raise NotImplementedError

    def deriv(self, x):
        raise NotImplementedError

    def second_deriv(self, x):
        raise NotImplementedError

    def increment(self, x, d):
        """V(x + d) - V(x), elementwise.

        Taking the displacement `d` rather than the end point lets subclasses
        return a value whose rounding error scales with |d|; line searches
        near a minimiser depend on it.
        """
        x = np.asarray(x, dtype=float)
        return self.eval(x + d) - self.eval(x)

    def __call__(self, x):
        return self.eval(x)


class QuarticPotential(Potential):
    """V(x) = (1 - x^2)^2 / 4."""

    kind = "quartic_default"

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        return 0.25 * (1.0 - x * x) ** 2

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        return -x * (1.0 - x * x)

    def second_deriv(self, x):
        x = np.asarray(x, dtype=float)
        return 3.0 * x * x - 1.0

    def increment(self, x, d):
        x = np.asarray(x, dtype=float)
        d = np.asarray(d, dtype=float)
        # u = 1 - x^2 moves by -w with w = d(2x + d); u'^2 - u^2 = -w(2u - w)
        w = d * (2.0 * x + d)
        return -0.25 * w * (2.0 * (1.0 - x * x) - w)

    def __repr__(self):
        return "QuarticPotential()"


def make_quartic() -> QuarticPotential:
    return QuarticPotential()


class TabulatedPotential(Potential):
    """Potential interpolated from a uniformly spaced (x, V) table.

    Nodal derivatives come from central differences, except at nodes lying
    on a well where V' = 0 is imposed (a well is a minimum of V). Between
    nodes the potential is the cubic Hermite interpolant of (V, V'), so
    `deriv` is the exact derivative of `eval`.
    """

    kind = "user_tabulated"

    def __init__(self, xs, vs, source: str | None = None):
        xs = np.asarray(xs, dtype=float)
        vs = np.asarray(vs, dtype=float)
        if xs.ndim != 1 or xs.shape != vs.shape or xs.size < 5:
            raise ValueError("potential table needs at least 5 (x, V) rows")
        steps = np.diff(xs)
        if np.any(steps <= 0):
            raise ValueError("potential table x column must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-8, atol=0.0):
            raise ValueError("potential table x column must be uniformly spaced")
        if xs[0] > -1.0 or xs[-1] < 1.0:
            raise ValueError("potential table must cover [-1, 1]")
        self.xs = xs
        self.vs = vs
        self.source = source
        dv = np.gradient(vs, xs)
        on_well = np.isclose(np.abs(xs), 1.0, rtol=0.0, atol=1e-9 * steps[0])
        dv[on_well] = 0.0
        self._spline = CubicHermiteSpline(xs, vs, dv, extrapolate=False)
        self._d1 = self._spline.derivative(1)
        self._d2 = self._spline.derivative(2)
        self._validate()

    @property
    def x_range(self):
        return float(self.xs[0]), float(self.xs[-1])

    def _checked(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.x_range
        if np.any((x < lo) | (x > hi)):
            raise ValueError(f"position outside tabulated range [{lo}, {hi}]")
        return x

    def eval(self, x):
        return self._spline(self._checked(x))

    def deriv(self, x):
        return self._d1(self._checked(x))

    def second_deriv(self, x):
        return self._d2(self._checked(x))

    def _validate(self):
        if abs(float(self.eval(-1.0))) > 1e-12 or abs(float(self.eval(1.0))) > 1e-12:
            raise ValueError("tabulated potential must vanish at x = -1 and x = +1")
        lo, hi = self.x_range
        grid = np.linspace(lo, hi, 20_001)
        vals = self.eval(grid)
        if np.any(vals < -1e-12):
            raise ValueError("tabulated potential takes negative values")
        inner = (grid > -1.0) & (grid < 1.0)
        if np.any(vals[inner] <= 0.0):
            raise ValueError("tabulated potential must be positive strictly inside (-1, 1)")
        if self.second_deriv(-1.0) <= 0 or self.second_deriv(1.0) <= 0:
            raise ValueError("tabulated potential needs positive curvature at both wells")

    def __repr__(self):
        return f"TabulatedPotential(n={self.xs.size}, range={self.x_range}, source={self.source!r})"


def load_tabulated(path) -> TabulatedPotential:
    """Read a two-column ``x V(x)`` text table.

    Blank lines and ``#`` comments are skipped. Columns may be separated by
    whitespace or commas.
    """
    path = FilePath(path)
    rows = []
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise PotentialFileError(f"{path}:{lineno}: expected 2 columns, got {len(parts)}")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise PotentialFileError(f"{path}:{lineno}: non-numeric entry {line!r}") from None
    if not rows:
        raise PotentialFileError(f"{path}: no data rows")
    data = np.array(rows)
    try:
        return TabulatedPotential(data[:, 0], data[:, 1], source=str(path))
    except ValueError as exc:
        raise PotentialFileError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class ModifiedPotential(Potential):
    """Coercive C^1 extension of `base` beyond +-(1 + delta).

    Outside the collar the potential continues as
    V(s) + V'(s)(x - s) + (x - s)^2 with s = sign(x)(1 + delta).
    """

    base: Potential
    delta: float
    # (s, V(s), V'(s)) at the left and right seams
    left: tuple = field(repr=False, default=())
    right: tuple = field(repr=False, default=())

    kind = "modified"

    @property
    def edge(self):
        return 1.0 + self.delta

    def _branches(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        e = self.edge
        return x, x < -e, x > e

    @staticmethod
    def _shape(out, like):
        return float(out[0]) if np.ndim(like) == 0 else out

    def eval(self, x):
        xs, lo, hi = self._branches(x)
        out = np.empty_like(xs)
        mid = ~(lo | hi)
        out[mid] = self.base.eval(xs[mid])
        for mask, (s, vs, ds) in ((lo, self.left), (hi, self.right)):
            d = xs[mask] - s
            out[mask] = vs + ds * d + d * d
        return self._shape(out, x)

    def deriv(self, x):
        xs, lo, hi = self._branches(x)
        out = np.empty_like(xs)
        mid = ~(lo | hi)
        out[mid] = self.base.deriv(xs[mid])
        for mask, (s, _, ds) in ((lo, self.left), (hi, self.right)):
            out[mask] = ds + 2.0 * (xs[mask] - s)
        return self._shape(out, x)

    def second_deriv(self, x):
        xs, lo, hi = self._branches(x)
        out = np.full_like(xs, 2.0)
        mid = ~(lo | hi)
        out[mid] = self.base.second_deriv(xs[mid])
        return self._shape(out, x)

    def increment(self, x, d):
        xb, db = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(d, dtype=float))
        xs, xlo, xhi = self._branches(xb)
        ds_ = np.atleast_1d(db)
        ys, ylo, yhi = self._branches(xs + ds_)
        out = np.empty_like(xs)
        done = ~(xlo | xhi) & ~(ylo | yhi)
        out[done] = self.base.increment(xs[done], ds_[done])
        for xm, ym, (s, _, slope) in ((xlo, ylo, self.left), (xhi, yhi, self.right)):
            same = xm & ym
            z = xs[same] - s
            d = ds_[same]
            out[same] = d * (slope + 2.0 * z + d)
            done |= same
        rest = ~done
        if np.any(rest):
            out[rest] = self.eval(ys[rest]) - self.eval(xs[rest])
        return self._shape(out, xb)


def modify(pot: Potential, delta: float = DEFAULT_DELTA) -> ModifiedPotential:
    """Return the coercive extension of `pot` outside [-1-delta, 1+delta].

    Raises ValueError when V'(x) x <= 0 somewhere on the collars
    (1, 1+delta] or [-1-delta, -1).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    e = 1.0 + delta
    right = np.linspace(1.0, e, COLLAR_SAMPLES + 1)[1:]
    left = -right
    for xs in (left, right):
        if np.any(pot.deriv(xs) * xs <= 0.0):
            raise ValueError(f"V'(x)x > 0 fails inside the collar for delta={delta}")
    seams = []
    for s in (-e, e):
        seams.append((s, float(pot.eval(s)), float(pot.deriv(s))))
    return ModifiedPotential(base=pot, delta=float(delta), left=seams[0], right=seams[1])


@dataclass(frozen=True)
class WellConstants:
    c1: float
    c2: float
    delta: float
    kappa_minus: float
    kappa_plus: float


def well_constants(pot: Potential, delta: float = DEFAULT_DELTA, a: float = 1.0) -> WellConstants:
    """Quadratic bounds c1 (x-+1)^2 <= V(x) <= c2 (x-+1)^2 on both collars.

    The ratio V(x)/(x-+1)^2 is sampled on 10^4 + 1 uniform points of each
    closed collar; at the well itself the limit V''/2 is used.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    base = pot.base if isinstance(pot, ModifiedPotential) else pot
    curv = (float(base.second_deriv(-1.0)), float(base.second_deriv(1.0)))
    if min(curv) <= 0:
        raise ValueError("V'' must be positive at both wells")
    ratios = []
    offsets = np.linspace(-delta, delta, COLLAR_SAMPLES + 1)
    for well, vpp in zip((-1.0, 1.0), curv):
        r = np.empty_like(offsets)
        nz = offsets != 0.0
        r[nz] = base.eval(well + offsets[nz]) / offsets[nz] ** 2
        r[~nz] = 0.5 * vpp
        ratios.append(r)
    ratios = np.concatenate(ratios)
    if np.any(ratios <= 0.0):
        raise ValueError("V vanishes or turns negative inside a well collar")
    c1, c2 = float(ratios.min()), float(ratios.max())
    if not c1 < c2:
        # exactly quadratic wells; widen so that c1 < c2 still holds
        c2 = np.nextafter(c2, np.inf)
    return WellConstants(
        c1=c1,
        c2=float(c2),
        delta=float(delta),
        kappa_minus=float(np.sqrt(a * curv[0])),
        kappa_plus=float(np.sqrt(a * curv[1])),
    )
