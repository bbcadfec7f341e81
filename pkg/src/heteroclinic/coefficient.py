"""Time-dependent multipliers a(t) and finite-window class checks."""
from __future__ import annotations

import re
from dataclasses import dataclass, field, asdict
from pathlib import Path as FilePath
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Coefficient",
    "ClassParams",
    "ClassReport",
    "CoefficientFileError",
    "CLASS_TAGS",
    "make_standard",
    "load_tabulated_coefficient",
    "verify_class",
]

CLASS_TAGS = (
    "constant",
    "periodic",
    "rabinowitz",
    "asymptotically_periodic",
    "coercive",
    "bounded_generic",
)


class CoefficientFileError(ValueError):
    pass


@dataclass(frozen=True)
class ClassParams:
    a0: Optional[float] = None  # inf of a
    a_inf: Optional[float] = None  # limit / liminf at infinity
    period: Optional[float] = None
    envelope: Optional["Coefficient"] = None  # periodic majorant a_P
    l0: Optional[float] = None
    l1: Optional[float] = None


@dataclass(frozen=True)
class Coefficient:
    func: Callable = field(repr=False)
    class_tag: str
    params: ClassParams = ClassParams()
    name: str = "custom"
    even: bool = False
    extrapolation: Optional[str] = None

    def __post_init__(self):
        if self.class_tag not in CLASS_TAGS:
            raise ValueError(f"unknown class tag {self.class_tag!r}")

    def eval(self, t):
        return self.func(np.asarray(t, dtype=float))

    def __call__(self, t):
        return self.eval(t)

    def describe(self):
        p = self.params
        return {
            "name": self.name,
            "class_tag": self.class_tag,
            "a0": p.a0,
            "a_inf": p.a_inf,
            "period": p.period,
            "envelope": p.envelope.name if p.envelope is not None else None,
            "l0": p.l0,
            "l1": p.l1,
            "extrapolation": self.extrapolation,
        }


def _const(c):
    def f(t):
        return np.full(np.shape(t), c, dtype=float) if np.ndim(t) else float(c)
    return f


def _periodic_sin():
    return Coefficient(
        func=lambda t: 2.0 + np.sin(t),
        class_tag="periodic",
        params=ClassParams(a0=1.0, period=2 * np.pi, l0=1.0, l1=3.0),
        name="periodic_sin",
    )


_NAME_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([^)]*?)\s*\))?\s*$")


def make_standard(name: str) -> Coefficient:
    """Build one of the named coefficient instances.

    ``const(c)``           a(t) = c
    ``rabinowitz_gauss``   a(t) = 2 - exp(-t^2)
    ``periodic_sin``       a(t) = 2 + sin t
    ``asym_periodic``      a(t) = 2 + sin t - 1/(1 + t^2)
    ``coercive_quad``      a(t) = 1 + t^2, or 1 + c t^2 as ``coercive_quad(c)``
    """
    m = _NAME_RE.match(name)
    if m is None:
        raise ValueError(f"unknown coefficient {name!r}")
    base, arg = m.group(1), m.group(2)
    try:
        value = float(arg) if arg else None
    except ValueError:
        raise ValueError(f"bad argument in coefficient name {name!r}") from None

    if base == "const":
        if value is None or not value > 0:
            raise ValueError("const(c) needs a positive c")
        return Coefficient(
            func=_const(value),
            class_tag="constant",
            params=ClassParams(a0=value, a_inf=value, l0=value, l1=value),
            name=f"const({value:g})",
            even=True,
        )
    if arg is not None and base != "coercive_quad":
        raise ValueError(f"coefficient {base!r} takes no argument")
    if base == "rabinowitz_gauss":
        return Coefficient(
            func=lambda t: 2.0 - np.exp(-t * t),
            class_tag="rabinowitz",
            params=ClassParams(a0=1.0, a_inf=2.0, l0=1.0, l1=2.0),
            name=base,
            even=True,
        )
    if base == "periodic_sin":
        return _periodic_sin()
    if base == "asym_periodic":
        env = _periodic_sin()
        ts = np.linspace(-10.0, 10.0, 200_001)
        a0 = float(np.min(2.0 + np.sin(ts) - 1.0 / (1.0 + ts * ts)))
        return Coefficient(
            func=lambda t: 2.0 + np.sin(t) - 1.0 / (1.0 + t * t),
            class_tag="asymptotically_periodic",
            params=ClassParams(a0=a0, period=2 * np.pi, envelope=env, l0=a0, l1=3.0),
            name=base,
        )
    if base == "coercive_quad":
        c = 1.0 if value is None else value
        if not c > 0:
            raise ValueError("coercive_quad(c) needs a positive c")
        return Coefficient(
            func=lambda t: 1.0 + c * t * t,
            class_tag="coercive",
            params=ClassParams(a0=1.0, a_inf=float("inf"), l0=1.0),
            name=base if value is None else f"coercive_quad({c:g})",
            even=True,
        )
    raise ValueError(f"unknown coefficient {name!r}")


def load_tabulated_coefficient(path, class_tag: str = "bounded_generic", **params) -> Coefficient:
    """Coefficient from a two-column ``t a(t)`` table.

    Linear interpolation inside the table, constant extrapolation outside.
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
                raise CoefficientFileError(f"{path}:{lineno}: expected 2 columns, got {len(parts)}")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise CoefficientFileError(f"{path}:{lineno}: non-numeric entry {line!r}") from None
    if len(rows) < 2:
        raise CoefficientFileError(f"{path}: need at least two rows")
    data = np.array(rows)
    ts, vals = data[:, 0], data[:, 1]
    if np.any(np.diff(ts) <= 0):
        raise CoefficientFileError(f"{path}: t column must be strictly increasing")
    if np.any(vals <= 0):
        raise CoefficientFileError(f"{path}: coefficient must be positive")
    params.setdefault("a0", float(vals.min()))
    params.setdefault("l0", float(vals.min()))
    params.setdefault("l1", float(vals.max()))
    return Coefficient(
        func=lambda t: np.interp(t, ts, vals),
        class_tag=class_tag,
        params=ClassParams(**params),
        name=path.name,
        extrapolation="constant",
    )


@dataclass
class ClassReport:
    name: str
    class_tag: str
    window: tuple
    samples: int
    probe_window: tuple
    a0: float  # sampled minimum
    argmin: float
    at_zero: float
    l0: float  # sampled bounds
    l1: float
    probe_min: float
    conditions: dict
    notes: list
    extrapolation: Optional[str] = None

    @property
    def passed(self):
        return [k for k, ok in self.conditions.items() if ok]

    def to_dict(self):
        d = asdict(self)
        d["passed"] = self.passed
        return d


def verify_class(
    coef: Coefficient,
    window=(-50.0, 50.0),
    samples: int = 100_001,
    *,
    bounds: Optional[tuple] = None,
    tail_tol: float = 1e-2,
) -> ClassReport:
    """Check conditions (a7)-(a11) on a finite sampling window.

    Limits at infinity are replaced by a probe band |t| in [P, 2P] with
    2P = max |t| of the window. `bounds` overrides the declared (l0, l1).
    """
    lo, hi = map(float, window)
    if not hi > lo:
        raise ValueError("window must have positive length")
    if samples < 100:
        raise ValueError("need at least 100 samples")
    ts = np.linspace(lo, hi, samples)
    vals = np.asarray(coef.eval(ts), dtype=float)
    reach = max(abs(lo), abs(hi))
    probe = reach / 2.0
    band = np.abs(ts) >= probe
    inner = ~band
    notes = []
    p = coef.params

    a_min = float(vals.min())
    argmin = float(ts[np.argmin(vals)])
    a_zero = float(coef.eval(0.0))
    probe_min = float(vals[band].min()) if band.any() else float("nan")
    conds = {}

    # (a7): inf a = a(0) and the probe band sits above a(0) by a margin
    unbounded = p.a_inf is not None and not np.isfinite(p.a_inf)
    a_inf = probe_min if p.a_inf is None or unbounded else p.a_inf
    margin = 0.1 * (a_inf - a_zero)
    if unbounded:
        notes.append("declared unbounded at infinity; (a7) needs a bounded coefficient")
    conds["a7"] = bool(
        not unbounded
        and a_min > 0
        and a_zero <= a_min + 1e-12 * max(1.0, abs(a_min))
        and probe_min > a_zero + max(margin, 0.0)
        and margin > 0
    )

    # (a8) and (a9) need a periodic majorant
    env = p.envelope
    if env is not None:
        gap = np.asarray(env.eval(ts), dtype=float) - vals
        probe_gap = float(max(abs(gap[np.argmin(np.abs(ts - probe))]), abs(gap[np.argmin(np.abs(ts + probe))])))
        inner_gap = float(np.abs(gap[inner]).max()) if inner.any() else float("inf")
        conds["a8"] = bool(probe_gap < tail_tol and probe_gap < inner_gap)
        conds["a9"] = bool(a_min > 0 and np.all(gap > 0))
    else:
        conds["a8"] = False
        conds["a9"] = False
        notes.append("no periodic envelope declared; (a8)/(a9) not applicable")

    # (a10): growth proxy a(+-2P) > 2 a(+-P)
    grow = [float(coef.eval(s * reach)) > 2.0 * float(coef.eval(s * probe)) for s in (-1.0, 1.0)]
    conds["a10"] = bool(a_min > 0 and all(grow))

    # (a11): declared bounds hold on every sample
    if bounds is None and p.l0 is not None and p.l1 is not None:
        bounds = (p.l0, p.l1)
    if bounds is None:
        conds["a11"] = False
        notes.append("no finite bounds declared; (a11) fails")
    else:
        l0, l1 = map(float, bounds)
        conds["a11"] = bool(l0 > 0 and np.all(vals >= l0) and np.all(vals <= l1))

    if coef.extrapolation:
        notes.append(f"tabulated coefficient, {coef.extrapolation} extrapolation outside the table")

    return ClassReport(
        name=coef.name,
        class_tag=coef.class_tag,
        window=(lo, hi),
        samples=samples,
        probe_window=(probe, reach),
        a0=a_min,
        argmin=argmin,
        at_zero=a_zero,
        l0=a_min,
        l1=float(vals.max()),
        probe_min=probe_min,
        conditions=conds,
        notes=notes,
        extrapolation=coef.extrapolation,
    )
