"""Batch front end.

    heteroclinic <command> --config run.json [--out DIR]

Commands: solve, sweep, levels, verify, oracle-compare, classify. The
config is one JSON document; every default the run resolves is written back
into ``manifest.json`` next to the outputs.

Exit status: 0 success, 2 configuration error, 3 non-convergence or failed
verification (tables are still written), 4 I/O failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path as FilePath

import numpy as np

from . import __version__
from .action import DiscreteAction, action_report
from .coefficient import Coefficient, load_tabulated_coefficient, make_standard, verify_class, CLASS_TAGS
from .oracle import autonomous_oracle, equipartition_residual, save_profile, tanh_exact
from .potential import QuarticPotential, load_tabulated, make_quartic, modify, DEFAULT_DELTA
from .solver import (
    C_RES,
    MinimizeResult,
    SolveConfig,
    epsilon_sweep,
    estimate_levels,
    minimize,
    verify_solution,
)
from .trajectory import Grid, format_float, load_path, save_path, tanh_seed

__all__ = ["ConfigError", "RunConfig", "load_config", "resolve_config", "run", "main", "dumps"]

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_IO = 0, 2, 3, 4
COMMANDS = ("solve", "sweep", "levels", "verify", "oracle_compare", "classify")

DEFAULTS = {
    "potential": {"kind": "quartic", "file": None, "delta": DEFAULT_DELTA},
    "coefficient": {"name": "const(1)", "file": None, "class_tag": None, "params": {}},
    "eps": 1.0,
    "eps_list": [2.0, 1.0, 0.5, 0.1, 0.02],
    "grid": {"T": 12.0, "N": 1201},
    "solver": SolveConfig().to_dict(),
    "seed": {"k": None},
    "verify": {"c_res": C_RES, "tail_tol": 1e-3, "path_file": None},
    "classify": {"window": [-50.0, 50.0], "samples": 100_001, "tail_tol": 1e-2, "bounds": None},
    "levels": {"taus": [0.1, 1e-2, 1e-3, 1e-6], "bp_extension": 1.5, "trend_eps": None},
    "sweep": {"continuation": True},
    "oracle": {"step": 1e-3},
    "figures": True,
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- output


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    return v


def _emit(v, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format_float(v) if math.isfinite(v) else "null"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_emit(x, indent, level + 1)}" for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(v, list):
        if not v:
            return "[]"
        items = [f"{pad}{_emit(x, indent, level + 1)}" for x in v]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(v).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float at 17 significant digits; NaN and inf become null."""
    return _emit(_jsonable(obj), indent, 0) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        out = []
        for key in header:
            v = row[key]
            if isinstance(v, (bool, np.bool_)):
                out.append("true" if v else "false")
            elif isinstance(v, (float, np.floating)):
                out.append(format_float(v))
            else:
                out.append(v)
        w.writerow(out)
    return buf.getvalue()


class _Writer:
    """Creates the output directory on first use and remembers what it wrote."""

    def __init__(self, out: FilePath):
        self.out = out
        self.files = []

    def path(self, name):
        self.out.mkdir(parents=True, exist_ok=True)
        self.files.append(name)
        return self.out / name

    def text(self, name, s):
        self.path(name).write_text(s)

    def json(self, name, obj):
        self.text(name, dumps(obj))


# ---------------------------------------------------------------- config


@dataclass
class RunConfig:
    command: str
    raw: dict  # fully resolved config, echoed into the manifest
    pot: object
    coef: Coefficient
    grid: Grid
    solver: SolveConfig
    out: FilePath
    base_dir: FilePath = field(default_factory=FilePath.cwd)

    def section(self, key):
        return self.raw[key]


def _merge(defaults, given, where):
    if not isinstance(given, dict):
        raise ConfigError(f"{where or 'config'} must be a JSON object")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where or 'config'}: {', '.join(unknown)}")
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if isinstance(defaults[k], dict) and k != "params":
            out[k] = _merge(defaults[k], v, f"{where}.{k}" if where else k)
        else:
            out[k] = v
    return out


def _number(v, name, positive=True):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number")
    if positive and not v > 0:
        raise ConfigError(f"{name} must be positive")
    return float(v)


def _file(base_dir, name, what):
    p = FilePath(name)
    if not p.is_absolute():
        p = base_dir / p
    if not p.is_file():
        raise ConfigError(f"{what} file not found: {name}")
    return p


def _build_potential(sec, base_dir):
    kind = sec["kind"]
    delta = _number(sec["delta"], "potential.delta")
    if kind == "quartic":
        if sec["file"] is not None:
            raise ConfigError("potential.file is only used with kind 'tabulated'")
        base = make_quartic()
    elif kind == "tabulated":
        if sec["file"] is None:
            raise ConfigError("potential.kind 'tabulated' needs potential.file")
        try:
            base = load_tabulated(_file(base_dir, sec["file"], "potential"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    else:
        raise ConfigError(f"unknown potential kind {kind!r}")
    try:
        return modify(base, delta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _build_coefficient(sec, base_dir):
    try:
        if sec["file"] is not None:
            if sec["class_tag"] is None:
                sec["class_tag"] = "bounded_generic"
            if sec["class_tag"] not in CLASS_TAGS:
                raise ConfigError(f"unknown class tag {sec['class_tag']!r}")
            params = dict(sec["params"] or {})
            return load_tabulated_coefficient(_file(base_dir, sec["file"], "coefficient"),
                                              sec["class_tag"], **params)
        if sec["params"] or sec["class_tag"] is not None:
            raise ConfigError("coefficient.class_tag and params only apply to tabulated coefficients")
        return make_standard(str(sec["name"]))
    except TypeError as exc:
        raise ConfigError(f"bad coefficient parameters: {exc}") from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def resolve_config(given: dict, command: str | None = None, out=None,
                   base_dir: FilePath | None = None) -> RunConfig:
    """Merge `given` over the defaults, validate it and build the run objects.

    Nothing is written here, so a bad config never leaves partial output.
    """
    base_dir = base_dir or FilePath.cwd()
    given = dict(given)
    cmd_cfg = given.pop("command", None)
    out_cfg = given.pop("out", None)
    raw = _merge(DEFAULTS, given, "")

    cmd = command or cmd_cfg
    if cmd is None:
        raise ConfigError("no command given")
    cmd = str(cmd).replace("-", "_")
    if cmd_cfg is not None and str(cmd_cfg).replace("-", "_") != cmd:
        raise ConfigError(f"command {command!r} disagrees with config command {cmd_cfg!r}")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}")
    out_dir = out if out is not None else out_cfg
    if out_dir is None:
        out_dir = "out"

    pot = _build_potential(raw["potential"], base_dir)
    coef = _build_coefficient(raw["coefficient"], base_dir)
    try:
        grid = Grid(T=_number(raw["grid"]["T"], "grid.T"), N=raw["grid"]["N"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    raw["grid"] = {"T": grid.T, "N": grid.N}
    try:
        solver = SolveConfig(**raw["solver"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solver: {exc}") from None
    raw["solver"] = solver.to_dict()

    raw["eps"] = _number(raw["eps"], "eps")
    eps_list = raw["eps_list"]
    if not isinstance(eps_list, list) or not eps_list:
        raise ConfigError("eps_list must be a non-empty list")
    eps_list = [_number(e, "eps_list entry") for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigError("eps_list must be strictly decreasing")
    raw["eps_list"] = eps_list

    k = raw["seed"]["k"]
    if k is None:
        base = pot.base
        curv = 0.5 * (float(base.second_deriv(-1.0)) + float(base.second_deriv(1.0)))
        k = math.sqrt(float(coef.eval(0.0)) * curv) / 2.0
    raw["seed"]["k"] = _number(k, "seed.k")

    ver = raw["verify"]
    ver["c_res"] = _number(ver["c_res"], "verify.c_res")
    ver["tail_tol"] = _number(ver["tail_tol"], "verify.tail_tol")
    if ver["path_file"] is not None:
        try:
            load_path(_file(base_dir, ver["path_file"], "verify.path_file"))
        except ValueError as exc:
            raise ConfigError(f"verify.path_file: {exc}") from None

    cl = raw["classify"]
    if not (isinstance(cl["window"], list) and len(cl["window"]) == 2):
        raise ConfigError("classify.window must be [t_min, t_max]")
    cl["window"] = [_number(v, "classify.window", positive=False) for v in cl["window"]]
    if not cl["window"][1] > cl["window"][0]:
        raise ConfigError("classify.window must have positive length")
    if not isinstance(cl["samples"], int) or cl["samples"] < 100:
        raise ConfigError("classify.samples must be an integer >= 100")
    cl["tail_tol"] = _number(cl["tail_tol"], "classify.tail_tol")
    if cl["bounds"] is not None:
        if not (isinstance(cl["bounds"], list) and len(cl["bounds"]) == 2):
            raise ConfigError("classify.bounds must be [l0, l1]")
        cl["bounds"] = [_number(v, "classify.bounds") for v in cl["bounds"]]

    lv = raw["levels"]
    lv["taus"] = [_number(t, "levels.taus entry") for t in lv["taus"]]
    if any(not t < 1 for t in lv["taus"]):
        raise ConfigError("levels.taus entries must lie in (0, 1)")
    lv["bp_extension"] = _number(lv["bp_extension"], "levels.bp_extension")
    if lv["trend_eps"] is not None:
        lv["trend_eps"] = [_number(e, "levels.trend_eps entry") for e in lv["trend_eps"]]
        if any(b >= a for a, b in zip(lv["trend_eps"], lv["trend_eps"][1:])):
            raise ConfigError("levels.trend_eps must be strictly decreasing")

    if not isinstance(raw["sweep"]["continuation"], bool):
        raise ConfigError("sweep.continuation must be true or false")
    raw["oracle"]["step"] = _number(raw["oracle"]["step"], "oracle.step")
    if not isinstance(raw["figures"], bool):
        raise ConfigError("figures must be true or false")

    if cmd == "levels":
        from .solver import LEVELS_BY_CLASS

        p = coef.params
        for name in LEVELS_BY_CLASS[coef.class_tag]:
            if name == "b_inf" and (p.a_inf is None or not math.isfinite(p.a_inf)):
                raise ConfigError(f"b_inf needs a finite a_inf for {coef.name}")
            if name == "b_p" and p.envelope is None:
                raise ConfigError(f"b_p needs a periodic envelope for {coef.name}")
    if cmd == "oracle_compare" and coef.class_tag != "constant":
        raise ConfigError("oracle-compare needs a constant coefficient")

    raw = {"command": cmd, "out": str(out_dir), **raw}
    return RunConfig(cmd, raw, pot, coef, grid, solver, FilePath(out_dir), base_dir)


def load_config(file, command: str | None = None, out=None) -> RunConfig:
    file = FilePath(file)
    try:
        text = file.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {file}: {exc.strerror}") from None
    try:
        given = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{file}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return resolve_config(given, command, out, file.parent.resolve())


# ---------------------------------------------------------------- commands


def _seed(cfg: RunConfig, grid=None):
    return tanh_seed(grid or cfg.grid, cfg.raw["seed"]["k"])


def _write_result(w: _Writer, res: MinimizeResult, stem: str):
    save_path(res.path, w.path(f"{stem}.txt"))
    rep = res.report.to_dict()
    rep.update(iterations=res.iterations, converged=res.converged,
               monotone_J=res.monotone_J, reason=res.reason)
    w.json(f"{stem}_report.json", rep)


def _cmd_solve(cfg: RunConfig, w: _Writer):
    res = minimize(_seed(cfg), cfg.pot, cfg.coef, cfg.raw["eps"], cfg.solver)
    _write_result(w, res, "path")
    if cfg.raw["figures"]:
        from . import figures

        figures.plot_profiles({cfg.coef.name: res.path}, w.path("path.png"),
                              title=f"{cfg.coef.name}, eps={cfg.raw['eps']:g}")
        F = DiscreteAction(cfg.grid, cfg.pot, cfg.coef, cfg.raw["eps"], cfg.solver.rule)
        figures.plot_residual(res.path, F.residual(res.path.x), w.path("residual.png"))
    print(f"solve: J={res.report.value:.10g} grad_dual={res.report.grad_dual:.3g} "
          f"converged={res.converged} ({res.iterations} iterations)")
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def _cmd_sweep(cfg: RunConfig, w: _Writer):
    table = epsilon_sweep(cfg.pot, cfg.coef, cfg.raw["eps_list"], cfg.grid, cfg.solver,
                          continuation=cfg.raw["sweep"]["continuation"])
    header = ["eps", "J", "grad_dual", "residual_inf", "converged"]
    rows = [r.row() for r in table.rows]
    w.text("sweep.csv", _csv_text(header, rows))
    w.json("sweep.json", {
        "rows": [dict(r.row(), error=r.error) for r in table.rows],
        "b_0": table.b_0,
        "tolerance": table.tolerance,
        "above_b0": table.above_b0,
        "non_increasing": table.non_increasing,
        "final_gap": table.final_gap,
    })
    paths = {}
    for i, r in enumerate(table.rows):
        if r.result is not None:
            save_path(r.result.path, w.path(f"path_eps{i}.txt"))
            paths[f"eps={r.eps:g}"] = r.result.path
    if cfg.raw["figures"]:
        from . import figures

        figures.plot_sweep(table, w.path("sweep.png"))
        if paths:
            figures.plot_profiles(paths, w.path("sweep_paths.png"), title=cfg.coef.name)
    ok = all(r.converged for r in table.rows)
    print(f"sweep: {len(rows)} entries, final gap {table.final_gap:.3e}, "
          f"above_b0={table.above_b0} non_increasing={table.non_increasing}")
    return EXIT_OK if ok else EXIT_NONCONVERGED


def _cmd_levels(cfg: RunConfig, w: _Writer):
    lv = cfg.raw["levels"]
    table = estimate_levels(cfg.pot, cfg.coef, cfg.raw["eps"], cfg.grid, cfg.solver,
                            taus=tuple(lv["taus"]), bp_extension=lv["bp_extension"],
                            trend_eps=lv["trend_eps"])
    header = ["level", "eps", "J", "grad_dual", "residual_inf", "converged", "coefficient", "T", "N"]
    rows = [e.row() for e in table.levels.values()]
    w.text("levels.csv", _csv_text(header, rows))
    w.json("levels.json", {
        "levels": rows,
        "lambda_tau": [{"tau": t, "value": v} for t, v in table.lambda_tau.items()],
        "flags": table.flags,
        "tolerance": table.tolerance,
        "notes": table.notes,
    })
    for name, est in table.levels.items():
        save_path(est.result.path, w.path(f"path_{name}.txt"))
    if cfg.raw["figures"]:
        from . import figures

        figures.plot_levels(table, w.path("levels.png"))
        figures.plot_profiles({k: e.result.path for k, e in table.levels.items() if k != "b_p_wide"},
                              w.path("levels_paths.png"), title=cfg.coef.name)
    print("levels: " + ", ".join(f"{k}={e.value:.10g}" for k, e in table.levels.items()))
    return EXIT_OK if table.converged else EXIT_NONCONVERGED


def _cmd_verify(cfg: RunConfig, w: _Writer):
    eps = cfg.raw["eps"]
    ver = cfg.raw["verify"]
    if ver["path_file"] is not None:
        try:
            path = load_path(_file(cfg.base_dir, ver["path_file"], "verify.path_file"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        report = action_report(path, cfg.pot, cfg.coef, eps, cfg.solver.rule)
        converged = report.grad_dual <= cfg.solver.tol_grad_dual
        res = MinimizeResult(path, report, 0, converged, True, "loaded")
    else:
        res = minimize(_seed(cfg), cfg.pot, cfg.coef, eps, cfg.solver)
    thm = verify_solution(res, cfg.pot, cfg.coef, eps, c_res=ver["c_res"], tail_tol=ver["tail_tol"])
    _write_result(w, res, "path")
    w.json("theorem_report.json", thm.to_dict())
    if cfg.raw["figures"]:
        from . import figures

        figures.plot_profiles({cfg.coef.name: res.path}, w.path("path.png"))
    print("verify: " + " ".join(f"{k}={'pass' if v else 'FAIL'}" for k, v in thm.checks.items()))
    return EXIT_OK if (res.converged and thm.passed) else EXIT_NONCONVERGED


def _cmd_oracle_compare(cfg: RunConfig, w: _Writer):
    a = float(cfg.coef.eval(0.0))
    orc = autonomous_oracle(cfg.pot, a, t_max=cfg.grid.T, step=cfg.raw["oracle"]["step"])
    res = minimize(_seed(cfg), cfg.pot, cfg.coef, 1.0, cfg.solver)
    ox = orc.profile(cfg.grid.times)
    summary = {
        "a_const": a,
        "level_quadrature": orc.level,
        "J": res.report.value,
        "level_gap": abs(res.report.value - orc.level),
        "profile_sup_diff": float(np.max(np.abs(res.path.x - ox))),
        "oracle_equipartition_residual": equipartition_residual(orc.t, orc.x, cfg.pot, a),
        "grad_dual": res.report.grad_dual,
        "converged": res.converged,
    }
    if isinstance(cfg.pot.base, QuarticPotential):
        summary["oracle_vs_closed_form"] = float(np.max(np.abs(orc.x - tanh_exact(a)(orc.t))))
        summary["closed_form_sup_diff"] = float(np.max(np.abs(res.path.x - tanh_exact(a)(cfg.grid.times))))
    _write_result(w, res, "path")
    save_profile(orc.t, orc.x, w.path("oracle_profile.txt"))
    w.json("oracle_compare.json", summary)
    if cfg.raw["figures"]:
        from . import figures

        figures.plot_oracle_compare(res.path, ox, w.path("oracle_compare.png"))
    print(f"oracle-compare: |J - B(a)| = {summary['level_gap']:.3e}, "
          f"sup |x - oracle| = {summary['profile_sup_diff']:.3e}")
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def _cmd_classify(cfg: RunConfig, w: _Writer):
    cl = cfg.raw["classify"]
    rep = verify_class(cfg.coef, tuple(cl["window"]), cl["samples"],
                       bounds=tuple(cl["bounds"]) if cl["bounds"] else None, tail_tol=cl["tail_tol"])
    w.json("class_report.json", rep.to_dict())
    print(f"classify: {rep.name} ({rep.class_tag}) satisfies {', '.join(rep.passed) or 'none'}")
    return EXIT_OK


_DISPATCH = {
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "levels": _cmd_levels,
    "verify": _cmd_verify,
    "oracle_compare": _cmd_oracle_compare,
    "classify": _cmd_classify,
}


def run(cfg: RunConfig) -> int:
    """Execute one command and write its artifacts plus ``manifest.json``."""
    w = _Writer(cfg.out)
    try:
        status = _DISPATCH[cfg.command](cfg, w)
        produced = sorted(w.files)
        w.json("manifest.json", {
            "tool": "heteroclinic",
            "version": __version__,
            "command": cfg.command,
            "exit_status": status,
            "config": cfg.raw,
            "outputs": produced,
        })
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="heteroclinic", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=["solve", "sweep", "levels", "verify", "oracle-compare", "classify"])
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory (overrides the config)")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.command, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
