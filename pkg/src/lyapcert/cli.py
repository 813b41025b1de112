"""Batch front end: read an experiment config, run it, write a CSV.

Config files are INI style::

    [run]
    mode = sweep              ; verify-independent | bisect-rho | verify-dependent | sweep
    seed = 0
    tol = 1e-9                ; solver tolerance, overridden by --tol
    validate = 0              ; re-check certificates on this many seeded instances

    [problem]
    component1 = MaximallyMonotone()
    component2 = StronglyMonotone(mu=1), LipschitzOperator(L=2)

    [algorithm]
    name = douglas_rachford
    gamma = 1
    lambda = 2
    ; I_func = 1, 2           ; optional override of the function components

    [analysis]
    params = linear_distance  ; iteration-independent constructor
    args = i=1, j=1
    h = 0
    alpha = 0
    rho = 1
    remove_C4 = true
    bisect_tol = 1e-5
    ; iteration-dependent runs use K, initial and final instead:
    ; K = 10
    ; initial = distance(k=0, i=1, j=2)
    ; final = funcval(k=K, j=2)

    [sweep]
    task = bisect-rho
    axis1 = algorithm.gamma: linspace(0.05, 5, 100)

    [output]
    reference = ref.csv       ; optional; extra columns joined on the axis values

Axes are combined as a grid, first axis outermost. An axis path is
``algorithm.<param>``, ``analysis.<key>`` (rho, h, alpha, K, lower, upper,
bisect_tol or a constructor argument) or ``problem.componentN.<param>``.
The symbol ``K`` may be used as an endpoint argument.
"""

from __future__ import annotations

import argparse
import configparser
import copy
import csv
import datetime
import io
import itertools
import logging
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import lyap_dependent as dep
from . import lyap_independent as ind
from .algorithms import make_algorithm
from .interpolation import _REQUIRED, make_class
from .problem import make_problem
from .sdp import DEFAULT_TOL, NUMERICAL_FAILURE, NumericalFailure

log = logging.getLogger(__name__)

MODES = ("verify-independent", "bisect-rho", "verify-dependent")
INDEPENDENT_PARAMS = {
    "linear_distance": ind.params_linear_distance,
    "linear_funcval": ind.params_linear_funcval,
    "sublinear_optimality": ind.params_sublinear_optimality,
    "sublinear_fpr": ind.params_sublinear_fpr,
    "sublinear_funcval": ind.params_sublinear_funcval,
}
DEPENDENT_PARAMS = {
    "distance": dep.dep_params_distance,
    "funcval": dep.dep_params_funcval,
    "fpr": dep.dep_params_fpr,
    "optimality": dep.dep_params_optimality,
}
FLAGS = ("Q_equals_P", "S_equals_T", "q_equals_p", "s_equals_t", "remove_C2", "remove_C3", "remove_C4")
NUMERIC_ANALYSIS = ("rho", "h", "alpha", "K", "lower", "upper", "bisect_tol")
DEFAULT_BISECT_TOL = 1e-5


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


# --- parsing ----------------------------------------------------------------

_CALL = re.compile(r"\s*([A-Za-z_]\w*)\s*\(([^()]*)\)\s*")


def _number(text: str, allow_symbol=False):
    text = text.strip()
    if allow_symbol and text == "K":
        return "K"
    if text.lower() in ("inf", "+inf"):
        return math.inf
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None
    return int(value) if value.is_integer() and "." not in text and "e" not in text.lower() else value


def _parse_args(body: str, allow_symbol=False):
    pos, kw = [], {}
    for part in filter(None, (p.strip() for p in body.split(","))):
        if "=" in part:
            k, v = part.split("=", 1)
            kw[k.strip()] = _number(v, allow_symbol)
        else:
            if kw:
                raise ConfigError(f"positional argument after keyword in {body!r}")
            pos.append(_number(part, allow_symbol))
    return pos, kw


def parse_calls(text: str, allow_symbol=False):
    """'A(1), B(x=2)' -> [('A', [1], {}), ('B', [], {'x': 2})]."""
    out, rest = [], text.strip()
    while rest:
        m = _CALL.match(rest)
        if not m:
            raise ConfigError(f"cannot parse {rest!r}; expected Name(args)")
        out.append((m.group(1), *_parse_args(m.group(2), allow_symbol)))
        rest = rest[m.end():].lstrip()
        if rest.startswith(","):
            rest = rest[1:].lstrip()
        elif rest:
            raise ConfigError(f"expected ',' before {rest!r}")
    return out


def _class_params(tag, pos, kw):
    names = _REQUIRED.get(tag)
    if names is None:
        raise ConfigError(f"unknown class {tag!r}")
    if len(pos) > len(names):
        raise ConfigError(f"{tag} takes {len(names)} parameters")
    params = dict(zip(names, pos))
    params.update(kw)
    return params


def parse_axis(text: str):
    """'path: linspace(a, b, n)' | 'path: range(a, b[, step])' | 'path: list(v, ...)'."""
    if ":" not in text:
        raise ConfigError(f"axis {text!r} needs 'path: values'")
    path, spec = (s.strip() for s in text.split(":", 1))
    calls = parse_calls(spec)
    if len(calls) != 1:
        raise ConfigError(f"axis {path}: expected one of linspace(), range(), list()")
    kind, pos, kw = calls[0]
    if kw:
        raise ConfigError(f"axis {path}: keyword arguments are not supported")
    if kind == "linspace":
        if len(pos) != 3 or int(pos[2]) != pos[2] or pos[2] < 1:
            raise ConfigError(f"axis {path}: linspace(start, stop, count)")
        values = list(np.linspace(pos[0], pos[1], int(pos[2])))
    elif kind == "range":
        if not 2 <= len(pos) <= 3 or not all(isinstance(p, int) for p in pos):
            raise ConfigError(f"axis {path}: range(start, stop[, step]) with integers")
        values = list(range(*pos))
    elif kind == "list":
        values = list(pos)
    else:
        raise ConfigError(f"axis {path}: unknown range kind {kind!r}")
    if not values or not all(math.isfinite(v) for v in values):
        raise ConfigError(f"axis {path}: values must be finite and non-empty")
    return path, values


def _line_of(text, section, key):
    current = None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return n
    return None


def load_config(text: str) -> dict:
    """Parse config text into a plain dict (picklable, no live objects)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}: expected a [section] header, got {exc.line.strip()!r}") from None
    except configparser.ParsingError as exc:
        where = ", ".join(f"line {n}: {line}" for n, line in exc.errors)
        raise ConfigError(f"cannot parse {where}") from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate key {exc.option!r} in [{exc.section}]") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate section [{exc.section}]") from None
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None

    def where(section, key):
        n = _line_of(text, section, key)
        return f"[{section}] {key}" + (f" (line {n})" if n else "")

    def get(section, key, conv=str, default=None, required=False):
        if not cp.has_option(section, key):
            if required:
                raise ConfigError(f"missing {where(section, key)}")
            return default
        raw = cp.get(section, key)
        try:
            return conv(raw)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{where(section, key)}: {exc}") from None

    def boolean(raw):
        v = raw.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {raw!r}")

    cfg = {}
    mode = get("run", "mode", required=True).strip()
    if mode not in MODES + ("sweep",):
        raise ConfigError(f"{where('run', 'mode')}: unknown mode {mode!r}")
    cfg["mode"] = mode
    cfg["seed"] = get("run", "seed", lambda s: int(s), 0)
    cfg["tol"] = get("run", "tol", float, DEFAULT_TOL)
    cfg["validate"] = get("run", "validate", lambda s: int(s), 0)

    if not cp.has_section("problem"):
        raise ConfigError("missing [problem] section")
    comps = {}
    for key, raw in cp.items("problem"):
        m = re.fullmatch(r"component(\d+)", key)
        if not m:
            raise ConfigError(f"{where('problem', key)}: expected keys component1, component2, ...")
        try:
            comps[int(m.group(1))] = [(tag, _class_params(tag, pos, kw)) for tag, pos, kw in parse_calls(raw)]
        except ConfigError as exc:
            raise ConfigError(f"{where('problem', key)}: {exc}") from None
    if sorted(comps) != list(range(1, len(comps) + 1)):
        raise ConfigError("[problem] components must be numbered 1..m without gaps")
    cfg["problem"] = [comps[i] for i in sorted(comps)]

    name = get("algorithm", "name", required=True).strip()
    aparams, ifunc = {}, None
    for key, raw in cp.items("algorithm"):
        if key == "name":
            continue
        if key == "I_func":
            ifunc = get("algorithm", key, lambda s: tuple(int(t) for t in s.split(",") if t.strip()))
        else:
            aparams[key] = get("algorithm", key, _number)
    cfg["algorithm"] = {"name": name, "params": aparams, "I_func": ifunc}

    task = mode if mode != "sweep" else get("sweep", "task", str.strip, required=True)
    if task not in MODES:
        raise ConfigError(f"{where('sweep', 'task')}: unknown task {task!r}")
    cfg["task"] = task
    an = {}
    if task == "verify-dependent":
        an["K"] = get("analysis", "K", lambda s: int(s), required=True)
        for key in ("initial", "final"):
            calls = get("analysis", key, lambda s: parse_calls(s, allow_symbol=True), required=True)
            if len(calls) != 1 or calls[0][0] not in DEPENDENT_PARAMS or calls[0][1]:
                raise ConfigError(f"{where('analysis', key)}: expected one of "
                                  f"{sorted(DEPENDENT_PARAMS)} with keyword arguments")
            an[key] = (calls[0][0], calls[0][2])
    else:
        cname = get("analysis", "params", str.strip, required=True)
        if cname not in INDEPENDENT_PARAMS:
            raise ConfigError(f"{where('analysis', 'params')}: unknown constructor {cname!r}; "
                              f"choose from {sorted(INDEPENDENT_PARAMS)}")
        an["params"] = cname
        an["args"] = get("analysis", "args", lambda s: _parse_args(s)[1], {})
        an["h"] = get("analysis", "h", lambda s: int(s), 0)
        an["alpha"] = get("analysis", "alpha", lambda s: int(s), 0)
        an["rho"] = get("analysis", "rho", float, 1.0)
        an["lower"] = get("analysis", "lower", float, 0.0)
        an["upper"] = get("analysis", "upper", float, 1.0)
        an["bisect_tol"] = get("analysis", "bisect_tol", float, DEFAULT_BISECT_TOL)
        for flag in FLAGS:
            default = flag == "remove_C4"
            an[flag] = get("analysis", flag, boolean, default)
    if cp.has_section("analysis"):
        known = set(an) | {"args", "params", "initial", "final"} | set(FLAGS)
        for key in cp.options("analysis"):
            if key not in known:
                raise ConfigError(f"{where('analysis', key)}: unknown key for task {task}")
    cfg["analysis"] = an

    axes = []
    if mode == "sweep":
        for key, raw in cp.items("sweep"):
            if key == "task":
                continue
            if not re.fullmatch(r"axis\d+", key):
                raise ConfigError(f"{where('sweep', key)}: expected keys axis1, axis2, ...")
            try:
                path, values = parse_axis(raw)
                _apply(cfg, path, values[0])
            except ConfigError as exc:
                raise ConfigError(f"{where('sweep', key)}: {exc}") from None
            axes.append((int(key[4:]), path, values))
    cfg["axes"] = [(p, v) for _, p, v in sorted(axes)]
    cfg["reference"] = get("output", "reference", str.strip, None)
    return cfg


def _like(old, value):
    """Keep integer parameters integral when an axis sets them."""
    if isinstance(old, int) and float(value).is_integer():
        return int(value)
    return value


def _apply(cfg: dict, path: str, value):
    """Set one swept parameter in place; raises on unknown paths."""
    parts = path.split(".")
    if parts[0] == "algorithm" and len(parts) == 2:
        if parts[1] not in cfg["algorithm"]["params"]:
            raise ConfigError(f"axis {path}: algorithm has no parameter {parts[1]!r}")
        old = cfg["algorithm"]["params"][parts[1]]
        cfg["algorithm"]["params"][parts[1]] = _like(old, value)
        return
    if parts[0] == "analysis" and len(parts) == 2:
        an = cfg["analysis"]
        if parts[1] in an and parts[1] in NUMERIC_ANALYSIS:
            an[parts[1]] = int(value) if parts[1] in ("h", "alpha", "K") else value
            return
        if parts[1] in an.get("args", {}):
            an["args"][parts[1]] = _like(an["args"][parts[1]], value)
            return
        raise ConfigError(f"axis {path}: no numeric analysis parameter {parts[1]!r}")
    if parts[0] == "problem" and len(parts) == 3:
        m = re.fullmatch(r"component(\d+)", parts[1])
        idx = int(m.group(1)) - 1 if m else -1
        if not 0 <= idx < len(cfg["problem"]):
            raise ConfigError(f"axis {path}: no such component")
        hits = [p for _, p in cfg["problem"][idx] if parts[2] in p]
        if not hits:
            raise ConfigError(f"axis {path}: component has no parameter {parts[2]!r}")
        for p in hits:
            p[parts[2]] = float(value)
        return
    raise ConfigError(f"axis {path}: unknown parameter path")


# --- building and running ----------------------------------------------------

def build(cfg: dict):
    """Return (problem, algorithm, analysis object) for one point."""
    try:
        problem = make_problem([[make_class(tag, **p) for tag, p in comp] for comp in cfg["problem"]])
        a = cfg["algorithm"]
        alg = make_algorithm(a["name"], a["params"], a["I_func"])
        an = cfg["analysis"]
        if cfg["task"] == "verify-dependent":
            K = an["K"]

            def endpoint(spec):
                name, kw = spec
                kw = {k: (K if v == "K" else v) for k, v in kw.items()}
                return DEPENDENT_PARAMS[name](alg, **kw)

            par = dep.make_dep_params(alg, K, endpoint(an["initial"]), endpoint(an["final"]))
        else:
            par = INDEPENDENT_PARAMS[an["params"]](alg, h=an["h"], alpha=an["alpha"], **an["args"])
            par = par.with_(rho=an["rho"], **{f: an[f] for f in FLAGS})
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return problem, alg, par


def _validate(cfg, problem, alg, par, cert):
    from . import oracle

    worst = -np.inf
    steps = par.K if cfg["task"] == "verify-dependent" else par.h + par.alpha + 4
    for r in range(cfg["validate"]):
        seed = cfg["seed"] * 100003 + r
        inst = oracle.sample_instance(problem, 3, seed)
        x0 = np.random.default_rng(seed).standard_normal((alg.n, 3))
        traj = oracle.run_trajectory(inst, alg, x0, steps)
        if cfg["task"] == "verify-dependent":
            worst = max(worst, oracle.dependent_violations(cert, alg, par.K, traj))
        else:
            worst = max(worst, max(oracle.independent_violations(cert, alg, par, traj).values()))
    return worst


def run_point(cfg: dict) -> tuple:
    """Return (result, status, max_violation or None) for one point."""
    problem, alg, par = build(cfg)
    task, tol = cfg["task"], cfg["tol"]
    cert = None
    if task == "verify-independent":
        v = ind.verify_independent(problem, alg, par, tol=tol)
        result, status = v.feasible, v.status
        cert = v.certificate if v.feasible else None
    elif task == "bisect-rho":
        an = cfg["analysis"]
        try:
            r = ind.bisect_rho(problem, alg, par, an["lower"], an["upper"], an["bisect_tol"], tol)
        except NumericalFailure:
            return None, NUMERICAL_FAILURE, None
        result = r.rho
        status = r.verdict.status if r.verdict is not None else NUMERICAL_FAILURE
        if r.rho is not None:
            cert = r.verdict.certificate
            par = par.with_(rho=r.rho)
    else:
        v, c = dep.verify_dependent(problem, alg, par, tol=tol)
        result, status = c, v.status
        cert = v.certificate if v.feasible else None
    worst = None
    if cfg["validate"] and cert is not None:
        worst = _validate(cfg, problem, alg, par, cert)
    return result, status, worst


def expand(cfg: dict) -> list:
    """One config per grid point, in row-major order of the axes."""
    if not cfg["axes"]:
        return [((), cfg)]
    out = []
    paths = [p for p, _ in cfg["axes"]]
    for values in itertools.product(*(v for _, v in cfg["axes"])):
        point = copy.deepcopy(cfg)
        for path, value in zip(paths, values):
            _apply(point, path, value)
        out.append((values, point))
    return out


def _read_reference(path, paths):
    with open(path, newline="") as fh:
        rows = list(csv.reader(row for row in fh if not row.startswith("#")))
    if not rows:
        raise ConfigError(f"reference {path}: empty file")
    header = rows[0]
    missing = [p for p in paths if p not in header]
    if missing:
        raise ConfigError(f"reference {path}: missing columns {missing}")
    keys = [header.index(p) for p in paths]
    extra = [i for i in range(len(header)) if i not in keys]
    table = {}
    for row in rows[1:]:
        table[tuple(fmt(float(row[i])) for i in keys)] = [row[i] for i in extra]
    return [header[i] for i in extra], table


def result_column(task):
    return {"verify-independent": "feasible", "bisect-rho": "rho", "verify-dependent": "c"}[task]


def run(cfg: dict, jobs: int = 1, timestamp: bool = True) -> tuple:
    """Run every point; return (csv text, exit code)."""
    points = expand(cfg)
    paths = [p for p, _ in cfg["axes"]]
    for values, point in points:  # fail fast on bad points before any solve
        try:
            build(point)
        except ConfigError as exc:
            at = ", ".join(f"{p}={fmt(v)}" for p, v in zip(paths, values))
            raise ConfigError(f"{exc}" + (f" (sweep point {at})" if at else "")) from None
    ref_cols, ref = [], {}
    if cfg["reference"]:
        ref_cols, ref = _read_reference(cfg["reference"], paths)
    cfgs = [p for _, p in points]
    if jobs > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_point, cfgs))
    else:
        results = [run_point(c) for c in cfgs]

    buf = io.StringIO()
    if timestamp:
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
        buf.write(f"# generated {stamp}\n")
    writer = csv.writer(buf, lineterminator="\n")
    header = paths + [result_column(cfg["task"]), "status"]
    if cfg["validate"]:
        header.append("max_violation")
    writer.writerow(header + ref_cols)
    code = 0
    for (values, _), (result, status, worst) in zip(points, results):
        row = [fmt(v) for v in values] + [fmt(result), status]
        if cfg["validate"]:
            row.append(fmt(worst))
        row += ref.get(tuple(fmt(v) for v in values), [""] * len(ref_cols))
        writer.writerow(row)
        if status == NUMERICAL_FAILURE:
            code = 2
    return buf.getvalue(), code


def _default_jobs():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover
        return os.cpu_count() or 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="lyapcert", description="Run Lyapunov certificate experiments.")
    ap.add_argument("--config", required=True, help="experiment config (INI)")
    ap.add_argument("--out", help="CSV output path (default: stdout)")
    ap.add_argument("--jobs", type=int, default=_default_jobs(), help="worker processes for sweeps")
    ap.add_argument("--tol", type=float, help="solver tolerance (overrides the config)")
    ap.add_argument("--no-timestamp", action="store_true", help="omit the timestamp comment line")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config) as fh:
            cfg = load_config(fh.read())
        if args.tol is not None:
            if not args.tol > 0:
                raise ConfigError("--tol must be positive")
            cfg["tol"] = args.tol
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        text, code = run(cfg, jobs=args.jobs, timestamp=not args.no_timestamp)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
