"""Batch front-end.

    cefoliator <task> --config run.json [--out DIR] [--threads N]
    cefoliator plot ARTIFACT.csv [--out DIR]

Exit codes: 0 success, 2 invalid configuration, 3 solver failure (the partial
trace is still written), 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import adm
from .errors import ConfigError, GridParseError, SolverError
from .initialdata import (
    BowenYorkData,
    ConstantLapse,
    FlatData,
    PerturbedData,
    SchwarzschildData,
    SyntheticSpacetime,
    constraint_residual,
    decay_audit,
    load_grid_data,
    static_schwarzschild_spacetime,
)
from .solver import (
    TRACE_COLUMNS,
    ContinuationTrace,
    SolveConfig,
    continue_weight,
    foliation_sweep,
    initial_guess,
    time_lapse,
    uniqueness_probe,
)
from .sphere import synthesize
from .stability import spectrum, spectrum_csv_rows, verify_invertibility_estimates, weighted_pseudo_stability
from .surface import RadialSurface, compute_geometry, surface_dump_bytes, umbilicity_report

log = logging.getLogger("cefoliator")

SCHEMA = "cefoliator/1"
TASKS = ("solve", "foliate", "spectrum", "audit", "adm", "evolve", "unique")
FAMILIES = {
    "flat": (FlatData, ()),
    "schwarzschild": (SchwarzschildData, ("mass",)),
    "bowen_york": (BowenYorkData, ("mass", "momentum")),
    "perturbed": (PerturbedData, ("mass", "amplitude", "eps")),
}
OPTIONAL_FAMILY_KEYS = {"perturbed": ("eps",)}
TOP_KEYS = {"schema", "data", "task", "numerics", "params", "output"}
PARAM_KEYS = {
    "solve": ({"sigma"}, {"b", "guess_radius"}),
    "foliate": ({"sign"}, {"sigma_list"}),
    "spectrum": ({"sigma"}, {"b", "k"}),
    "audit": ({"radii"}, set()),
    "adm": ({"radii"}, {"lmax"}),
    "evolve": ({"sign"}, {"sigma_list", "lapse"}),
    "unique": ({"sigma", "sign"}, {"guesses", "cz", "c1"}),
}

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    task: str
    data: dict
    numerics: SolveConfig
    params: dict = field(default_factory=dict)
    output: str = "out"

    def provider(self):
        d = self.data
        if "grid" in d:
            return load_grid_data(d["grid"])
        cls, names = FAMILIES[d["family"]]
        args = {}
        for nm in names:
            if nm in d:
                args[nm] = d[nm]
        try:
            return cls(**args)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"data: {exc}") from exc


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _number(v, name):
    _require(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v), f"{name} must be a finite number")
    return float(v)


def _number_list(v, name, min_len=1):
    _require(isinstance(v, list) and len(v) >= min_len, f"{name} must be a list of at least {min_len} numbers")
    return [_number(x, name) for x in v]


def parse_config(obj, task=None) -> RunConfig:
    """Validate a decoded JSON document.  Unknown keys are rejected."""
    _require(isinstance(obj, dict), "config must be a JSON object")
    unknown = set(obj) - TOP_KEYS
    _require(not unknown, f"unknown keys: {sorted(unknown)}")
    _require(obj.get("schema") == SCHEMA, f'schema must be "{SCHEMA}"')
    file_task = obj.get("task")
    if task is not None and file_task is not None:
        _require(task == file_task, f"task mismatch: command line {task!r}, config {file_task!r}")
    task = task or file_task
    _require(task in TASKS, f"task must be one of {', '.join(TASKS)}")

    data = obj.get("data")
    _require(isinstance(data, dict), "data section is required")
    if "grid" in data:
        _require(set(data) == {"grid"} and isinstance(data["grid"], str), "data: a grid source takes only the 'grid' path")
    else:
        fam = data.get("family")
        _require(fam in FAMILIES, f"data.family must be one of {', '.join(FAMILIES)} (or give data.grid)")
        names = FAMILIES[fam][1]
        unknown = set(data) - {"family", *names}
        _require(not unknown, f"data: unknown keys {sorted(unknown)}")
        required = set(names) - set(OPTIONAL_FAMILY_KEYS.get(fam, ()))
        missing = required - set(data)
        _require(not missing, f"data: missing {sorted(missing)}")
        for nm in names:
            if nm not in data:
                continue
            if nm == "momentum":
                _require(len(_number_list(data[nm], "momentum", 3)) == 3, "momentum must have 3 entries")
            else:
                _number(data[nm], nm)

    numerics = obj.get("numerics", {})
    _require(isinstance(numerics, dict), "numerics must be an object")
    allowed = set(SolveConfig.field_names())
    unknown = set(numerics) - allowed
    _require(not unknown, f"numerics: unknown keys {sorted(unknown)}")
    try:
        cfg = SolveConfig(**numerics)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"numerics: {exc}") from exc

    params = obj.get("params", {})
    _require(isinstance(params, dict), "params must be an object")
    req, opt = PARAM_KEYS[task]
    unknown = set(params) - req - opt
    _require(not unknown, f"params for {task}: unknown keys {sorted(unknown)}")
    missing = req - set(params)
    _require(not missing, f"params for {task}: missing {sorted(missing)}")
    if "sign" in params:
        _require(params["sign"] in (-1, 1), "sign must be +1 or -1")
    if "b" in params:
        _require(-1 <= _number(params["b"], "b") <= 1, "b must lie in [-1, 1]")
    for key in ("sigma", "guess_radius", "cz", "c1"):
        if key in params:
            _require(_number(params[key], key) > 0, f"{key} must be positive")
    for key in ("sigma_list", "radii"):
        if key in params:
            vals = _number_list(params[key], key, 3 if key == "radii" else 1)
            _require(all(b > a for a, b in zip(vals, vals[1:])), f"{key} must be strictly ascending")
    if task in ("foliate", "evolve"):
        _require(bool(params.get("sigma_list") or cfg.sigma_list), f"{task} needs params.sigma_list or numerics.sigma_list")
    if "k" in params:
        _require(isinstance(params["k"], int) and params["k"] > 0, "k must be a positive integer")
    if "lmax" in params:
        _require(isinstance(params["lmax"], int) and params["lmax"] >= 2, "lmax must be an integer >= 2")
    if "lapse" in params:
        lp = params["lapse"]
        _require(isinstance(lp, dict) and lp.get("kind") in ("constant", "static_schwarzschild", "grid"), "lapse.kind must be constant, static_schwarzschild or grid")
        _require(set(lp) <= {"kind", "value"}, "lapse: unknown keys")
        if lp["kind"] == "constant":
            _require(_number(lp.get("value", 1.0), "lapse.value") > 0, "lapse.value must be positive")
        if lp["kind"] == "static_schwarzschild":
            _require(data.get("family") in ("schwarzschild", "flat"), "static_schwarzschild lapse needs schwarzschild or flat data")
        if lp["kind"] == "grid":
            _require("grid" in data, "grid lapse needs grid data")
    if "guesses" in params:
        gs = params["guesses"]
        _require(isinstance(gs, list) and gs, "guesses must be a non-empty list")
        for g in gs:
            _require(isinstance(g, dict) and set(g) <= {"radius_factor", "center", "perturbation", "seed"}, "guess entries take radius_factor, center, perturbation, seed")
            if "center" in g:
                _require(len(_number_list(g["center"], "center", 3)) == 3, "center must have 3 entries")

    output = obj.get("output", "out")
    _require(isinstance(output, str) and output, "output must be a directory path")
    return RunConfig(task, data, cfg, params, output)


def load_config(path, task=None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config is not UTF-8: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(obj, task)


# ---------------------------------------------------------------------------
# emission


def fmt(x):
    """17 significant digits; integers and strings pass through."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def csv_bytes(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue().encode("utf-8")


def _json_value(v, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(v[k], indent, level + 1)}" for k in sorted(v)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        seq = list(v)
        if not seq:
            return "[]"
        if any(isinstance(x, dict) for x in seq):
            items = [pad + _json_value(x, indent, level + 1) for x in seq]
            return "[\n" + ",\n".join(items) + "\n" + end + "]"
        return "[" + ", ".join(_json_value(x, indent, level + 1) for x in seq) + "]"
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if not math.isfinite(f):
            return json.dumps(str(f))
        return "%.17g" % f
    return json.dumps(str(v))


def json_bytes(obj):
    return (_json_value(obj, 2, 0) + "\n").encode("utf-8")


class Output:
    """Atomic writes into one directory plus a checksum manifest."""

    def __init__(self, directory):
        self.dir = Path(directory)
        self.files = {}

    def write(self, name, payload: bytes):
        self.dir.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=".tmp-", suffix="-" + name)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, self.dir / name)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.files[name] = hashlib.sha256(payload).hexdigest()

    def finish(self, status, message=""):
        entries = [{"file": k, "sha256": self.files[k]} for k in sorted(self.files)]
        entries.append({"file": "manifest.json", "sha256": None})
        doc = {"schema": SCHEMA, "status": status, "message": message, "artifacts": entries}
        payload = json_bytes(doc)
        self.dir.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=".tmp-manifest-")
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, self.dir / "manifest.json")


def trace_bytes(trace: ContinuationTrace):
    return csv_bytes(TRACE_COLUMNS, trace.rows())


# ---------------------------------------------------------------------------
# tasks


def _sigmas(cfg: RunConfig):
    return cfg.params.get("sigma_list") or list(cfg.numerics.sigma_list)


def _task_solve(rc, p, out):
    sigma = float(rc.params["sigma"])
    b = float(rc.params.get("b", 0.0))
    guess = None
    if "guess_radius" in rc.params:
        guess = RadialSurface.round(rc.numerics.grid(), float(rc.params["guess_radius"]))
    s, trace = continue_weight(p, sigma, b, rc.numerics, guess)
    out.write("surface.cesurf", surface_dump_bytes(s, sigma, b))
    out.write("trace.csv", trace_bytes(trace))
    geo = compute_geometry(s, p)
    theta = geo.H + b * geo.trK
    sup_aring, w12 = umbilicity_report(geo)
    out.write(
        "summary.json",
        json_bytes(
            {
                "sigma": sigma,
                "b": b,
                "residual": float(np.abs(theta + 2.0 / sigma).max()),
                "hawking_mass": geo.hawking_mass,
                "area_radius": geo.area_radius,
                "center_z": list(geo.center_z),
                "sup_aring": sup_aring,
                "aring_w12": w12,
            }
        ),
    )


def _task_foliate(rc, p, out):
    sign = int(rc.params["sign"])
    res = foliation_sweep(p, sign, _sigmas(rc), rc.numerics)
    rows = []
    for i, leaf in enumerate(res.leaves):
        out.write(f"leaf_{i:03d}.cesurf", surface_dump_bytes(leaf.surface, leaf.sigma, float(sign)))
        rows.append((leaf.sigma, leaf.min_lapse, leaf.max_lapse, leaf.min_lapse > 0))
    out.write("trace.csv", trace_bytes(res.trace))
    out.write("lapse.csv", csv_bytes(("sigma", "min_u", "max_u", "positive"), rows))
    out.write("summary.json", json_bytes({"sign": sign, "nested": res.nested, "lapse_positive": res.lapse_positive}))


def _task_spectrum(rc, p, out):
    sigma = float(rc.params["sigma"])
    b = float(rc.params.get("b", 0.0))
    k = int(rc.params.get("k", 6))
    s, trace = continue_weight(p, sigma, b, rc.numerics)
    geo = compute_geometry(s, p)
    summ = spectrum(weighted_pseudo_stability(geo, b), k)
    out.write("surface.cesurf", surface_dump_bytes(s, sigma, b))
    out.write("trace.csv", trace_bytes(trace))
    out.write("spectrum.csv", csv_bytes(("index", "re", "im", "translational_flag"), spectrum_csv_rows(summ)))
    rep = verify_invertibility_estimates(geo, b)
    out.write(
        "invertibility.json",
        json_bytes(
            {
                "sigma": rep.sigma,
                "hawking_mass": rep.hawking_mass,
                "translational_rank": summ.translational_rank,
                "reference_eigenvalue": rep.reference_eigenvalue,
                "D": rep.D_measured,
                "complement_lower": rep.complement_lower,
                "complement_margin": rep.complement_margin,
                "global_lower": rep.global_lower,
                "global_bound": rep.global_bound,
                "global_margin": rep.global_margin,
                "mass_degenerate": rep.mass_degenerate,
                "smallest": [[float(v.real), float(v.imag)] for v in summ.smallest],
            }
        ),
    )


def _task_audit(rc, p, out):
    radii = [float(r) for r in rc.params["radii"]]
    rep = decay_audit(p, radii)
    names = sorted(rep.columns)
    rows = []
    for i, r in enumerate(rep.radii):
        x = np.array([[r, 0.0, 0.0]])
        rho, J = constraint_residual(p, x)
        rows.append((r, *[rep.columns[n][i] for n in names], float(np.abs(rho).max()), float(np.abs(J).max())))
    out.write("audit.csv", csv_bytes(("radius", *names, "rho", "J"), rows))
    out.write("summary.json", json_bytes({"eps": rep.eps, "bounded": {n: bool(rep.bounded[n]) for n in sorted(rep.bounded)}}))


def _task_adm(rc, p, out):
    radii = [float(r) for r in rc.params["radii"]]
    lmax = int(rc.params.get("lmax", adm.DEFAULT_LMAX))
    series = [
        adm.adm_mass_flux(p, radii, lmax),
        adm.adm_mass_curvature(p, radii, lmax),
        adm.hawking_limit(p, radii, lmax),
        adm.adm_linear_momentum(p, radii, lmax),
    ]
    mc = adm.momentum_limit_check(p, radii, lmax)
    sm = adm.smallness_integrals(p, radii, lmax)
    series += [mc.integral_series, adm.RadiusSeries("momentum_mismatch", radii, mc.relative_mismatch)]
    series += sm.series()
    out.write("adm.csv", csv_bytes(("radius", "quantity", "index", "value"), adm.report_rows(series)))
    out.write("summary.json", json_bytes({"momentum_convention_factor": mc.factor}))


def _spacetime(rc, p):
    lp = rc.params.get("lapse", {"kind": "constant", "value": 1.0})
    if lp["kind"] == "static_schwarzschild":
        return static_schwarzschild_spacetime(float(rc.data.get("mass", 0.0)))
    if lp["kind"] == "grid":
        return SyntheticSpacetime(p, p.lapse)
    return SyntheticSpacetime(p, ConstantLapse(float(lp.get("value", 1.0))))


def _task_evolve(rc, p, out):
    sign = int(rc.params["sign"])
    st = _spacetime(rc, p)
    res = foliation_sweep(p, sign, _sigmas(rc), rc.numerics)
    rows = []
    for i, leaf in enumerate(res.leaves):
        geo = compute_geometry(leaf.surface, p)
        tl = time_lapse(geo, st, sign)
        rows.append((leaf.sigma, tl.w1inf, float(np.abs(tl.u).max()), tl.norm_translational, tl.norm_perp))
        out.write(f"leaf_{i:03d}.cesurf", surface_dump_bytes(leaf.surface, leaf.sigma, float(sign)))
    out.write("trace.csv", trace_bytes(res.trace))
    out.write("evolve.csv", csv_bytes(("sigma", "w1inf", "sup_u", "norm_translational", "norm_perp"), rows))


def _guesses(rc, p):
    grid = rc.numerics.grid()
    sigma = float(rc.params["sigma"])
    base = initial_guess(p, sigma, grid)
    specs = rc.params.get("guesses") or [{"perturbation": 0.02, "seed": s} for s in (0, 1, 2)]
    out = []
    for g in specs:
        rho = base.rho * float(g.get("radius_factor", 1.0))
        amp = float(g.get("perturbation", 0.0))
        if amp:
            rng = np.random.default_rng(int(g.get("seed", 0)))
            c = np.zeros(grid.ncoef)
            c[1:16] = rng.normal(size=15)
            v = synthesize(c, grid)
            rho = rho * (1.0 + amp * v / np.abs(v).max())
        out.append(RadialSurface.from_values(grid, rho, tuple(g.get("center", (0.0, 0.0, 0.0)))))
    return out


def _task_unique(rc, p, out):
    sigma = float(rc.params["sigma"])
    sign = int(rc.params["sign"])
    rep = uniqueness_probe(
        p, sign, sigma, _guesses(rc, p), rc.numerics,
        cz=float(rc.params.get("cz", 0.1)), c1=float(rc.params.get("c1", 1.0)),
    )
    rows = [(i, ok, c.center_offset, c.willmore_excess) for i, (ok, c) in enumerate(zip(rep.admissible, rep.concentricity))]
    out.write("guesses.csv", csv_bytes(("guess", "admissible", "center_offset", "willmore_excess"), rows))
    n = len(rep.surfaces)
    pairs = [(i, j, rep.distances[i, j]) for i in range(n) for j in range(i + 1, n)]
    out.write("distances.csv", csv_bytes(("i", "j", "sup_distance"), pairs))
    for i, s in enumerate(rep.surfaces):
        out.write(f"surface_{i:03d}.cesurf", surface_dump_bytes(s, sigma, float(sign)))
    out.write("summary.json", json_bytes({"max_distance": rep.max_distance, "solved": n}))


TASK_FUNCS = {
    "solve": _task_solve,
    "foliate": _task_foliate,
    "spectrum": _task_spectrum,
    "audit": _task_audit,
    "adm": _task_adm,
    "evolve": _task_evolve,
    "unique": _task_unique,
}


def run(rc: RunConfig, out_dir=None) -> int:
    out = Output(out_dir or rc.output)
    try:
        p = rc.provider()
        TASK_FUNCS[rc.task](rc, p, out)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except SolverError as exc:
        log.error("solver failure: %s", exc)
        try:
            if exc.trace is not None:
                out.write("trace.csv", trace_bytes(exc.trace))
            out.finish("solver_failure", str(exc))
        except OSError:
            return EXIT_IO
        return EXIT_SOLVER
    except (OSError, GridParseError) as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    try:
        out.finish("ok")
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    return EXIT_OK


# ---------------------------------------------------------------------------
# plot data


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    return rows[0], rows[1:]


def _pairs_bytes(xs, ys):
    return "".join(f"{fmt(x)} {fmt(y)}\n" for x, y in zip(xs, ys)).encode("utf-8")


def _emit_series(out, stem, xs, ys):
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    ok = np.isfinite(xs) & np.isfinite(ys)
    xs, ys = xs[ok], ys[ok]
    if xs.size == 0:
        return
    out.write(stem + ".dat", _pairs_bytes(xs, ys))
    pos = (xs > 0) & (ys > 0)
    if pos.any():
        out.write(stem + ".loglog.dat", _pairs_bytes(np.log(xs[pos]), np.log(ys[pos])))


def plot_data(artifact, out_dir) -> list:
    """Two-column text files from a trace or report CSV, with log-log variants.

    Traces give one file per column against sigma (against b when sigma is
    fixed); radius reports give one file per (quantity, index) against r.
    """
    header, rows = _read_csv(artifact)
    if not rows:
        raise ValueError(f"{artifact}: no data rows")
    out = Output(out_dir)
    stem = Path(artifact).stem
    if header[:4] == ["radius", "quantity", "index", "value"]:
        groups = {}
        for r, q, idx, v in rows:
            if math.isinf(float(r)):
                continue
            groups.setdefault((q, idx), []).append((float(r), float(v)))
        for (q, idx) in sorted(groups):
            xs, ys = zip(*groups[(q, idx)])
            _emit_series(out, f"{stem}_{q}_{idx}", xs, ys)
    elif set(TRACE_COLUMNS) <= set(header):
        cols = {h: np.array([float(r[i]) for r in rows]) for i, h in enumerate(header)}
        xname = "sigma" if np.ptp(cols["sigma"]) > 0 else "b"
        for name in header:
            if name in ("b", "sigma"):
                continue
            _emit_series(out, f"{stem}_{name}_vs_{xname}", cols[xname], cols[name])
    else:
        missing = sorted(set(TRACE_COLUMNS) - set(header))
        raise ValueError(f"{artifact}: missing columns {missing}")
    out.finish("ok")
    return sorted(out.files)


# ---------------------------------------------------------------------------
# entry point


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get("CEFOLIATOR_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"CEFOLIATOR_THREADS must be an integer, got {env!r}") from None
        return n
    return None


def build_parser():
    ap = argparse.ArgumentParser(prog="cefoliator", description="Constant-expansion surfaces in asymptotically flat initial data.")
    sub = ap.add_subparsers(dest="command", required=True)
    for task in TASKS:
        sp = sub.add_parser(task)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out")
        sp.add_argument("--threads", type=int)
        sp.add_argument("-v", "--verbose", action="store_true")
    pp = sub.add_parser("plot")
    pp.add_argument("artifact")
    pp.add_argument("--out")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "plot":
        try:
            plot_data(args.artifact, args.out or str(Path(args.artifact).parent / "plot"))
        except ValueError as exc:
            log.error("%s", exc)
            return EXIT_CONFIG
        except OSError as exc:
            log.error("I/O error: %s", exc)
            return EXIT_IO
        return EXIT_OK
    try:
        rc = load_config(args.config, args.command)
        threads = _threads(args.threads)
        if threads is not None and threads < 1:
            raise ConfigError("thread count must be >= 1")
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO
    if threads is None:
        return run(rc, args.out)
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=threads):
        return run(rc, args.out)


if __name__ == "__main__":
    sys.exit(main())
