"""``saddle-scope`` command-line front end."""
from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources

import jsonschema
import numpy as np

from .critical import find_critical_points
from .dynamics import FixedSchedule, RunConfig, run, schedule_from_json
from .experiment import ExperimentConfig, MissingCriticalPoints, run_experiment, sweep_alpha
from .objective import ObjectiveError, objective_from_name, validate_objective
from .serialize import dump_lines, dumps, write_csv
from .spectral import scan_box, scan_refinement

SUBCOMMANDS = ("run", "spectral", "critical", "experiment", "sweep", "validate")
THREADS_ENV = "SADDLE_SCOPE_THREADS"
# options whose values may start with "-" (negative coordinates)
LIST_OPTIONS = ("--x0", "--box", "--init-box", "--alphas", "--grid")

EPILOG = """\
Config files are JSON objects whose keys mirror the long flags with
underscores (e.g. --init-box -> "init_box"); flags override file values.
The schema for every subcommand ships as saddle_scope/schemas/config.schema.json.

Objectives: example0, example1, example2[:a=4,b=1], quadratic:<file.json>
with {"A": [[...]], "b": [...]}.

Schedules (--schedule or "schedule"): {"fixed": a} |
{"contraction": {"alpha0": a0, "alpha_star": a, "rho": r}} |
{"staircase": [[count, a], ..., [null, a_last]]}. Staircase iterations are
zero-based and segment starts are inclusive: [[50, 0.15], [null, 0.1]] uses
0.15 for iterations 0..49 and 0.1 from iteration 50 on.
"""


class ConfigError(Exception):
    def __init__(self, key, message):
        super().__init__(message)
        self.key = key


def _schema():
    text = resources.files("saddle_scope").joinpath("schemas/config.schema.json").read_text()
    return json.loads(text)


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _pairs(text):
    vals = _floats(text)
    if len(vals) % 2:
        raise argparse.ArgumentTypeError("box needs an even number of values lo,hi,lo,hi,...")
    return [vals[i:i + 2] for i in range(0, len(vals), 2)]


def _add(p, *flags, **kw):
    p.add_argument(*flags, default=argparse.SUPPRESS, **kw)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    _add(common, "--config", help="JSON config file")
    _add(common, "--objective", help="objective selector")
    _add(common, "--a", type=float, help="example2 parameter a")
    _add(common, "--b", type=float, help="example2 parameter b")
    _add(common, "--output", help="output file (default: stdout)")
    _add(common, "--format", choices=("json", "csv"))
    _add(common, "--threads", type=int, help=f"worker count (env {THREADS_ENV} overrides)")

    runcfg = argparse.ArgumentParser(add_help=False)
    _add(runcfg, "--max-iters", dest="max_iters", type=int)
    _add(runcfg, "--grad-tol", dest="grad_tol", type=float)
    _add(runcfg, "--diverge-radius", dest="diverge_radius", type=float)
    _add(runcfg, "--record-every", dest="record_every", type=int)

    sched = argparse.ArgumentParser(add_help=False)
    _add(sched, "--alpha", type=float, help="fixed step-size")
    _add(sched, "--schedule", help="schedule JSON (see below)")

    expt = argparse.ArgumentParser(add_help=False)
    _add(expt, "--init-box", dest="init_box", type=_pairs, help="lo,hi,lo,hi,...")
    _add(expt, "--n-samples", dest="n_samples", type=int)
    _add(expt, "--seed", type=int)
    _add(expt, "--match-radius", dest="match_radius", type=float)
    _add(expt, "--eig-tol", dest="eig_tol", type=float)
    _add(expt, "--class-tol", dest="class_tol", type=float)
    _add(expt, "--unconstrained", action="store_true", help="allow init_box outside the domain box")
    _add(expt, "--find-critical", dest="find_critical", action="store_true",
         help="locate critical points numerically instead of using the analytic list")

    parser = argparse.ArgumentParser(
        prog="saddle-scope",
        description="Gradient descent near strict saddles: runs, spectra, critical points, Monte Carlo.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    fmt = argparse.RawDescriptionHelpFormatter

    p = sub.add_parser("run", parents=[common, sched, runcfg], epilog=EPILOG, formatter_class=fmt,
                       help="single descent trajectory")
    _add(p, "--x0", type=_floats, help="initial point, comma separated")

    p = sub.add_parser("spectral", parents=[common], epilog=EPILOG, formatter_class=fmt,
                       help="grid scan of Hessian spectra")
    _add(p, "--alpha", type=float)
    _add(p, "--box", type=_pairs, help="lo,hi,lo,hi,... (default: domain box)")
    _add(p, "--grid", type=_ints, help="cells per axis (one value or one per axis)")
    _add(p, "--eig-tol", dest="eig_tol", type=float)
    _add(p, "--refine", type=int, help="number of grid doublings to report (default 1)")
    _add(p, "--raster", help="also write a CSV raster of the base grid here")

    p = sub.add_parser("critical", parents=[common], epilog=EPILOG, formatter_class=fmt,
                       help="multi-start Newton critical points")
    _add(p, "--box", type=_pairs)
    _add(p, "--n-starts", dest="n_starts", type=int)
    _add(p, "--newton-tol", dest="newton_tol", type=float)
    _add(p, "--class-tol", dest="class_tol", type=float)
    _add(p, "--seed", type=int)

    p = sub.add_parser("experiment", parents=[common, sched, runcfg, expt], epilog=EPILOG,
                       formatter_class=fmt, help="Monte Carlo saddle-convergence estimate")
    _add(p, "--samples-csv", dest="samples_csv", help="also write per-sample CSV here")

    p = sub.add_parser("sweep", parents=[common, runcfg, expt], epilog=EPILOG, formatter_class=fmt,
                       help="experiment at several fixed step-sizes")
    _add(p, "--alphas", type=_floats)

    p = sub.add_parser("validate", parents=[common], epilog=EPILOG, formatter_class=fmt,
                       help="finite-difference derivative checks")
    _add(p, "--n-points", dest="n_points", type=int)
    _add(p, "--seed", type=int)
    return parser


def _normalize_argv(argv):
    out = []
    it = iter(argv)
    for tok in it:
        if tok in LIST_OPTIONS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def load_config(subcommand, flags):
    """Merge the optional config file with flag values and validate the result.

    Returns ``(config, flag_keys)``.
    """
    flags = dict(flags)
    path = flags.pop("config", None)
    cfg = {}
    if path is not None:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", f"cannot read {path}: {exc}")
        if not isinstance(cfg, dict):
            raise ConfigError("config", "config file must hold a JSON object")
    if isinstance(flags.get("schedule"), str):
        try:
            flags["schedule"] = json.loads(flags["schedule"])
        except json.JSONDecodeError as exc:
            raise ConfigError("schedule", f"malformed schedule JSON: {exc}")
    cfg.update(flags)

    root = _schema()
    schema = dict(root["subcommands"][subcommand])
    schema["$defs"] = root["$defs"]
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        if err.absolute_path:
            key = str(err.absolute_path[0])
        elif err.validator == "additionalProperties":
            key = sorted(set(cfg) - set(schema["properties"]))[0]
        elif err.validator == "required":
            key = err.message.split("'")[1]
        else:
            key = "config"
        raise ConfigError(key, err.message)
    return cfg, set(flags)


# --------------------------------------------------------------------------
# builders


def _objective(cfg):
    try:
        return objective_from_name(cfg["objective"], a=cfg.get("a"), b=cfg.get("b"))
    except (ObjectiveError, OSError, ValueError) as exc:
        raise ConfigError("objective", str(exc))


def _schedule(cfg, flag_keys):
    has_alpha, has_sched = "alpha" in cfg, "schedule" in cfg
    if has_alpha and has_sched:
        if ("alpha" in flag_keys) == ("schedule" in flag_keys):
            raise ConfigError("schedule", "give either alpha or schedule, not both")
        has_sched = "schedule" in flag_keys
    try:
        if has_sched:
            return schedule_from_json(cfg["schedule"])
        if has_alpha:
            return FixedSchedule(float(cfg["alpha"]))
    except (ValueError, TypeError) as exc:
        raise ConfigError("schedule", str(exc))
    raise ConfigError("alpha", "one of alpha or schedule is required")


def _run_config(cfg, obj):
    kw = {k: cfg[k] for k in ("max_iters", "grad_tol", "diverge_radius", "record_every") if k in cfg}
    try:
        rc = RunConfig(**kw)
        rc.check_against(obj)
    except ValueError as exc:
        raise ConfigError("diverge_radius" if "diverge" in str(exc) else "run_config", str(exc))
    return rc


def _box(cfg, key, obj):
    if key not in cfg:
        return None
    box = np.asarray(cfg[key], dtype=float)
    if box.shape != (obj.dim, 2):
        raise ConfigError(key, f"expected {obj.dim} intervals, got {len(cfg[key])}")
    if np.any(box[:, 0] >= box[:, 1]):
        raise ConfigError(key, "each interval needs lo < hi")
    return box


def _threads(cfg):
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("threads", f"{THREADS_ENV} must be an integer, got {env!r}")
    return int(cfg.get("threads", os.cpu_count() or 1))


def _experiment_config(cfg, obj, sched, threads):
    crit = None
    if cfg.get("find_critical"):
        crit = tuple(find_critical_points(obj, class_tol=cfg.get("class_tol", 1e-8), workers=threads))
    kw = {k: cfg[k] for k in ("n_samples", "seed", "match_radius", "eig_tol", "class_tol") if k in cfg}
    try:
        return ExperimentConfig(
            objective=obj,
            schedule=sched,
            init_box=_box(cfg, "init_box", obj),
            run_config=_run_config(cfg, obj),
            unconstrained=bool(cfg.get("unconstrained", False)),
            critical_points=crit,
            **kw,
        )
    except ValueError as exc:
        key = "init_box" if "init_box" in str(exc) else "experiment"
        raise ConfigError(key, str(exc))


# --------------------------------------------------------------------------
# subcommands


def cmd_run(cfg, flag_keys, threads):
    obj = _objective(cfg)
    sched = _schedule(cfg, flag_keys)
    rc = _run_config(cfg, obj)
    x0 = np.asarray(cfg["x0"], dtype=float)
    if x0.shape != (obj.dim,):
        raise ConfigError("x0", f"expected {obj.dim} coordinates, got {x0.size}")
    traj = run(obj, x0, sched, rc)
    if cfg.get("format") == "csv":
        header = ["iter"] + [f"x_{j}" for j in range(obj.dim)] + ["alpha"]
        rows = ([int(i), *p.tolist(), float(a)] for i, p, a in zip(traj.record_iters, traj.points, traj.alphas))
        return write_csv(header, rows)
    return dumps({
        "objective": obj.name,
        "schedule": sched.to_json(),
        "run_config": vars(rc),
        "trajectory": traj.to_dict(),
    }) + "\n"


def _raster_csv(raster, dim):
    header = [f"x_{j}" for j in range(dim)] + ["eig_gap", "hess_norm"]
    return write_csv(header, ([float(v) for v in row] for row in raster))


def cmd_spectral(cfg, flag_keys, threads):
    obj = _objective(cfg)
    alpha = float(cfg["alpha"])
    box = _box(cfg, "box", obj)
    grid = cfg.get("grid", [256])
    if len(grid) == 1:
        grid = grid * obj.dim
    if len(grid) != obj.dim:
        raise ConfigError("grid", f"expected 1 or {obj.dim} values")
    eig_tol = float(cfg.get("eig_tol", 1e-6))
    levels = int(cfg.get("refine", 1))
    base, raster = scan_box(obj, alpha, box, tuple(grid), eig_tol, workers=threads, return_raster=True)
    reports = [base] + scan_refinement(obj, alpha, box, tuple(2 * n for n in grid), levels - 1, eig_tol, threads)
    if "raster" in cfg:
        with open(cfg["raster"], "w") as fh:
            fh.write(_raster_csv(raster, obj.dim))
    if cfg.get("format") == "csv":
        return _raster_csv(raster, obj.dim)
    return dumps({"objective": obj.name, "reports": [r.to_dict() for r in reports]}) + "\n"


def cmd_critical(cfg, flag_keys, threads):
    obj = _objective(cfg)
    kw = {k: cfg[k] for k in ("n_starts", "newton_tol", "class_tol", "seed") if k in cfg}
    reports = find_critical_points(obj, _box(cfg, "box", obj), workers=threads, **kw)
    if cfg.get("format") == "csv":
        header = (["id"] + [f"x_{j}" for j in range(obj.dim)] + ["grad_norm"]
                  + [f"eig_{j}" for j in range(obj.dim)] + ["classification", "newton_iters"])
        rows = ([i, *r.location.tolist(), r.grad_norm, *r.hess_eigenvalues.tolist(),
                 r.classification.value, r.newton_iters] for i, r in enumerate(reports))
        return write_csv(header, rows)
    return dump_lines(dict(id=i, objective=obj.name, **r.to_dict()) for i, r in enumerate(reports))


def _samples_csv(summary):
    return write_csv(summary.sample_header(), summary.sample_rows())


def cmd_experiment(cfg, flag_keys, threads):
    obj = _objective(cfg)
    sched = _schedule(cfg, flag_keys)
    ecfg = _experiment_config(cfg, obj, sched, threads)
    try:
        summary = run_experiment(ecfg, workers=threads)
    except MissingCriticalPoints as exc:
        raise ConfigError("find_critical", str(exc))
    if "samples_csv" in cfg:
        with open(cfg["samples_csv"], "w") as fh:
            fh.write(_samples_csv(summary))
    if cfg.get("format") == "csv":
        return _samples_csv(summary)
    return dumps({
        "objective": obj.name,
        "schedule": sched.to_json(),
        "init_box": ecfg.init_box.tolist(),
        "seed": ecfg.seed,
        "summary": summary.to_dict(),
    }) + "\n"


def cmd_sweep(cfg, flag_keys, threads):
    obj = _objective(cfg)
    alphas = cfg["alphas"]
    ecfg = _experiment_config(cfg, obj, FixedSchedule(1.0), threads)
    try:
        results = sweep_alpha(ecfg, alphas, workers=threads)
    except MissingCriticalPoints as exc:
        raise ConfigError("find_critical", str(exc))

    def converged(s):
        return (s.total("ToLocalMin") + s.total("ToStrictSaddle") + s.total("ToIndeterminate")) / s.n_samples

    if cfg.get("format") == "csv":
        header = ["alpha", "n_samples", "to_local_min", "to_strict_saddle", "to_indeterminate",
                  "diverged", "unresolved", "converged_fraction", "saddle_probability", "wilson_lo", "wilson_hi"]
        rows = ([a, s.n_samples, s.total("ToLocalMin"), s.total("ToStrictSaddle"), s.total("ToIndeterminate"),
                 s.total("Diverged"), s.total("Unresolved"), converged(s), s.saddle_probability_estimate,
                 *s.wilson_95_interval] for a, s in results)
        return write_csv(header, rows)
    return dumps({
        "objective": obj.name,
        "seed": ecfg.seed,
        "init_box": ecfg.init_box.tolist(),
        "results": [{"alpha": a, "converged_fraction": converged(s), "summary": s.to_dict()} for a, s in results],
    }) + "\n"


def cmd_validate(cfg, flag_keys, threads):
    obj = _objective(cfg)
    report = validate_objective(obj, n_points=int(cfg.get("n_points", 100)), seed=int(cfg.get("seed", 0)))
    if cfg.get("format") == "csv":
        rows = ([name, c["passed"], c.get("max_scaled_error", c.get("max_jump", c.get("max_asymmetry"))),
                 c.get("tol")] for name, c in report["checks"].items())
        text = write_csv(["check", "passed", "value", "tol"], rows)
    else:
        text = dumps(report) + "\n"
    return text, report["passed"]


COMMANDS = {
    "run": cmd_run,
    "spectral": cmd_spectral,
    "critical": cmd_critical,
    "experiment": cmd_experiment,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    ns = parser.parse_args(_normalize_argv(argv))
    flags = {k: v for k, v in vars(ns).items() if k != "subcommand"}
    ok = True
    try:
        cfg, flag_keys = load_config(ns.subcommand, flags)
        threads = _threads(cfg)
        result = COMMANDS[ns.subcommand](cfg, flag_keys, threads)
        if isinstance(result, tuple):
            result, ok = result
    except ConfigError as exc:
        print(f"saddle-scope: config error in '{exc.key}': {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"saddle-scope: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    try:
        if "output" in cfg:
            with open(cfg["output"], "w") as fh:
                fh.write(result)
        else:
            sys.stdout.write(result)
    except OSError as exc:
        print(f"saddle-scope: error: cannot write output: {exc}", file=sys.stderr)
        return 1
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
