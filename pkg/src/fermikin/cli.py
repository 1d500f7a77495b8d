"""Command line driver.

    fermikin run <config.json | scenario name> [--lambda X] [--grid-n N] [--eps E]
                 [--t-end T] [--seed S] [--out DIR]
    fermikin scenarios
    fermikin validate <config.json>

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
``FERMIKIN_THREADS`` caps the worker threads of the compiled kernels.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import scenarios
from .errors import AdmissibilityError, ConfigError, FermikinError, FitError, StepFailure

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def _header(cfg):
    return {"schema_version": scenarios.SCHEMA_VERSION, "config": cfg}


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_outputs(result, cfg, outdir: str) -> dict:
    """Write timeseries.csv, final_state.json and summary.json; return their paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = {}
    csv_path = os.path.join(outdir, "timeseries.csv")
    with open(csv_path, "w", newline="") as fh:
        fh.write(f"# schema_version={scenarios.SCHEMA_VERSION}\n")
        fh.write("# config=" + json.dumps(_jsonable(cfg), sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(result.columns)
        for row in result.rows:
            w.writerow([_fmt(row.get(c, "")) for c in result.columns])
    paths["timeseries"] = csv_path
    if result.final_state is not None:
        p = os.path.join(outdir, "final_state.json")
        with open(p, "w") as fh:
            json.dump(_jsonable({**_header(cfg), **result.final_state}), fh)
        paths["final_state"] = p
    p = os.path.join(outdir, "summary.json")
    with open(p, "w") as fh:
        json.dump(_jsonable({**_header(cfg), **result.summary}), fh, indent=2, sort_keys=True)
    paths["summary"] = p
    return paths


def _error_record(kind, exc, outdir=None):
    rec = {"schema_version": scenarios.SCHEMA_VERSION, "error": kind, "type": type(exc).__name__,
           "message": str(exc)}
    if isinstance(exc, StepFailure) and exc.time is not None:
        rec["time"] = exc.time
    print(json.dumps(rec), file=sys.stderr)
    if outdir:
        try:
            os.makedirs(outdir, exist_ok=True)
            with open(os.path.join(outdir, "error.json"), "w") as fh:
                json.dump(rec, fh, indent=2)
        except OSError:
            pass


def _resolve(target: str) -> dict:
    if os.path.isfile(target):
        return scenarios.load_config(target)
    if target.endswith(".json"):
        raise ConfigError(f"config file not found: {target}")
    return scenarios.preset_config(target)


def cmd_run(args) -> int:
    outdir = args.out
    try:
        cfg = _resolve(args.config)
        cfg = scenarios.apply_overrides(cfg, lam=args.lam, grid_n=args.grid_n, eps=args.eps,
                                        t_end=args.t_end, seed=args.seed, out=args.out)
        cfg = scenarios.validate_config(cfg)
        outdir = cfg["output"]
    except ConfigError as exc:
        _error_record("config", exc, outdir)
        return EXIT_CONFIG
    start = time.perf_counter()
    try:
        with np.errstate(over="ignore", under="ignore"):
            result = scenarios.run_config(cfg)
    except ConfigError as exc:
        _error_record("config", exc, outdir)
        return EXIT_CONFIG
    except (StepFailure, FitError, AdmissibilityError, FloatingPointError, np.linalg.LinAlgError,
            FermikinError) as exc:
        _error_record("numerical", exc, outdir)
        return EXIT_NUMERICAL
    paths = write_outputs(result, cfg, outdir)
    s = result.summary
    print(f"{cfg['scenario']}: status={s.get('status')} converged={s.get('converged')} "
          f"({time.perf_counter() - start:.1f} s, backend {s.get('backend')})")
    for name, p in paths.items():
        print(f"  {name}: {p}")
    return EXIT_OK


def cmd_scenarios(args) -> int:
    width = max(len(n) for n in scenarios.PRESETS)
    for name, preset in scenarios.PRESETS.items():
        print(f"{name:<{width}}  {preset['claim']}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        cfg = scenarios.validate_config(_resolve(args.config))
    except ConfigError as exc:
        _error_record("config", exc)
        return EXIT_CONFIG
    print(json.dumps(_jsonable(_header(cfg)), indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fermikin", description="Kinetic equations for lattice fermions.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a configuration file or a named scenario")
    r.add_argument("config", help="path to a JSON config, or a scenario name")
    r.add_argument("--lambda", dest="lam", type=float)
    r.add_argument("--grid-n", dest="grid_n", type=int)
    r.add_argument("--eps", type=float)
    r.add_argument("--t-end", dest="t_end", type=float)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("scenarios", help="list the scenario presets")
    s.set_defaults(func=cmd_scenarios)
    v = sub.add_parser("validate", help="check a configuration and print it with defaults")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
