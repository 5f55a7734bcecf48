"""Command-line runner: ``fhverify <command> [options]``.

Configuration comes from built-in defaults, then an optional flat YAML file
(``--config``), then command-line flags; later sources win. Every run writes
results.json, run.log and any CSV tables into ``--out``.

Exit status: 0 all assertions passed, 1 an assertion failed, 2 the
configuration is invalid, 3 a resource cap was exceeded.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__, suite
from .dec import FeasibilityError

SCHEMA_VERSION = 1

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3

# per-command parameters and their defaults; types are taken from the defaults
DEFAULTS: dict[str, dict] = {
    "spectrum": {"n_max": 20, "tolerance": 1e-10},
    "ward": {"alpha_lo": 0.0, "alpha_hi": 3.0, "alpha_points": 13, "tolerance": 1e-12},
    "threshold": {"lo": 0.0, "hi": 2.0, "tol": 1e-6},
    "energy": {"torus_size": 32, "hopf_size": 48, "product_size": 32, "energy_rel_tol": 5e-3},
    "residual": {
        "torus_sizes": [16, 32],
        "product_sizes": [16, 32],
        "hopf_sizes": [24, 48],
        "critical_c": 10.0,
    },
    "conformal": {"size": 8, "n_random": 10, "rel_tol": 1e-12},
    "bounds": {"size_2d": 32, "size_4d": 8, "n_random_2d": 100, "n_random_4d": 50},
    "laplacian": {"size_2d": 8, "size_4d": 4, "gap_tol": 1e-9},
    "variation": {"size": 32, "n_random": 50, "n_hessian": 10, "eps": 1e-4, "rel_tol": 1e-3},
    "peter_weyl": {"size": 48, "cases": [[1, 0, 0], [2, 1, 0], [3, 0, 2]], "rel_tol": 1e-2},
    "ode": {
        "glued": False,
        "t_small": 1e-6,
        "t_large": 30.0,
        "n_points": 100000,
        "energy_tol": 1e-3,
        "t_end": 10.0,
        "h_step": 1e-3,
        "match_tol": 1e-8,
        "drift_tol": 1e-10,
    },
    "flow": {"size": 32, "steps": 200, "start": "perturbed_identity", "perturbation": 0.02, "dt": None},
}

TASKS = {
    "spectrum": suite.run_spectrum,
    "ward": suite.run_ward,
    "threshold": suite.run_threshold,
    "energy": suite.run_energy,
    "residual": suite.run_residual,
    "conformal": suite.run_conformal,
    "bounds": suite.run_bounds,
    "laplacian": suite.run_laplacian,
    "variation": suite.run_variation,
    "peter_weyl": suite.run_peter_weyl,
    "ode": suite.run_ode,
    "flow": suite.run_flow,
}

# the acceptance battery run by ``suite``
SUITE_TASKS = (
    ("spectrum", {}),
    ("ward", {}),
    ("threshold", {"hi": 3.0, "tol": 1e-6}),
    ("ode_glued", {"glued": True}),
    ("ode", {}),
    ("energy", {}),
    ("residual", {}),
    ("conformal", {}),
    ("bounds", {}),
    ("laplacian", {}),
    ("variation", {}),
    ("peter_weyl", {}),
)

TOLERANCE_KEYS = {"tolerance", "tol", "energy_rel_tol", "rel_tol", "gap_tol", "energy_tol", "match_tol", "drift_tol"}

log = logging.getLogger("fhverify")


class ConfigError(ValueError):
    pass


def task_seed(master: int, name: str) -> int:
    """Stable per-task seed derived from the master seed."""
    digest = hashlib.sha256(f"{master}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _coerce(key: str, value, default):
    if default is None:
        if value is None:
            return None
        try:
            return float(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: expected a number, got {value!r}") from exc
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "1", "0", "yes", "no"):
            return value.lower() in ("true", "1", "yes")
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    if isinstance(default, int):
        try:
            ok = not isinstance(value, bool) and float(value) == int(float(value))
        except (TypeError, ValueError, OverflowError):
            ok = False
        if not ok:
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(float(value))
    if isinstance(default, float):
        try:
            return float(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: expected a number, got {value!r}") from exc
    if isinstance(default, list):
        if isinstance(value, str):
            value = yaml.safe_load(value)
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{key}: expected a non-empty list, got {value!r}")
        return value
    return str(value)


def validate(command: str, params: dict) -> dict:
    defaults = DEFAULTS[command]
    out = {}
    for key, default in defaults.items():
        out[key] = _coerce(key, params.get(key, default), default)
    unknown = set(params) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {sorted(unknown)}")
    for key, val in out.items():
        if key in TOLERANCE_KEYS and not val > 0:
            raise ConfigError(f"{key} must be positive")
        if "size" in key:
            sizes = val if isinstance(val, list) else [val]
            if any(int(s) < 4 for s in sizes):
                raise ConfigError(f"{key}: grid sizes must be >= 4")
    if command == "spectrum" and out["n_max"] < 1:
        raise ConfigError("n_max must be >= 1")
    if command == "ward" and (out["alpha_points"] < 1 or out["alpha_hi"] < out["alpha_lo"]):
        raise ConfigError("empty alpha range")
    if command == "threshold" and not out["lo"] < out["hi"]:
        raise ConfigError("empty bracket")
    if command == "ode" and not 0 < out["t_small"] < out["t_large"]:
        raise ConfigError("need 0 < t_small < t_large")
    if command == "flow":
        if out["steps"] < 1:
            raise ConfigError("steps must be >= 1")
        if out["dt"] is not None and out["dt"] <= 0:
            raise ConfigError("dt must be positive")
        if out["start"] not in ("perturbed_identity", "random_sphere"):
            raise ConfigError(f"unknown flow start {out['start']!r}")
    return out


def load_config(path: str | None) -> dict:
    """Read a flat YAML mapping; keys may be prefixed ``command.key`` to scope them."""
    if not path:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a flat key-value mapping")
    for k, v in data.items():
        if isinstance(v, dict):
            raise ConfigError(f"config must be flat; key {k!r} holds a mapping")
    return data


def params_for(command: str, config: dict, flags: dict, scale: float = 1.0) -> dict:
    """Merge defaults, config file and flags for one command."""
    merged = {}
    for k, v in config.items():
        if "." in k:
            cmd, key = k.split(".", 1)
            if cmd == command:
                merged[key] = v
        elif k in DEFAULTS[command]:
            merged[k] = v
    merged.update({k: v for k, v in flags.items() if v is not None})
    params = validate(command, merged)
    for key in TOLERANCE_KEYS & set(params):
        params[key] = params[key] * scale
    return params


def canonical(obj):
    """JSON-ready copy with floats fixed at 15 significant digits."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.15g}")
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps(doc) -> str:
    return json.dumps(canonical(doc), sort_keys=True, indent=2) + "\n"


def _run_task(name: str, command: str, params: dict, seed: int):
    rng = np.random.default_rng(task_seed(seed, name))
    t = time.perf_counter()
    res = TASKS[command](params, rng)
    return name, res, time.perf_counter() - t


def execute(command: str, config: dict, flags: dict, seed: int, threads: int, scale: float):
    """Run one command (or the whole suite); returns (document, tables, exit status)."""
    if command == "suite":
        jobs = []
        for name, over in SUITE_TASKS:
            cmd = "ode" if name.startswith("ode") else name
            jobs.append((name, cmd, params_for(cmd, config, over, scale)))
    else:
        jobs = [(command, command, params_for(command, config, flags, scale))]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            done = list(pool.map(lambda j: _run_task(j[0], j[1], j[2], seed), jobs))
    else:
        done = [_run_task(name, cmd, p, seed) for name, cmd, p in jobs]
    done.sort(key=lambda x: x[0])
    results, failures, tables, params = {}, [], {}, {}
    for (name, res, elapsed), (_, _, p) in zip(done, sorted(jobs, key=lambda j: j[0])):
        log.info("%s: %s in %.2fs", name, "pass" if res.passed else "FAIL", elapsed)
        for f in res.failures:
            log.info("  %s", f)
        results[name] = dict(res.results, passed=res.passed)
        params[name] = p
        failures += [f"{name}: {f}" for f in res.failures]
        for tname, text in res.tables.items():
            tables[tname if len(jobs) == 1 else f"{name}_{tname}"] = text
    doc = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "command": command,
        "seed": seed,
        "parameters": params if command == "suite" else params[command],
        "passed": not failures,
        "failed_assertions": failures,
        "results": results if command == "suite" else results[command],
    }
    return doc, tables, EXIT_OK if not failures else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fhverify", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="flat YAML file of parameters")
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--tolerance-scale", type=float, default=1.0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="Hessian block spectra of the Hopf map")
    p.add_argument("--n-max", type=int, dest="n_max")
    p.add_argument("--tolerance", type=float)

    p = sub.add_parser("ward", help="Ward block spectra on an alpha grid")
    p.add_argument("--alpha-lo", type=float, dest="alpha_lo")
    p.add_argument("--alpha-hi", type=float, dest="alpha_hi")
    p.add_argument("--alpha-points", type=int, dest="alpha_points")

    p = sub.add_parser("threshold", help="bisect the Ward stability threshold")
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("energy", help="energies of reference maps")
    p.add_argument("--hopf-size", type=int, dest="hopf_size")
    p.add_argument("--product-size", type=int, dest="product_size")

    sub.add_parser("residual", help="Euler-Lagrange residuals of critical maps")

    p = sub.add_parser("bounds", help="topological lower bounds on random and linear maps")
    p.add_argument("--n-random-2d", type=int, dest="n_random_2d")
    p.add_argument("--n-random-4d", type=int, dest="n_random_4d")

    p = sub.add_parser("laplacian", help="form Laplacian spectra on flat tori")
    p.add_argument("--size-2d", type=int, dest="size_2d")
    p.add_argument("--size-4d", type=int, dest="size_4d")

    p = sub.add_parser("ode", help="reduced S4 -> CP2 profile checks")
    p.add_argument("--glued", action="store_true", default=None)
    p.add_argument("--t-small", type=float, dest="t_small")
    p.add_argument("--t-large", type=float, dest="t_large")
    p.add_argument("--n-points", type=int, dest="n_points")
    p.add_argument("--h-step", type=float, dest="h_step")

    p = sub.add_parser("flow", help="discrete gradient flow of the energy")
    p.add_argument("--steps", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--start", choices=["perturbed_identity", "random_sphere"])
    p.add_argument("--size", type=int)

    sub.add_parser("suite", help="run the full acceptance battery")
    return ap


def _setup_logging(out: Path):
    log.setLevel(logging.INFO)
    for h in list(log.handlers):
        log.removeHandler(h)
        h.close()
    fh = logging.FileHandler(out / "run.log", mode="w")
    fh.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(fh)
    sh = logging.StreamHandler(sys.stderr)
    sh.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(sh)
    return fh


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    global_keys = {"config", "out", "seed", "threads", "tolerance_scale", "command"}
    flags = {k: v for k, v in vars(args).items() if k not in global_keys}
    out = Path(args.out)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if not args.tolerance_scale > 0:
            raise ConfigError("--tolerance-scale must be positive")
        config = load_config(args.config)
        # validate before doing any work
        if args.command == "suite":
            for name, over in SUITE_TASKS:
                params_for("ode" if name.startswith("ode") else name, config, over)
        else:
            params_for(args.command, config, flags)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out.mkdir(parents=True, exist_ok=True)
    fh = _setup_logging(out)
    try:
        doc, tables, status = execute(args.command, config, flags, args.seed, args.threads, args.tolerance_scale)
    except FeasibilityError as exc:
        log.error("resource cap exceeded: %s", exc)
        doc = {"schema_version": SCHEMA_VERSION, "command": args.command, "passed": False, "error": str(exc)}
        (out / "results.json").write_text(dumps(doc))
        return EXIT_RESOURCE
    finally:
        fh.flush()
    (out / "results.json").write_text(dumps(doc))
    for name, text in sorted(tables.items()):
        (out / f"{name}.csv").write_text(text)
    log.info("%s: %s", args.command, "all assertions passed" if status == EXIT_OK else "assertion failures")
    return status


if __name__ == "__main__":
    sys.exit(main())
