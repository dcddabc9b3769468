"""Command line entry point: ``constants``, ``minimize``, ``sweep``, ``fiber``, ``verify``.

Exit codes: 0 ok, 1 usage or invalid input, 2 numerical failure, 3 a check
failed.  Every command writes ``metadata.json`` into ``--out``.
Precedence for every setting: command-line flag, then config file, then the
built-in default; ``BP_SEED`` sits between the flag and the config file.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields as dc_fields
from pathlib import Path

import numpy as np

from . import fiber
from .constants import estimate_constants
from .field import DEFAULT_GRID, ModelParams, load_field, make_gaussian, make_grid, mass
from .minimize import MinimizeConfig, ground_state_diagnostics, multi_start
from .sweep import (SWEEP_GRID, apply_env, check_ratio_conditions, check_scaling_paths,
                    check_subadditivity, load_config, metadata, parse_c_grid, sweep_mass)
from .verify import run_suite

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_CHECK = 0, 1, 2, 3

log = logging.getLogger("sbp_minimizer")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, grid: bool = True) -> None:
    p.add_argument("--config", type=Path, help="sectioned key=value file")
    p.add_argument("--mu", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--relaxed", action="store_true", default=None,
                   help="accept 8/3 <= p < 10/3")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    if grid:
        p.add_argument("--node-count", type=int)
        p.add_argument("--r-max", type=float)
        p.add_argument("--scheme", choices=("graded", "uniform"))


def _optimizer(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-starts", type=int)
    p.add_argument("--grad-tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--rho0-policy", choices=("shrink_step", "reject"))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sbp-minimizer", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("constants", help="estimate constants and thresholds")
    _common(p, grid=False)

    p = sub.add_parser("minimize", help="multi-start minimization at one mass")
    _common(p)
    _optimizer(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--c", type=float, help="mass")
    g.add_argument("--c-frac", type=float, help="mass as a fraction of c0 (default 0.5)")
    p.add_argument("--checkpoint", type=int, default=0, metavar="K",
                   help="save the iterate every K iterations under OUT/checkpoints")

    p = sub.add_parser("sweep", help="m(c) curve and its checks")
    _common(p)
    _optimizer(p)
    p.add_argument("--grid", dest="c_grid", help="dyadic:N or comma separated fractions of c0")
    p.add_argument("--no-warm-start", dest="warm_start", action="store_false", default=None)
    p.add_argument("--timing", action="store_true", default=None,
                   help="record wall times (outputs are then not reproducible byte for byte)")
    p.add_argument("--subadditivity-tol", type=float)

    p = sub.add_parser("fiber", help="fiber-map scan of a field")
    _common(p)
    p.add_argument("--field", type=Path, help="field file; default is a Gaussian")
    p.add_argument("--c", type=float, default=1.0, help="mass of the default Gaussian")
    p.add_argument("--sigma", type=float, default=1.0, help="width of the default Gaussian")
    p.add_argument("--t-min", type=float, default=0.5)
    p.add_argument("--t-max", type=float, default=2.0)
    p.add_argument("--t-count", type=int, default=61)

    p = sub.add_parser("verify", help="run the property suite")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path, default=Path("."))
    return ap


# ---------------------------------------------------------------------------
# settings


def _settings(args) -> dict:
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    model, grid, opt, sw = (cfg.get(k, {}) for k in ("model", "grid", "optimizer", "sweep"))

    def pick(flag, section, key, default):
        v = getattr(args, flag, None)
        return v if v is not None else section.get(key, default)

    seed = apply_env(opt.get("seed", 0))
    if getattr(args, "seed", None) is not None:
        seed = args.seed
    grid_default = SWEEP_GRID if args.command == "sweep" else DEFAULT_GRID
    return dict(
        mu=pick("mu", model, "mu", 1.0),
        p=pick("p", model, "p", 2.5),
        relaxed=bool(pick("relaxed", model, "relaxed", False)),
        seed=seed,
        grid=dict(node_count=pick("node_count", grid, "node_count", grid_default["node_count"]),
                  r_max=pick("r_max", grid, "r_max", grid_default["r_max"]),
                  scheme=pick("scheme", grid, "scheme", grid_default["scheme"])),
        n_starts=pick("n_starts", opt, "n_starts", 8),
        optimizer={k: v for k, v in dict(
            max_iter=pick("max_iter", opt, "max_iter", None),
            grad_tol=pick("grad_tol", opt, "grad_tol", None),
            rho0_policy=pick("rho0_policy", opt, "rho0_policy", None),
            armijo=opt.get("armijo"), shrink=opt.get("shrink"),
            step_max=opt.get("step_max")).items() if v is not None},
        c_grid=pick("c_grid", sw, "grid", "dyadic:6"),
        warm_start=bool(pick("warm_start", sw, "warm_start", True)),
        timing=bool(pick("timing", sw, "timing", False)),
        subadditivity_tol=pick("subadditivity_tol", sw, "subadditivity_tol", 1e-6),
    )


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def _constants(s: dict):
    return estimate_constants(s["mu"], s["p"], s["seed"], relaxed=s["relaxed"])


def _min_config(s: dict, **extra) -> MinimizeConfig:
    allowed = {f.name for f in dc_fields(MinimizeConfig)}
    kw = {k: v for k, v in s["optimizer"].items() if k in allowed}
    return MinimizeConfig(seed=s["seed"], **kw, **extra)


def _print_checks(checks) -> None:
    for c in checks:
        print(f"{c['verdict'].upper():6s} {c['name']}  value={c['value']!r}  "
              f"tol={c['tolerance']!r}")


# ---------------------------------------------------------------------------
# commands


def cmd_constants(args, s) -> int:
    k = _constants(s)
    _write_json(args.out / "constants.json", k.to_dict())
    _write_json(args.out / "metadata.json", metadata("constants", s["seed"], None, k))
    print(k.to_json())
    return EXIT_OK if abs(k.h_residual) <= 1e-10 else EXIT_CHECK


def cmd_minimize(args, s) -> int:
    k = _constants(s)
    c = args.c if args.c is not None else (args.c_frac or 0.5) * k.c0
    params = ModelParams(s["mu"], s["p"], c, s["relaxed"])
    grid = make_grid(**s["grid"])
    extra = {}
    if args.checkpoint:
        extra = dict(checkpoint_every=args.checkpoint, checkpoint_dir=str(args.out / "checkpoints"))
    cfg = _min_config(s, **extra)
    meta = metadata("minimize", s["seed"], grid, k, c=c, n_starts=s["n_starts"])
    _write_json(args.out / "metadata.json", meta)
    try:
        res = multi_start(params, k, cfg, s["n_starts"], grid)
    except RuntimeError as exc:
        log.error("%s", exc)
        return EXIT_NUMERICAL
    diag = ground_state_diagnostics(res, params, k)
    res.save(args.out / "minimizer")
    _write_json(args.out / "diagnostics.json", diag)
    print(json.dumps({key: diag[key] for key in ("status", "I", "lambda", "A", "rho0", "Q_rel",
                                                 "fiber_t1_is_discrete_min")}, indent=2))
    ok = diag["I"] < 0 and diag["V_margin"] > 0 and diag["Q_rel"] <= 1e-4
    return EXIT_OK if ok else EXIT_CHECK


def cmd_sweep(args, s) -> int:
    k = _constants(s)
    try:
        cs = parse_c_grid(s["c_grid"], k.c0)
    except ValueError as exc:
        raise UsageError(f"bad --grid {s['c_grid']!r}: {exc}") from exc
    grid = make_grid(**s["grid"])
    report = sweep_mass(cs, s["mu"], s["p"], k, _min_config(s), s["n_starts"], grid,
                        s["warm_start"], s["relaxed"])
    checks = list(report.checks)
    checks += check_subadditivity(report, s["subadditivity_tol"])["checks"]
    converged = [r for r in report.records if r.converged]
    if len(report.records) >= 4 and report.c.max() / report.c.min() >= 10.0 * (1 - 1e-12):
        checks += check_ratio_conditions(report)["checks"]
    if converged:
        top = converged[-1]
        checks += check_scaling_paths(report.fields[top.c],
                                      ModelParams(s["mu"], s["p"], top.c, s["relaxed"]))["checks"]
    report.checks = checks
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "sweep.csv").write_text(report.to_csv(s["timing"]))
    _write_json(args.out / "sweep.json", report.to_dict(s["timing"]))
    _write_json(args.out / "metadata.json",
                metadata("sweep", s["seed"], grid, k, c_grid=s["c_grid"],
                         config_hash=report.config_hash, n_starts=s["n_starts"]))
    _print_checks(checks)
    if len(converged) < len(report.records):
        return EXIT_NUMERICAL
    return EXIT_CHECK if report.failed or any(c["verdict"] == "fail" for c in checks) else EXIT_OK


def cmd_fiber(args, s) -> int:
    grid = make_grid(**s["grid"])
    if args.field:
        u = load_field(args.field)
        grid = u.grid
    else:
        u = make_gaussian(args.c, args.sigma, grid)
    params = ModelParams(s["mu"], s["p"], mass(u), s["relaxed"])
    if not 0 < args.t_min < args.t_max or args.t_count < 3:
        raise UsageError("need 0 < t-min < t-max and t-count >= 3")
    scan = fiber.fiber_scan(u, params, np.linspace(args.t_min, args.t_max, args.t_count))
    args.out.mkdir(parents=True, exist_ok=True)
    scan.to_csv(args.out / "fiber.csv")
    _write_json(args.out / "metadata.json", metadata("fiber", s["seed"], grid, None,
                                                     field=args.field, mu=s["mu"], p=s["p"]))
    print(f"Q(u) = {scan.q_at_1:.17g}; local minimum of the scan at t = {scan.argmin_local}")
    return EXIT_OK


def cmd_verify(args, s) -> int:
    checks = run_suite(quick=args.quick, seed=s["seed"])
    _write_json(args.out / "verify.json", checks)
    _write_json(args.out / "metadata.json", metadata("verify", s["seed"], None, None,
                                                     quick=args.quick))
    _print_checks(checks)
    return EXIT_CHECK if any(c["verdict"] == "fail" for c in checks) else EXIT_OK


COMMANDS = dict(constants=cmd_constants, minimize=cmd_minimize, sweep=cmd_sweep,
                fiber=cmd_fiber, verify=cmd_verify)


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        s = _settings(args)
        return COMMANDS[args.command](args, s)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run_cli())
