"""Command line interface: ``run``, ``solve``, ``analyze`` and ``pde``.

Exit codes are 0 on success, 1 for invalid configuration or input, and 2
for numerical failures (including flagged solver runs in ``run``).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import nsp_grid_scan, rip_constant_exact, rip_implied_nsp_constants
from .harness import (ConfigError, ErrorRecord, ExperimentConfig, emit_report,
                      result_metadata, run_experiment)
from .hilbert import InnerProduct, load_csv
from .operator import ConvergenceError, Measurements, SamplingOperator, load_samples
from .pde import DiffusionCoefficient, NumericalError, PdeProblem, export_csv, solve_pde
from .solver import SolverConfig, solve, solve_continuation

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2

# Flags generated from ExperimentConfig; lists take several values.
_LIST_FIELDS = {"sdof_schedule": int, "methods": str, "mu_grid": float}
_SCALAR_FIELDS = {"d": int, "p": int, "K": int, "trials": int, "seed": int, "variant": str,
                  "Lc": float, "amplitude_scale": float, "mu_selection": str,
                  "mu_factor": float, "cv_folds": int, "eta": float,
                  "reference_method": str, "reference_degree": int,
                  "reference_factor": int, "output_dir": str, "workers": int}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _parse_assignments(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"expected KEY=VALUE, got {item!r}")
        try:
            out[key.replace("-", "_")] = json.loads(value)
        except json.JSONDecodeError:
            out[key.replace("-", "_")] = value
    return out


def _add_run(sub) -> None:
    p = sub.add_parser("run", help="full convergence experiment")
    p.add_argument("--config", type=Path, help="JSON config; flags override its entries")
    for name, typ in _SCALAR_FIELDS.items():
        p.add_argument(_flag(name), type=typ, default=None)
    for name, typ in _LIST_FIELDS.items():
        p.add_argument(_flag(name), type=typ, nargs="+", default=None)
    p.add_argument("--solver", action="append", metavar="KEY=VALUE",
                   help="solver setting, e.g. tol_kkt=1e-6 (repeatable)")


def _add_solve(sub) -> None:
    p = sub.add_parser("solve", help="single recovery from a saved matrix and data")
    p.add_argument("matrix", type=Path, help="A as CSV, one matrix row per line")
    p.add_argument("data", type=Path, help="u in the row,col,value format")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--tol-kkt", type=float, default=1e-8)
    p.add_argument("--tol-fixed-point", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--history", action="store_true", help="record objective and support")
    p.add_argument("--continuation", action="store_true",
                   help="warm-start from a small mu (ignores --history)")
    p.add_argument("--output", type=Path, default=Path("report.json"))


def _add_analyze(sub) -> None:
    p = sub.add_parser("analyze", help="restricted isometry and null space checks")
    p.add_argument("matrix", type=Path, help="A as CSV, one matrix row per line")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--suite", choices=["rip", "nsp", "all"], default="all")
    p.add_argument("--rho", type=float, nargs="+", default=[0.5, 0.75, 0.9])
    p.add_argument("--tau", type=float, nargs="+", default=[1.0, 2.0, 5.0])
    p.add_argument("--K", type=int, default=1)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", type=Path, default=None, help="JSON file (default stdout)")


def _add_pde(sub) -> None:
    p = sub.add_parser("pde", help="single diffusion solve exported as node,value CSV")
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--K", type=int, default=63)
    p.add_argument("--Lc", type=float, default=0.5)
    p.add_argument("--variant", choices=["affine", "log"], default="affine")
    p.add_argument("--amplitude-scale", type=float, default=1.0)
    p.add_argument("--t", type=float, nargs="+", default=None,
                   help="parameter point in (-sqrt3, sqrt3)^d (default 0)")
    p.add_argument("--output", type=Path, default=Path("solution.csv"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hilbertcs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_solve(sub)
    _add_analyze(sub)
    _add_pde(sub)
    return parser


def config_from_args(args) -> ExperimentConfig:
    """Merge the JSON config (if any) with explicitly given flags."""
    data = {}
    if args.config is not None:
        data = ExperimentConfig.load(args.config).to_dict()
    for name in list(_SCALAR_FIELDS) + list(_LIST_FIELDS):
        value = getattr(args, name)
        if value is not None:
            data[name] = value
    if args.solver:
        solver = dict(data.get("solver", ExperimentConfig().solver))
        solver.update(_parse_assignments(args.solver))
        data["solver"] = solver
    known = {f.name for f in fields(ExperimentConfig)}
    return ExperimentConfig.from_dict({k: v for k, v in data.items() if k in known})


def reference_record(result) -> ErrorRecord:
    """The reference error floor as a record tagged ``reference``."""
    ref = result.reference
    return ErrorRecord("reference", ref.m_ref, 0, ref.floor_mean, ref.floor_std)


def _cmd_run(args) -> int:
    config = config_from_args(args)
    result = run_experiment(config)
    records = result.records + [reference_record(result)]
    paths = emit_report(records, config.output_dir, config, result_metadata(result))
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    if result.flagged:
        print(f"{len(result.flagged)} solver runs did not converge", file=sys.stderr)
    return result.exit_code


def _load_matrix(path: Path) -> np.ndarray:
    try:
        a = load_samples(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read matrix {path}: {exc}") from exc
    if a.ndim != 2 or a.size == 0:
        raise ConfigError(f"{path} holds no matrix")
    return a


def _cmd_solve(args) -> int:
    op = SamplingOperator.from_matrix(_load_matrix(args.matrix))
    try:
        x = load_csv(args.data)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read data {args.data}: {exc}") from exc
    u = Measurements(x.data, x.ip)
    try:
        cfg = SolverConfig(mu=args.mu, step=args.step, tol_kkt=args.tol_kkt,
                           tol_fixed_point=args.tol_fixed_point, max_iter=args.max_iter,
                           record_history=args.history)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.continuation:
        rep = solve_continuation(op, u, args.mu, cfg)
    else:
        rep = solve(op, u, cfg=cfg)
    path = rep.save(args.output)
    print(f"{rep.termination} after {rep.iterations} iterations, "
          f"kkt residual {rep.kkt_residual:.3e}: {path}")
    return EXIT_OK if rep.converged else EXIT_NUMERICAL


def _cmd_analyze(args) -> int:
    a = _load_matrix(args.matrix)
    out: dict = {"s": args.s, "shape": list(a.shape)}
    if args.suite in ("rip", "all"):
        out["rip"] = [rip_constant_exact(a, k).to_dict() for k in range(1, args.s + 1)]
        if 2 * args.s <= min(a.shape[1], 20):
            delta = rip_constant_exact(a, 2 * args.s).delta_s
            out["rip_2s"] = delta
            if delta < 4 / np.sqrt(41):
                out["implied_nsp_constants"] = list(rip_implied_nsp_constants(delta))
    if args.suite in ("nsp", "all"):
        ip = InnerProduct(args.K)
        scan = nsp_grid_scan(a, args.s, args.rho, args.tau, args.trials, ip, args.K, args.seed)
        out["nsp"] = [w.to_dict() for w in scan]
    text = json.dumps(out, indent=1)
    if args.output is None:
        print(text)
    else:
        args.output.write_text(text + "\n")
    return EXIT_OK


def _cmd_pde(args) -> int:
    coef = DiffusionCoefficient(args.d, args.Lc, args.variant, scale=args.amplitude_scale)
    t = np.zeros(args.d) if args.t is None else np.asarray(args.t, dtype=float)
    if t.shape != (args.d,):
        raise ConfigError(f"--t needs {args.d} values, got {t.size}")
    problem = PdeProblem(args.K, coef)
    values = solve_pde(problem, t)
    export_csv(args.output, problem.nodes, values)
    print(f"H1 norm {problem.h1_norm(values):.6e}: {args.output}")
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "solve": _cmd_solve, "analyze": _cmd_analyze, "pde": _cmd_pde}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (NumericalError, ConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
