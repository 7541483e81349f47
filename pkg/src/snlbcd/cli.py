"""Command line interface.

Subcommands:
    generate   draw a synthetic instance and write an instance file
    solve      localize an instance file and write a solution file
    bench      run a benchmark grid, write a CSV summary
    eval       score a solution file against an instance file carrying truth

The radio range --rho accepts a literal number or the symbolic forms
"sqrt(<c>/m)" and "cbrt(<c>/m)", resolved with that command's m.  When --out
is omitted, outputs land in $SNLBCD_OUT_DIR (or the working directory) under
a derived name.

Exit codes: 0 success, 2 usage error or invalid parameter value, 3 missing or
malformed file, 4 connectivity assumption violated (some sensor cannot reach
any anchor).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    DisconnectedInstanceError,
    FileFormatError,
    MalformedInstanceError,
    SnlError,
)
from .evaluate import make_report, rmsd, run_benchmark
from .fileio import read_instance, read_solution, write_instance, write_solution
from .generate import GenSpec, generate, initial_point, random_interior_point
from .model import FactorPair, check_connectivity, edge_residuals
from .schedule import ScheduleConfig
from .solver import SolverConfig, solve

__all__ = ["main"]

OUT_DIR_ENV = "SNLBCD_OUT_DIR"

_RHO_PATTERN = re.compile(r"^(sqrt|cbrt)\(([0-9.eE+-]+)/m\)$")


def parse_rho(text: str, m: int) -> float:
    """Resolve a --rho value: a literal, sqrt(c/m), or cbrt(c/m)."""
    raw = text.strip().replace(" ", "")
    try:
        return float(raw)
    except ValueError:
        pass
    match = _RHO_PATTERN.match(raw)
    if match:
        func, const = match.groups()
        try:
            c = float(const)
        except ValueError as exc:
            raise ConfigError(f"bad rho expression {text!r}") from exc
        if c <= 0:
            raise ConfigError(f"rho expression constant must be > 0, got {text!r}")
        ratio = c / m
        return math.sqrt(ratio) if func == "sqrt" else ratio ** (1.0 / 3.0)
    raise ConfigError(
        f"bad rho value {text!r}: use a number, sqrt(<c>/m), or cbrt(<c>/m)"
    )


def _resolve_out(given: str | None, default_name: str) -> Path:
    if given:
        return Path(given)
    return Path(os.environ.get(OUT_DIR_ENV) or ".") / default_name


def cmd_generate(args: argparse.Namespace) -> int:
    raw_rho = args.rho.strip()
    rho = parse_rho(raw_rho, args.m)
    try:
        float(raw_rho)
        rho_expr = None
    except ValueError:
        rho_expr = raw_rho
    spec = GenSpec(
        m=args.m, n=args.n, dim=args.dim, rho=rho, sigma=args.sigma, seed=args.seed
    )
    instance = generate(spec)
    connected = check_connectivity(instance)
    out = _resolve_out(args.out, f"instance_m{args.m}_seed{args.seed}.json")
    meta = {
        "m": args.m,
        "n": args.n,
        "dim": args.dim,
        "rho": rho,
        "rho_expr": rho_expr,
        "sigma": args.sigma,
        "seed": args.seed,
    }
    write_instance(instance, out, generation=meta)
    status = "connected" if connected else "DISCONNECTED (resample advised)"
    print(
        f"wrote {out}: m={args.m} n={args.n} dim={args.dim} "
        f"ss_edges={instance.num_ss_edges} sa_edges={instance.num_sa_edges} "
        f"{status}"
    )
    return 0


def _initial_factors(instance, args: argparse.Namespace) -> FactorPair:
    if args.init == "nearest-anchor":
        return initial_point(instance)
    if args.init == "interior":
        return random_interior_point(instance, args.seed)
    if args.init_file is None:
        raise ConfigError("--init file requires --init-file PATH")
    data = read_solution(args.init_file)
    expect = (instance.num_sensors, instance.dim)
    if data.estimates.shape != expect:
        raise FileFormatError(
            f"{args.init_file}: estimates shape {data.estimates.shape} does not "
            f"match the instance {expect}"
        )
    U = np.ascontiguousarray(data.estimates.T)
    return FactorPair(U, U.copy())


def cmd_solve(args: argparse.Namespace) -> int:
    instance = read_instance(args.instance)
    if args.gamma == "auto":
        gamma = None
    else:
        try:
            gamma = float(args.gamma)
        except ValueError as exc:
            raise ConfigError(
                f"--gamma must be a number or 'auto', got {args.gamma!r}"
            ) from exc
    config = SolverConfig(
        epsilon=args.epsilon,
        max_sweeps=args.max_sweeps,
        gamma_mode=args.gamma_mode,
        gamma=gamma,
        gamma_scale=args.gamma_scale,
        schedule=ScheduleConfig(
            warm_factor=args.warm_factor, plateau_tol=args.plateau_tol
        ),
    )
    initial = _initial_factors(instance, args)
    result = solve(instance, initial, config)
    report = make_report(instance, result)
    out = _resolve_out(args.out, Path(args.instance).stem + "_solution.json")
    write_solution(report, result.trace, out, instance_path=str(args.instance))
    score = "n/a" if report.rmsd is None else f"{report.rmsd:.6e}"
    print(
        f"misfit={report.misfit_final:.6e} rmsd={score} "
        f"sweeps={report.sweeps} time={report.wall_time_s:.3f}s "
        f"termination={report.termination} -> {out}"
    )
    return 0


def _load_grid(path: str) -> list[GenSpec]:
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise FileFormatError(f"cannot read {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{p} is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise FileFormatError(f"{p}: a grid file is a JSON list of spec objects")
    specs = []
    for idx, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise FileFormatError(f"{p}: grid entry {idx} must be an object")
        try:
            m = int(entry["m"])
            n = int(entry["n"])
            dim = int(entry.get("dim", 2))
            rho_raw = entry["rho"]
            rho = (
                parse_rho(rho_raw, m) if isinstance(rho_raw, str) else float(rho_raw)
            )
            specs.append(
                GenSpec(
                    m=m,
                    n=n,
                    dim=dim,
                    rho=rho,
                    sigma=float(entry.get("sigma", 0.0)),
                    seed=int(entry.get("seed", 0)),
                )
            )
        except (KeyError, TypeError, ValueError, ConfigError) as exc:
            raise FileFormatError(f"{p}: grid entry {idx} is invalid: {exc}") from exc
    return specs


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def cmd_bench(args: argparse.Namespace) -> int:
    specs = _load_grid(args.grid)
    rows = run_benchmark(specs, SolverConfig(), repetitions=args.reps)
    out = _resolve_out(args.out, "bench.csv")
    fields = [
        "m", "n", "dim", "rho", "sigma", "reps",
        "mean_cpu_s", "mean_rmsd", "failures",
    ]
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_csv_cell(getattr(row, name)) for name in fields])
    for row in rows:
        print(
            f"m={row.m} n={row.n} rho={row.rho:g} sigma={row.sigma:g} "
            f"mean_cpu_s={row.mean_cpu_s:.3f} mean_rmsd={row.mean_rmsd:.4e} "
            f"failures={row.failures}"
        )
    print(f"wrote {out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    data = read_solution(args.solution)
    instance = read_instance(args.instance)
    if instance.truth is None:
        raise FileFormatError(f"{args.instance}: no truth stored; cannot evaluate")
    expect = (instance.num_sensors, instance.dim)
    if data.estimates.shape != expect:
        raise FileFormatError(
            f"{args.solution}: estimates shape {data.estimates.shape} does not "
            f"match the instance {expect}"
        )
    score = rmsd(data.estimates, instance.truth)
    X = np.ascontiguousarray(data.estimates.T)
    r_ss, r_sa = edge_residuals(instance, X, X)
    residuals = np.concatenate([r_ss, r_sa])
    max_abs = float(np.max(np.abs(residuals))) if len(residuals) else 0.0
    stored = "n/a" if data.report.rmsd is None else f"{data.report.rmsd:.6e}"
    print(f"rmsd={score:.6e} stored_rmsd={stored} max_abs_residual={max_abs:.6e}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snlbcd",
        description="Sensor network localization by penalized block coordinate descent",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a synthetic instance")
    g.add_argument("--m", type=int, required=True, help="number of sensors")
    g.add_argument("--n", type=int, required=True, help="number of anchors")
    g.add_argument("--dim", type=int, default=2, help="ambient dimension")
    g.add_argument(
        "--rho", required=True,
        help="radio range: number, sqrt(<c>/m), or cbrt(<c>/m)",
    )
    g.add_argument("--sigma", type=float, default=0.0, help="noise level")
    g.add_argument("--seed", type=int, default=0, help="generation seed")
    g.add_argument("--out", default=None, help="output instance file")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("--instance", required=True, help="instance file to solve")
    s.add_argument("--out", default=None, help="output solution file")
    s.add_argument("--epsilon", type=float, default=1e-5, help="stopping tolerance")
    s.add_argument(
        "--gamma-mode", choices=("fixed", "scheduled"), default="scheduled",
        help="penalty weight policy",
    )
    s.add_argument(
        "--gamma", default="auto",
        help="fixed-mode weight: a number, or 'auto' for the agreement threshold",
    )
    s.add_argument(
        "--gamma-scale", type=float, default=1.0,
        help="multiplier on the auto threshold (fixed mode)",
    )
    s.add_argument(
        "--init", choices=("nearest-anchor", "interior", "file"),
        default="nearest-anchor", help="initial point heuristic",
    )
    s.add_argument(
        "--init-file", default=None,
        help="solution file whose estimates seed the factors (with --init file)",
    )
    s.add_argument("--max-sweeps", type=int, default=10_000, help="sweep cap")
    s.add_argument("--seed", type=int, default=0, help="seed for --init interior")
    s.add_argument(
        "--warm-factor", type=float, default=5e-3,
        help="scheduled mode: initial weight as a fraction of the threshold",
    )
    s.add_argument(
        "--plateau-tol", type=float, default=1e-2,
        help="scheduled mode: relative misfit change that triggers the restart",
    )
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a benchmark grid")
    b.add_argument("--grid", required=True, help="JSON list of generation specs")
    b.add_argument("--reps", type=int, default=5, help="repetitions per spec")
    b.add_argument("--out", default=None, help="output CSV file")
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("eval", help="score a solution against truth")
    e.add_argument("--solution", required=True, help="solution file")
    e.add_argument("--instance", required=True, help="instance file with truth")
    e.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileFormatError, MalformedInstanceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DisconnectedInstanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SnlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
