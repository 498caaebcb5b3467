"""Command-line entry points: simulate, optimize, sweep, compare.

Exit codes: 0 success, 1 usage or scenario-file error, 2 solver failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .scenarios import (
    ScenarioError,
    compare,
    load_scenario,
    run,
    sweep,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def build_parser():
    parser = _Parser(prog="citopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_args(p):
        p.add_argument("scenario", help="scenario file path or bundled name")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--solver", choices=("newton", "auglag"), default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--max-iter", type=int, default=None)

    add_run_args(sub.add_parser("simulate", help="run the time-stepping simulator"))
    add_run_args(sub.add_parser("optimize", help="solve the trajectory optimization"))

    p_sweep = sub.add_parser("sweep", help="run a scenario across parameter values")
    add_run_args(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=("r_n", "r_t", "mu", "h"))
    p_sweep.add_argument(
        "--values", required=True, help="comma-separated list, e.g. 0.01,0.1,1,10"
    )

    p_cmp = sub.add_parser("compare", help="per-channel RMSE between two trajectory CSVs")
    p_cmp.add_argument("a")
    p_cmp.add_argument("b")
    p_cmp.add_argument("--out", default=None, help="also write the report CSV here")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "compare":
        try:
            report = compare(args.a, args.b)
        except (ScenarioError, OSError) as exc:
            print(f"citopt: error: {exc}", file=sys.stderr)
            return 1
        print(report.to_text())
        if args.out is not None:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / "compare.csv").write_text(report.to_csv())
        return 0

    try:
        sc = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"citopt: error: {exc}", file=sys.stderr)
        return 1

    if args.command in ("simulate", "optimize"):
        sc.mode = "simulate" if args.command == "simulate" else "optimize"
        try:
            result = run(
                sc,
                out_dir=args.out,
                solver=args.solver,
                tol=args.tol,
                max_iterations=args.max_iter,
            )
        except ScenarioError as exc:
            print(f"citopt: error: {exc}", file=sys.stderr)
            return 1
        for line in result.report.summary_lines():
            print(line)
        print(f"wrote {Path(args.out) / (sc.name + '_trajectory.csv')}")
        return 0 if result.report.converged else 2

    if args.command == "sweep":
        try:
            values = [float(tok) for tok in args.values.split(",") if tok]
        except ValueError:
            print("citopt: error: --values must be a comma-separated float list", file=sys.stderr)
            return 1
        try:
            results, rows = sweep(sc, args.param, values, out_dir=args.out, solver=args.solver)
        except ScenarioError as exc:
            print(f"citopt: error: {exc}", file=sys.stderr)
            return 1
        failed = False
        for row in rows:
            print(", ".join(f"{k}={v}" for k, v in row.items()))
            status = str(row.get("status", ""))
            if status.startswith("error") or status == "line-search-failure":
                failed = True
            if status == "iteration-limit":
                failed = True
        return 2 if failed else 0

    return 1


if __name__ == "__main__":
    sys.exit(main())
