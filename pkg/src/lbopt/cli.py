"""Command-line entry point.

Subcommands:
    lbopt run <config.json>           execute an experiment (resumable)
    lbopt aggregate <results.csv>     print aggregated running-best curves
    lbopt report <results.csv> <dir>  write curve/normalization files
    lbopt verify                      run the property and acceptance suites

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
The default output directory can be set with LBOPT_OUTDIR.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
from pathlib import Path

from . import harness
from .harness import ConfigError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lbopt")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--outdir", default=None)

    p_agg = sub.add_parser("aggregate", help="aggregate a results table")
    p_agg.add_argument("table")
    p_agg.add_argument("--tasks", default=None,
                       help="comma-separated task subset, e.g. 1,2,3")

    p_rep = sub.add_parser("report", help="write report files from a results table")
    p_rep.add_argument("table")
    p_rep.add_argument("outdir")
    p_rep.add_argument("--render", action="store_true",
                       help="also render curves (requires matplotlib)")

    sub.add_parser("verify", help="run the test suites")

    args = parser.parse_args(argv)
    try:
        if args.cmd == "run":
            return _cmd_run(args)
        if args.cmd == "aggregate":
            return _cmd_aggregate(args)
        if args.cmd == "report":
            return _cmd_report(args)
        if args.cmd == "verify":
            return _cmd_verify()
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {e}", file=sys.stderr)
        return 2
    return 0


def _cmd_run(args) -> int:
    config = harness.load_config(args.config)
    outdir = args.outdir or os.environ.get("LBOPT_OUTDIR")
    if outdir:
        config.outdir = outdir
    rows, timing = harness.run(config)
    harness.report(rows, config.outdir, timing_rows=timing)
    print(f"wrote {len(rows)} rows to {Path(config.outdir) / 'results.csv'}")
    return 0


def _cmd_aggregate(args) -> int:
    rows = harness.load_table(args.table)
    tasks = [int(t) for t in args.tasks.split(",")] if args.tasks else None
    agg = harness.aggregate(rows, tasks=tasks)
    print(json.dumps(agg, indent=2))
    return 0


def _cmd_report(args) -> int:
    rows = harness.load_table(args.table)
    harness.report(rows, args.outdir, render=args.render)
    print(f"report written to {args.outdir}")
    return 0


def _cmd_verify() -> int:
    tests = Path(__file__).resolve().parents[2] / "tests"
    if not tests.is_dir():
        print("test directory not found; install from a source checkout", file=sys.stderr)
        return 2
    res = subprocess.run([sys.executable, "-m", "pytest", str(tests), "-q"])
    return 0 if res.returncode == 0 else 2


if __name__ == "__main__":
    sys.exit(main())
