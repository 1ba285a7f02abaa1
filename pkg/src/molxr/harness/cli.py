"""Harness command line.

    harness run <scenario-file> [--server <url>] [--seed N] [--report <path>]

Exit 0 when every scenario assertion passed, 1 otherwise.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

from .scenario import ScenarioTimeout, load_scenario, run_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harness",
                                     description="Headless multi-client scenario runner.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute one scenario file")
    run.add_argument("scenario", help="scenario JSON file")
    run.add_argument("--server", default=None,
                     help="existing server URL (default: in-process server)")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--report", default=None, help="write the JSON report here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = load_scenario(args.scenario)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"harness: cannot load {args.scenario}: {exc}", file=sys.stderr)
        return 1
    try:
        report = asyncio.run(run_scenario(spec, server_url=args.server, seed=args.seed))
    except ScenarioTimeout as exc:
        print(f"harness: {exc}", file=sys.stderr)
        return 1
    print(report.summary())
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_json(), indent=2) + "\n")
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
