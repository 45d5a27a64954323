"""Command-line entry point: run a scenario and write trace, metrics and KB dumps."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import InvariantViolation, ScenarioError
from .scenario import load_scenario


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dtnname", description="Run a NAME routing scenario in the DTN simulator.")
    p.add_argument("--scenario", metavar="PATH", help="scenario file (required)")
    p.add_argument("--trace", metavar="PATH", help="write the event trace here ('-' for stdout)")
    p.add_argument("--metrics", metavar="PATH", default="-",
                   help="write key=value metrics here ('-' for stdout, the default)")
    p.add_argument("--dump-kb", metavar="EID", action="append", default=[],
                   help="print the name knowledge base of EID after the run (repeatable)")
    p.add_argument("--seed", type=int, help="override the scenario's seed")
    p.add_argument("--until", type=float, help="override the scenario's run horizon (seconds)")
    return p


def _write(target: str, text: str) -> None:
    if target == "-":
        sys.stdout.write(text)
    else:
        Path(target).write_text(text, encoding="utf-8", newline="\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.scenario:
        parser.print_usage(sys.stderr)
        print("dtnname: error: --scenario is required", file=sys.stderr)
        return 1
    try:
        scenario = load_scenario(args.scenario)
        until = scenario.until if args.until is None else args.until
        if until < 0:
            raise ScenarioError("--until must be >= 0")
        for eid in args.dump_kb:
            if eid not in scenario.nodes:
                raise ScenarioError(f"--dump-kb: unknown node {eid!r}")
        world = scenario.build_world(seed=args.seed)
    except (OSError, ScenarioError) as exc:
        print(f"dtnname: {exc}", file=sys.stderr)
        return 1

    try:
        metrics = world.run(until)
    except InvariantViolation as exc:
        print(f"dtnname: invariant violated: {exc}", file=sys.stderr)
        return 2

    if args.trace:
        _write(args.trace, "".join(line + "\n" for line in world.trace))
    _write(args.metrics, metrics.to_text())
    for eid in args.dump_kb:
        sys.stdout.write(world.nodes[eid].kb.dump())
    return 0


if __name__ == "__main__":
    sys.exit(main())
