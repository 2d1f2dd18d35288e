"""Command-line entry point: run / check / demo."""

from __future__ import annotations

import argparse
import json
import sys
import tempfile
from pathlib import Path

from .demos import DEMOS, demo_scenario
from .funcs import KoforgeError
from .scenarios import Scenario, check_scenario, emit_report, execute_scenario, exit_code, run_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="koforge",
        description="Keller-Osserman condition classification, radial barriers, "
                    "and weighted comparison geometry",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario file")
    run_p.add_argument("scenario", type=Path)
    run_p.add_argument("--out", type=Path, default=None, help="output directory")
    run_p.add_argument("--strict", action="store_true",
                       help="failed hypothesis checks abort dependent tasks (exit 2)")
    run_p.add_argument("--grid", type=int, default=None, help="grid size override")
    run_p.add_argument("--seed", type=int, default=None, help="seed for randomized tasks")
    run_p.add_argument("--no-figures", action="store_true", help="skip figure rendering")

    check_p = sub.add_parser("check", help="validate a scenario file")
    check_p.add_argument("scenario", type=Path)

    demo_p = sub.add_parser("demo", help="run a built-in demo scenario")
    demo_p.add_argument("name", choices=sorted(DEMOS) + ["all"])
    demo_p.add_argument("--out", type=Path, default=Path("demo-out"))
    demo_p.add_argument("--strict", action="store_true")
    demo_p.add_argument("--no-figures", action="store_true")
    return parser


def _run_demo(name: str, out: Path, strict: bool, figures: bool) -> int:
    names = sorted(DEMOS) if name == "all" else [name]
    worst = 0
    for demo_name in names:
        blob = demo_scenario(demo_name)
        scn = Scenario.from_json(blob)
        target = out / demo_name if name == "all" else out
        try:
            results = execute_scenario(scn, strict=strict)
            emit_report(scn, results, target, figures=figures)
        except KoforgeError as err:
            print(f"{demo_name}: error: {err}", file=sys.stderr)
            worst = max(worst, 1)
            continue
        code = exit_code(results, strict)
        worst = max(worst, code)
        bad = [r.name for r in results if r.status in ("error", "failed")]
        print(f"{demo_name}: exit {code}" + (f" ({', '.join(bad)})" if bad else ""))
    return worst


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return run_scenario(args.scenario, out_dir=args.out, strict=args.strict,
                            grid=args.grid, seed=args.seed,
                            figures=not args.no_figures)
    if args.command == "check":
        return check_scenario(args.scenario)
    if args.command == "demo":
        return _run_demo(args.name, args.out, args.strict, not args.no_figures)
    return 2


if __name__ == "__main__":
    sys.exit(main())
