"""
main.py - memattr command-line reporter over serialized snapshots.

Usage:
    python main.py report snap.json [--min-bytes B] [--depth D] [--human]
    python main.py top snap.json [--n 10] [--key live|cumulative] [--mode self|rollup]
    python main.py diff before.json after.json [--key live|cumulative]
    python main.py check snap.json budgets.tsv
    python main.py verify snap.json /driver [/other ...]

Exit codes: 0 success/compliant, 1 budget exceeded or leak found,
2 usage error, 3 input parse error.
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from accounting.budgets import check_budgets, load_budgets
from accounting.snapshot_query import diff, top_n, verify_drained
from config import get_settings
from errors import MalformedBudgets, MalformedPath, MalformedSnapshot
from models import Snapshot
from reporting.reports import render_check, render_diff, render_report, render_top, render_verify
from reporting.snapshot_store import load_snapshot
from tagging.tag_model import split_path_text


EXIT_OK = 0
EXIT_FINDING = 1
EXIT_USAGE = 2
EXIT_INPUT = 3


class InputError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _non_negative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _tag_path(text: str) -> str:
    try:
        split_path_text(text)
    except MalformedPath as e:
        raise argparse.ArgumentTypeError(str(e))
    return text


def _read_snapshot(path: str) -> Snapshot:
    try:
        return load_snapshot(path)
    except (OSError, MalformedSnapshot) as e:
        raise InputError(f"{path}: {e}") from e


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_report(args: argparse.Namespace) -> int:
    snapshot = _read_snapshot(args.snapshot)
    sys.stdout.write(render_report(snapshot, min_bytes=args.min_bytes, max_depth=args.depth, human=args.human))
    return EXIT_OK


def cmd_top(args: argparse.Namespace) -> int:
    snapshot = _read_snapshot(args.snapshot)
    sys.stdout.write(render_top(top_n(snapshot, args.n, key=args.key, mode=args.mode)))
    return EXIT_OK


def cmd_diff(args: argparse.Namespace) -> int:
    before = _read_snapshot(args.before)
    after = _read_snapshot(args.after)
    sys.stdout.write(render_diff(diff(before, after), key=args.key))
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    snapshot = _read_snapshot(args.snapshot)
    try:
        budgets = load_budgets(args.budgets)
    except (OSError, MalformedBudgets) as e:
        raise InputError(f"{args.budgets}: {e}") from e
    exceedances = check_budgets(snapshot, budgets)
    sys.stdout.write(render_check(exceedances))
    return EXIT_FINDING if exceedances else EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    snapshot = _read_snapshot(args.snapshot)
    results = [(path, verify_drained(snapshot, path)) for path in args.paths]
    sys.stdout.write(render_verify(results))
    return EXIT_FINDING if any(failure for _, failure in results) else EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memattr", description="Memory attribution snapshot reporter")
    parser.add_argument("--version", action="version", version=f"%(prog)s {get_settings().app_version}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("report", help="Hierarchical attribution report")
    p.add_argument("snapshot")
    p.add_argument("--min-bytes", type=_non_negative_int, default=0, help="Hide rows with rollup live bytes below B")
    p.add_argument("--depth", type=_positive_int, default=None, help="Hide rows deeper than D segments")
    p.add_argument("--human", action="store_true", help="Add binary units next to byte counts")
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("top", help="Largest tag paths")
    p.add_argument("snapshot")
    p.add_argument("--n", type=_positive_int, default=10)
    p.add_argument("--key", choices=["live", "cumulative"], default="live")
    p.add_argument("--mode", choices=["self", "rollup"], default="self")
    p.set_defaults(handler=cmd_top)

    p = sub.add_parser("diff", help="Per-path change between two snapshots")
    p.add_argument("before")
    p.add_argument("after")
    p.add_argument("--key", choices=["live", "cumulative"], default="live")
    p.set_defaults(handler=cmd_diff)

    p = sub.add_parser("check", help="Check rolled-up live bytes against budgets")
    p.add_argument("snapshot")
    p.add_argument("budgets")
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser("verify", help="Verify that tag paths hold no live allocations")
    p.add_argument("snapshot")
    p.add_argument("paths", nargs="+", type=_tag_path, metavar="path")
    p.set_defaults(handler=cmd_verify)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        settings = get_settings()
    except ValidationError as e:
        print(f"memattr: error: invalid MEMATTR_* configuration: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=settings.log_level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except InputError as e:
        print(f"memattr: error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
