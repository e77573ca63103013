"""
reporting/reports.py
====================
Text rendering for the CLI. Every number printed comes straight from
accounting.snapshot_query / accounting.budgets; this module only formats.
Output is a pure function of the inputs so it can be compared against golden files.
"""

from dataclasses import dataclass, field
from typing import Iterable, Optional

from accounting.snapshot_query import rollups
from models import DrainFailure, Exceedance, RollupCell, Snapshot, SnapshotDiff, TopEntry
from tagging.tag_model import SEPARATOR

NO_ALLOCATIONS = "(no allocations)"
NO_CHANGE = "(no change)"

_UNITS = ("KiB", "MiB", "GiB", "TiB", "PiB")


def humanize_bytes(n: int) -> str:
    if abs(n) < 1024:
        return f"{n} B"
    value = float(n)
    for unit in _UNITS:
        value /= 1024
        if abs(value) < 1024 or unit == _UNITS[-1]:
            return f"{value:.1f} {unit}"
    raise AssertionError("unreachable")


def _fmt_bytes(n: int, human: bool) -> str:
    return f"{n} ({humanize_bytes(n)})" if human else str(n)


# ---------------------------------------------------------------------------
# Report tree
# ---------------------------------------------------------------------------

@dataclass
class ReportRow:
    path: str
    depth: int
    rollup: RollupCell
    self_live_bytes: int
    children: list["ReportRow"] = field(default_factory=list)


def _parent(path: str) -> str:
    head = path.rsplit(SEPARATOR, 1)[0]
    return head or SEPARATOR


def build_report_tree(snapshot: Snapshot) -> list[ReportRow]:
    """Top-level rows, each nesting its children: rollup live desc, then name asc."""
    all_rollups = rollups(snapshot)
    self_live = {node.path: node.live_bytes for node in snapshot.nodes}
    rows = {
        path: ReportRow(
            path=path,
            depth=path.count(SEPARATOR),
            rollup=cell,
            self_live_bytes=self_live.get(path, 0),
        )
        for path, cell in all_rollups.items()
        if path != SEPARATOR
    }
    top: list[ReportRow] = []
    for path, row in rows.items():
        parent = _parent(path)
        (top if parent == SEPARATOR else rows[parent].children).append(row)

    def order(siblings: list[ReportRow]) -> None:
        siblings.sort(key=lambda r: (-r.rollup.live_bytes, r.path.rsplit(SEPARATOR, 1)[1]))
        for r in siblings:
            order(r.children)

    order(top)
    return top


def render_report(
    snapshot: Snapshot,
    min_bytes: int = 0,
    max_depth: Optional[int] = None,
    human: bool = False,
) -> str:
    width = 26 if human else 14
    lines = [
        "memattr report: "
        f"total_live_bytes={snapshot.total_live_bytes} "
        f"global_peak_bytes={snapshot.global_peak_bytes} "
        f"unmatched_frees={snapshot.unmatched_frees} "
        f"sampling_rate={snapshot.sampling_rate} "
        f"enabled={'true' if snapshot.enabled else 'false'}",
        f"{'ROLLUP_LIVE':>{width}} {'SELF_LIVE':>{width}} {'LIVE_COUNT':>12} {'CUMULATIVE':>{width}}  PATH",
    ]
    if not snapshot.nodes:
        lines.append(NO_ALLOCATIONS)
        return "\n".join(lines) + "\n"

    def emit(rows: list[ReportRow]) -> None:
        for row in rows:
            if row.rollup.live_bytes < min_bytes:
                continue
            if max_depth is not None and row.depth > max_depth:
                continue
            lines.append(
                f"{_fmt_bytes(row.rollup.live_bytes, human):>{width}} "
                f"{_fmt_bytes(row.self_live_bytes, human):>{width}} "
                f"{row.rollup.live_count:>12} "
                f"{_fmt_bytes(row.rollup.cumulative_bytes, human):>{width}}  "
                f"{'  ' * (row.depth - 1)}{row.path}"
            )
            emit(row.children)

    emit(build_report_tree(snapshot))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Tables & verdicts
# ---------------------------------------------------------------------------

def render_top(entries: Iterable[TopEntry]) -> str:
    return "".join(f"{e.path} {e.value}\n" for e in entries)


def render_diff(snapshot_diff: SnapshotDiff, key: str = "live") -> str:
    field_name = "live_bytes" if key == "live" else "cumulative_bytes"
    rows = [
        (entry.path, getattr(entry, field_name))
        for entry in snapshot_diff.entries
        if getattr(entry, field_name) != 0
    ]
    if not rows:
        return NO_CHANGE + "\n"
    rows.sort(key=lambda r: (-r[1], r[0]))
    return "".join(f"{path} {delta:+d}\n" for path, delta in rows)


def render_check(exceedances: list[Exceedance]) -> str:
    if not exceedances:
        return "OK\n"
    return "".join(
        f"{e.path} limit={e.limit} actual={e.actual} over={e.overshoot}\n" for e in exceedances
    )


def render_verify(results: Iterable[tuple[str, Optional[DrainFailure]]]) -> str:
    lines = []
    for path, failure in results:
        if failure is None:
            lines.append(f"drained {path}")
        else:
            lines.append(f"LEAK {path} live_bytes={failure.live_bytes} live_count={failure.live_count}")
    return "\n".join(lines) + "\n"
