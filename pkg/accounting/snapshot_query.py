"""
accounting/snapshot_query.py
============================
Runtime query surface over the attribution tree.

take_snapshot() copies the tree into an immutable Snapshot; every other
function here works on snapshots only, so results can be shared freely across
threads and compared across processes (paths are canonical strings, never ids).
"""

import bisect
from typing import Iterable, Literal, Optional

from pydantic import ValidationError

from accounting.attribution import AttributionTree
from errors import InvalidN, MalformedSnapshot
from models import SNAPSHOT_VERSION, DrainFailure, NodeDelta, RollupCell, Snapshot, SnapshotDiff, SnapshotNode, TopEntry
from tagging.tag_model import SEPARATOR, split_path_text

Key = Literal["live", "cumulative"]
Mode = Literal["self", "rollup"]

_KEY_FIELDS = {"live": "live_bytes", "cumulative": "cumulative_bytes"}
_DIFF_FIELDS = ("live_bytes", "live_count", "cumulative_bytes", "cumulative_count")


def take_snapshot(
    tree: AttributionTree,
    *,
    taken_at: int,
    sampling_rate: int = 1,
    enabled: bool = True,
) -> Snapshot:
    cells, total_live, global_peak, unmatched = tree.export()
    registry = tree.registry
    nodes = sorted(
        (
            SnapshotNode(
                path=registry.canonical_path_string(path),
                live_bytes=cell.live_bytes,
                live_count=cell.live_count,
                cumulative_bytes=cell.cumulative_bytes,
                cumulative_count=cell.cumulative_count,
                peak_live_bytes=cell.peak_live_bytes,
            )
            for path, cell in cells.items()
        ),
        key=lambda node: node.path,
    )
    return Snapshot(
        version=SNAPSHOT_VERSION,
        taken_at_ns=taken_at,
        sampling_rate=sampling_rate,
        enabled=enabled,
        total_live_bytes=total_live,
        global_peak_bytes=global_peak,
        unmatched_frees=unmatched,
        nodes=tuple(nodes),
    )


# ---------------------------------------------------------------------------
# Rollups
# ---------------------------------------------------------------------------

def _subtree(snapshot: Snapshot, path: str) -> Iterable[SnapshotNode]:
    """Nodes at or below `path`. Sorted order keeps every "<path>/..." run contiguous."""
    if path == SEPARATOR:
        return snapshot.nodes
    paths = snapshot.paths()
    selected: list[SnapshotNode] = []
    exact = bisect.bisect_left(paths, path)
    if exact < len(paths) and paths[exact] == path:
        selected.append(snapshot.nodes[exact])
    prefix = path + SEPARATOR
    i = bisect.bisect_left(paths, prefix)
    while i < len(paths) and paths[i].startswith(prefix):
        selected.append(snapshot.nodes[i])
        i += 1
    return selected


def _sum(nodes: Iterable[SnapshotNode]) -> RollupCell:
    live_bytes = live_count = cumulative_bytes = cumulative_count = 0
    for node in nodes:
        live_bytes += node.live_bytes
        live_count += node.live_count
        cumulative_bytes += node.cumulative_bytes
        cumulative_count += node.cumulative_count
    return RollupCell(
        live_bytes=live_bytes,
        live_count=live_count,
        cumulative_bytes=cumulative_bytes,
        cumulative_count=cumulative_count,
    )


def rollup(snapshot: Snapshot, path: str) -> RollupCell:
    split_path_text(path)
    return _sum(_subtree(snapshot, path))


def rollups(snapshot: Snapshot) -> dict[str, RollupCell]:
    """Rollup of every node path and every implicit ancestor path, root included."""
    totals: dict[str, list[int]] = {}
    for node in snapshot.nodes:
        segments = node.path[1:].split(SEPARATOR)
        ancestors = [SEPARATOR] + [
            SEPARATOR + SEPARATOR.join(segments[: i + 1]) for i in range(len(segments))
        ]
        for ancestor in ancestors:
            acc = totals.setdefault(ancestor, [0, 0, 0, 0])
            acc[0] += node.live_bytes
            acc[1] += node.live_count
            acc[2] += node.cumulative_bytes
            acc[3] += node.cumulative_count
    result = {
        path: RollupCell(live_bytes=a[0], live_count=a[1], cumulative_bytes=a[2], cumulative_count=a[3])
        for path, a in totals.items()
    }
    result.setdefault(SEPARATOR, RollupCell())
    return result


# ---------------------------------------------------------------------------
# Rankings & comparisons
# ---------------------------------------------------------------------------

def top_n(snapshot: Snapshot, n: int, key: Key = "live", mode: Mode = "self") -> list[TopEntry]:
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InvalidN(n)
    if key not in _KEY_FIELDS:
        raise ValueError(f"key must be 'live' or 'cumulative', got {key!r}")
    field = _KEY_FIELDS[key]
    if mode == "self":
        candidates = [(node.path, getattr(node, field)) for node in snapshot.nodes]
    elif mode == "rollup":
        # Depth-1 subtrees never overlap, so their rollups can be ranked against each other.
        all_rollups = rollups(snapshot)
        candidates = [
            (path, getattr(cell, field))
            for path, cell in all_rollups.items()
            if path != SEPARATOR and SEPARATOR not in path[1:]
        ]
    else:
        raise ValueError(f"mode must be 'self' or 'rollup', got {mode!r}")
    candidates.sort(key=lambda item: (-item[1], item[0]))
    return [TopEntry(path=path, value=value) for path, value in candidates[:n]]


def diff(before: Snapshot, after: Snapshot) -> SnapshotDiff:
    old = {node.path: node for node in before.nodes}
    new = {node.path: node for node in after.nodes}
    entries = []
    for path in sorted(old.keys() | new.keys()):
        a, b = old.get(path), new.get(path)
        deltas = {
            name: (getattr(b, name) if b else 0) - (getattr(a, name) if a else 0)
            for name in _DIFF_FIELDS
        }
        entries.append(NodeDelta(path=path, **deltas))
    return SnapshotDiff(entries=tuple(entries))


def verify_drained(snapshot: Snapshot, path: str) -> Optional[DrainFailure]:
    """None when everything billed under `path` has been freed, a DrainFailure otherwise."""
    cell = rollup(snapshot, path)
    if cell.live_bytes == 0 and cell.live_count == 0:
        return None
    return DrainFailure(path=path, live_bytes=cell.live_bytes, live_count=cell.live_count)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def serialize(snapshot: Snapshot) -> bytes:
    """Canonical form: compact JSON in declaration key order, LF-terminated, UTF-8."""
    return (snapshot.model_dump_json() + "\n").encode("utf-8")


def deserialize(data: bytes | str) -> Snapshot:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MalformedSnapshot(f"not UTF-8: {e}") from e
    try:
        return Snapshot.model_validate_json(data)
    except ValidationError as e:
        raise MalformedSnapshot(str(e)) from e
