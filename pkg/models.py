"""
models.py - Pydantic schemas for snapshots, query results and budgets.

Field declaration order is the canonical key order of the snapshot file, so
do not reorder fields in SnapshotNode or Snapshot. Every key is required on read.
"""

from typing import Annotated, Literal, Optional

from pydantic import AfterValidator, BaseModel, ConfigDict, Field, StrictBool, StrictInt, field_validator, model_validator

from errors import MalformedPath
from tagging.tag_model import split_path_text

SNAPSHOT_VERSION = 1

ByteCount = Annotated[StrictInt, Field(ge=0)]
SignedCount = StrictInt


def _canonical_path(value: str) -> str:
    try:
        split_path_text(value)
    except MalformedPath as e:
        raise ValueError(e.reason) from e
    return value


CanonicalPath = Annotated[str, AfterValidator(_canonical_path)]


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# ---------------------------------------------------------------------------
# Snapshot
# ---------------------------------------------------------------------------

class SnapshotNode(_Frozen):
    path: CanonicalPath
    live_bytes: ByteCount
    live_count: ByteCount
    cumulative_bytes: ByteCount
    cumulative_count: ByteCount
    peak_live_bytes: ByteCount

    @field_validator("path")
    @classmethod
    def _not_root(cls, value: str) -> str:
        if value == "/":
            raise ValueError("events are never billed to ROOT itself")
        return value

    @model_validator(mode="after")
    def _live_within_cumulative(self) -> "SnapshotNode":
        if self.live_bytes > self.cumulative_bytes:
            raise ValueError("live_bytes exceeds cumulative_bytes")
        if self.live_count > self.cumulative_count:
            raise ValueError("live_count exceeds cumulative_count")
        return self


class Snapshot(_Frozen):
    version: Literal[1]
    taken_at_ns: ByteCount
    sampling_rate: Annotated[StrictInt, Field(ge=1)]
    enabled: StrictBool
    total_live_bytes: ByteCount
    global_peak_bytes: ByteCount
    unmatched_frees: ByteCount
    nodes: tuple[SnapshotNode, ...]

    @field_validator("version", mode="before")
    @classmethod
    def _integer_version(cls, value: object) -> object:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"version must be the integer {SNAPSHOT_VERSION}")
        return value

    @field_validator("nodes")
    @classmethod
    def _strictly_sorted(cls, nodes: tuple[SnapshotNode, ...]) -> tuple[SnapshotNode, ...]:
        for prev, node in zip(nodes, nodes[1:]):
            if node.path == prev.path:
                raise ValueError(f"duplicate node path {node.path!r}")
            if node.path < prev.path:
                raise ValueError(f"nodes not sorted: {node.path!r} after {prev.path!r}")
        return nodes

    def node(self, path: str) -> Optional[SnapshotNode]:
        for node in self.nodes:
            if node.path == path:
                return node
        return None

    def paths(self) -> list[str]:
        return [node.path for node in self.nodes]


# ---------------------------------------------------------------------------
# Query results
# ---------------------------------------------------------------------------

class RollupCell(_Frozen):
    """A node's stats summed with all of its descendants. Peaks do not add up, so there is none."""
    live_bytes: ByteCount = 0
    live_count: ByteCount = 0
    cumulative_bytes: ByteCount = 0
    cumulative_count: ByteCount = 0


class TopEntry(_Frozen):
    path: str
    value: ByteCount


class NodeDelta(_Frozen):
    path: str
    live_bytes: SignedCount = 0
    live_count: SignedCount = 0
    cumulative_bytes: SignedCount = 0
    cumulative_count: SignedCount = 0

    @property
    def is_zero(self) -> bool:
        return not (self.live_bytes or self.live_count or self.cumulative_bytes or self.cumulative_count)


class SnapshotDiff(_Frozen):
    """after-minus-before per path, for every path present in either snapshot."""
    entries: tuple[NodeDelta, ...] = ()

    def delta(self, path: str) -> NodeDelta:
        for entry in self.entries:
            if entry.path == path:
                return entry
        return NodeDelta(path=path)

    @property
    def is_zero(self) -> bool:
        return all(entry.is_zero for entry in self.entries)


class DrainFailure(_Frozen):
    path: str
    live_bytes: ByteCount
    live_count: ByteCount


# ---------------------------------------------------------------------------
# Budgets
# ---------------------------------------------------------------------------

class Budget(_Frozen):
    path: CanonicalPath
    max_bytes: ByteCount


class Exceedance(_Frozen):
    path: str
    limit: ByteCount
    actual: ByteCount
    overshoot: ByteCount
