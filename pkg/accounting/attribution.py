"""
accounting/attribution.py
=========================
The attribution tree: one self StatCell per tag path plus the live-allocation
side table, updated by alloc / free / resize events.

Architecture:
- Per-allocation metadata lives in a side table keyed by address, never in a
  header in front of user memory, so the tree is a pure state machine.
- Frees are billed to the path recorded at allocation time, whichever thread
  or scope performs them.
- Counters are weighted: a sampled record of weight N stands for N events.
  Weight 1 is exact tracking.
"""

import logging
from dataclasses import dataclass, replace
from threading import Lock
from typing import Hashable, Iterator

from errors import DuplicateAddress, InvalidRecord, UnknownAddress
from tagging.tag_model import MAX_DEPTH, TagPath, TagRegistry

logger = logging.getLogger(__name__)

FLAGS_LIMIT = 1 << 64


@dataclass(slots=True)
class StatCell:
    live_bytes: int = 0
    live_count: int = 0
    cumulative_bytes: int = 0
    cumulative_count: int = 0
    peak_live_bytes: int = 0

    def copy(self) -> "StatCell":
        return replace(self)


@dataclass(frozen=True, slots=True)
class AllocationRecord:
    address: Hashable
    size: int
    path: TagPath
    thread: int
    timestamp: int
    weight: int = 1
    flags: int = 0  # carried opaquely, never interpreted

    @property
    def billed_bytes(self) -> int:
        return self.size * self.weight


def _check_record(record: AllocationRecord) -> None:
    if isinstance(record.size, bool) or not isinstance(record.size, int) or record.size <= 0:
        raise InvalidRecord(f"size must be an integer > 0, got {record.size!r}")
    if isinstance(record.weight, bool) or not isinstance(record.weight, int) or record.weight < 1:
        raise InvalidRecord(f"weight must be an integer >= 1, got {record.weight!r}")
    if not isinstance(record.flags, int) or not 0 <= record.flags < FLAGS_LIMIT:
        raise InvalidRecord(f"flags must fit in 64 bits, got {record.flags!r}")
    if not record.path:
        raise InvalidRecord("ROOT is never billed directly; use the untagged path")
    if len(record.path) > MAX_DEPTH:
        raise InvalidRecord(f"path deeper than {MAX_DEPTH} segments")


class AttributionTree:
    """
    Thread-safe. Every mutation and every read of more than one counter happens
    under a single lock, so each counter reflects a linearization of the applied
    events and quiescent reads are exact.
    """

    def __init__(self, registry: TagRegistry):
        self.registry = registry
        self._lock = Lock()
        self._cells: dict[TagPath, StatCell] = {}
        self._live: dict[Hashable, AllocationRecord] = {}
        self.total_live_bytes = 0
        self.global_peak_bytes = 0
        self.unmatched_frees = 0

    # ------------------------------------------------------------------
    # Event application (callers hold self._lock)
    # ------------------------------------------------------------------

    def _apply_alloc(self, record: AllocationRecord) -> None:
        billed = record.billed_bytes
        cell = self._cells.get(record.path)
        if cell is None:
            cell = self._cells[record.path] = StatCell()
        cell.live_bytes += billed
        cell.live_count += record.weight
        cell.cumulative_bytes += billed
        cell.cumulative_count += record.weight
        if cell.live_bytes > cell.peak_live_bytes:
            cell.peak_live_bytes = cell.live_bytes
        self._live[record.address] = record
        self.total_live_bytes += billed
        if self.total_live_bytes > self.global_peak_bytes:
            self.global_peak_bytes = self.total_live_bytes

    def _apply_free(self, record: AllocationRecord) -> None:
        billed = record.billed_bytes
        cell = self._cells[record.path]
        cell.live_bytes -= billed
        cell.live_count -= record.weight
        self.total_live_bytes -= billed

    # ------------------------------------------------------------------
    # Operations
    # ------------------------------------------------------------------

    def record_alloc(self, record: AllocationRecord) -> None:
        _check_record(record)
        with self._lock:
            if record.address in self._live:
                raise DuplicateAddress(record.address)
            self._apply_alloc(record)

    def record_free(self, address: Hashable, timestamp: int) -> bool:
        """
        Returns True if the address was live. Unknown addresses are counted, never
        raised. No per-allocation history survives a free, so timestamp is unused.
        """
        with self._lock:
            record = self._live.pop(address, None)
            if record is None:
                self.unmatched_frees += 1
                return False
            self._apply_free(record)
            return True

    def record_resize(self, address: Hashable, new_size: int, timestamp: int) -> None:
        with self._lock:
            old = self._live.get(address)
            if old is None:
                raise UnknownAddress(address)
            new = replace(old, size=new_size, timestamp=timestamp)
            _check_record(new)
            del self._live[address]
            self._apply_free(old)
            self._apply_alloc(new)

    def reset(self) -> None:
        with self._lock:
            self._cells.clear()
            self._live.clear()
            self.total_live_bytes = 0
            self.global_peak_bytes = 0
            self.unmatched_frees = 0
        logger.info("Attribution tree reset")

    # ------------------------------------------------------------------
    # Reads
    # ------------------------------------------------------------------

    def is_live(self, address: Hashable) -> bool:
        return address in self._live

    def cell(self, path: TagPath) -> StatCell:
        with self._lock:
            cell = self._cells.get(path)
            return cell.copy() if cell is not None else StatCell()

    def export(self) -> tuple[dict[TagPath, StatCell], int, int, int]:
        """Consistent copy of (cells, total_live_bytes, global_peak_bytes, unmatched_frees)."""
        with self._lock:
            cells = {path: cell.copy() for path, cell in self._cells.items()}
            return cells, self.total_live_bytes, self.global_peak_bytes, self.unmatched_frees

    def live_records(self) -> list[AllocationRecord]:
        with self._lock:
            return list(self._live.values())

    def live_table_bytes(self) -> int:
        with self._lock:
            return sum(r.billed_bytes for r in self._live.values())

    def __iter__(self) -> Iterator[tuple[TagPath, StatCell]]:
        return iter(self.export()[0].items())

    def __len__(self) -> int:
        return len(self._cells)
