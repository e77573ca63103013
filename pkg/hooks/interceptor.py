"""
hooks/interceptor.py
====================
Binds attribution to allocation entry points.

Every allocation event reported by a hook goes through:
1. Enabled check → disabled trackers record nothing new
2. Reentrancy guard → the tracker's own allocations are never recorded
3. Sampling → every Nth event per thread is kept, with weight N
4. Path resolution → explicit tag > scope path > classifier > /untagged
5. AttributionTree.record_alloc

Frees and resizes of tracked memory are always applied, even while disabled,
so live accounting stays truthful across toggles. No hook path ever raises
into the host: internal failures are counted in `diagnostics`.
"""

import logging
import threading
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from functools import lru_cache
from threading import Lock
from typing import Callable, Hashable, Iterator, Optional, Protocol

from accounting.attribution import AllocationRecord, AttributionTree
from accounting.snapshot_query import take_snapshot
from config import get_settings
from errors import AllocationFailure, DuplicateAddress, InvalidRate, InvalidSize, MalformedPath, UnknownAddress
from models import Snapshot
from tagging.scopes import ScopeManager
from tagging.tag_model import ROOT_ID, UNTAGGED_PATH, TagId, TagPath, TagRegistry

logger = logging.getLogger(__name__)

Classifier = Callable[[Hashable], Optional[TagId]]


# ---------------------------------------------------------------------------
# Allocators for the manual shim
# ---------------------------------------------------------------------------

class Allocator(Protocol):
    def allocate(self, size: int) -> Hashable:
        ...

    def release(self, address: Hashable) -> None:
        ...


class BytearrayAllocator:
    """Real allocations backed by bytearrays; the address is the buffer's id()."""

    def __init__(self):
        self._lock = Lock()
        self._buffers: dict[int, bytearray] = {}

    def allocate(self, size: int) -> int:
        buffer = bytearray(size)
        address = id(buffer)
        with self._lock:
            self._buffers[address] = buffer
        return address

    def release(self, address: Hashable) -> None:
        with self._lock:
            self._buffers.pop(address, None)

    def buffer(self, address: int) -> bytearray:
        return self._buffers[address]


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

@dataclass
class InterceptorDiagnostics:
    duplicate_addresses: int = 0
    rejected_events: int = 0
    reentrant_skips: int = 0
    unmatched_resizes: int = 0

    def as_dict(self) -> dict[str, int]:
        return asdict(self)


# ---------------------------------------------------------------------------
# Interceptor
# ---------------------------------------------------------------------------

class _ThreadState(threading.local):
    def __init__(self):
        self.inside = False
        self.counter = 0
        self.rate_generation = -1


class Interceptor:
    def __init__(
        self,
        *,
        enabled: Optional[bool] = None,
        sampling_rate: Optional[int] = None,
        registry: Optional[TagRegistry] = None,
        clock: Callable[[], int] = time.monotonic_ns,
        thread_id: Callable[[], int] = threading.get_ident,
        classifier: Optional[Classifier] = None,
        allocator: Optional[Allocator] = None,
    ):
        self.registry = registry or TagRegistry()
        self.tree = AttributionTree(self.registry)
        self.scopes = ScopeManager(self.registry, thread_id=thread_id)
        self.diagnostics = InterceptorDiagnostics()
        self.allocator: Allocator = allocator or BytearrayAllocator()
        self._clock = clock
        self._thread_id = thread_id
        self._classifier = classifier
        self._config_lock = Lock()
        self._diag_lock = Lock()
        self._local = _ThreadState()
        if enabled is None or sampling_rate is None:
            settings = get_settings()
            enabled = settings.enabled if enabled is None else enabled
            sampling_rate = settings.sampling if sampling_rate is None else sampling_rate
        self._enabled = bool(enabled)
        self._sampling: tuple[int, int] = (1, 0)  # (rate, generation), swapped atomically
        self.set_sampling_rate(sampling_rate)

    # ------------------------------------------------------------------
    # Configuration
    # ------------------------------------------------------------------

    @property
    def enabled(self) -> bool:
        return self._enabled

    @property
    def sampling_rate(self) -> int:
        return self._sampling[0]

    def set_enabled(self, flag: bool) -> None:
        flag = bool(flag)
        if flag != self._enabled:
            self._enabled = flag
            logger.info(f"Attribution tracking {'enabled' if flag else 'disabled'}")

    def set_sampling_rate(self, n: int) -> None:
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise InvalidRate(n)
        with self._config_lock:
            # Per-thread counters restart from zero under the new rate.
            self._sampling = (n, self._sampling[1] + 1)
        logger.info(f"Sampling rate set to {n}")

    def register_classifier(self, classifier: Optional[Classifier]) -> None:
        self._classifier = classifier
        logger.info(f"Caller classifier {'registered' if classifier else 'cleared'}")

    # ------------------------------------------------------------------
    # Reentrancy
    # ------------------------------------------------------------------

    @contextmanager
    def suspended(self) -> Iterator[None]:
        """Marks tracker-internal work: hook events raised inside are ignored."""
        state = self._local
        previous = state.inside
        state.inside = True
        try:
            yield
        finally:
            state.inside = previous

    def _count(self, name: str) -> None:
        with self._diag_lock:
            setattr(self.diagnostics, name, getattr(self.diagnostics, name) + 1)

    # ------------------------------------------------------------------
    # Hook entry points
    # ------------------------------------------------------------------

    def _sampled_in(self, state: _ThreadState) -> Optional[int]:
        """Advances this thread's counter; returns the weight if the event is kept."""
        rate, generation = self._sampling
        if state.rate_generation != generation:
            state.rate_generation = generation
            state.counter = 0
        state.counter += 1
        if state.counter < rate:
            return None
        state.counter = 0
        return rate

    def _resolve_path(self, explicit_tag: Optional[TagId | str], callsite: Optional[Hashable]) -> TagPath:
        if explicit_tag is not None:
            tag_id = self.registry.intern(explicit_tag) if isinstance(explicit_tag, str) else explicit_tag
            self.registry.name_of(tag_id)
            if tag_id == ROOT_ID:
                raise MalformedPath((tag_id,), "ROOT cannot be an explicit tag")
            return (tag_id,)
        path = self.scopes.current_path()
        if path:
            return path
        classifier = self._classifier
        if classifier is not None and callsite is not None:
            tag_id = classifier(callsite)
            if tag_id is not None and tag_id != ROOT_ID:
                self.registry.name_of(tag_id)
                return (tag_id,)
        return UNTAGGED_PATH

    def on_alloc(
        self,
        address: Hashable,
        size: int,
        flags: int = 0,
        explicit_tag: Optional[TagId | str] = None,
        callsite: Optional[Hashable] = None,
    ) -> None:
        if not self._enabled:
            return
        state = self._local
        if state.inside:
            self._count("reentrant_skips")
            return
        weight = self._sampled_in(state)
        if weight is None:
            return
        state.inside = True
        try:
            record = AllocationRecord(
                address=address,
                size=size,
                path=self._resolve_path(explicit_tag, callsite),
                thread=self._thread_id(),
                timestamp=self._clock(),
                weight=weight,
                flags=flags,
            )
            self.tree.record_alloc(record)
        except DuplicateAddress:
            self._count("duplicate_addresses")
            logger.debug(f"Duplicate live address {address!r}; hook wiring bug?")
        except Exception as e:
            # Tracking must never fail the host's allocation.
            self._count("rejected_events")
            logger.debug(f"Allocation event rejected: {e}")
        finally:
            state.inside = False

    def on_free(self, address: Hashable) -> None:
        state = self._local
        if state.inside:
            return
        state.inside = True
        try:
            self.tree.record_free(address, self._clock())
        except Exception as e:
            self._count("rejected_events")
            logger.debug(f"Free event rejected: {e}")
        finally:
            state.inside = False

    def on_resize(self, address: Hashable, new_size: int) -> None:
        state = self._local
        if state.inside:
            return
        state.inside = True
        try:
            self.tree.record_resize(address, new_size, self._clock())
        except UnknownAddress:
            # Includes an address freed by another thread since the caller saw it live.
            self._count("unmatched_resizes")
        except Exception as e:
            self._count("rejected_events")
            logger.debug(f"Resize event rejected: {e}")
        finally:
            state.inside = False

    # ------------------------------------------------------------------
    # Manual shim
    # ------------------------------------------------------------------

    def traced_alloc(
        self,
        size: int,
        explicit_tag: Optional[TagId | str] = None,
        *,
        flags: int = 0,
        callsite: Optional[Hashable] = None,
    ) -> Hashable:
        if isinstance(size, bool) or not isinstance(size, int) or size <= 0:
            raise InvalidSize(size)
        try:
            address = self.allocator.allocate(size)
        except MemoryError as e:
            raise AllocationFailure(size, e) from e
        self.on_alloc(address, size, flags=flags, explicit_tag=explicit_tag, callsite=callsite)
        return address

    def traced_free(self, address: Hashable) -> None:
        # Unbill before releasing so a recycled address cannot collide.
        self.on_free(address)
        self.allocator.release(address)

    # ------------------------------------------------------------------
    # Queries
    # ------------------------------------------------------------------

    def take_snapshot(self) -> Snapshot:
        with self.suspended():
            return take_snapshot(
                self.tree,
                taken_at=self._clock(),
                sampling_rate=self._sampling[0],
                enabled=self._enabled,
            )

    def reset(self) -> None:
        self.tree.reset()
        with self._diag_lock:
            self.diagnostics = InterceptorDiagnostics()
        with self._config_lock:
            rate, generation = self._sampling
            self._sampling = (rate, generation + 1)


@lru_cache
def get_tracker() -> Interceptor:
    """Process-wide tracker, configured from MEMATTR_* settings on first use."""
    return Interceptor()
