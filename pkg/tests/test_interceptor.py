"""
tests/test_interceptor.py
=========================
Hook entry points, path precedence, sampling, reentrancy and the manual shim.
Caller classifiers are covered here too since they only matter through the tracker.
"""

import threading
from unittest.mock import MagicMock

import pytest

from errors import AllocationFailure, InvalidRate, InvalidSize, MalformedPath
from hooks.classifiers import MappingClassifier, PrefixClassifier
from hooks.interceptor import BytearrayAllocator, Interceptor
from tagging.tag_model import ROOT_ID, UNTAGGED_PATH


def live_by_path(tracker):
    return {n.path: n.live_bytes for n in tracker.take_snapshot().nodes}


# ---------------------------------------------------------------------------
# Path precedence
# ---------------------------------------------------------------------------

class TestPathResolution:
    def test_explicit_tag_beats_scope(self, tracker):
        with tracker.scopes.scope("foo"):
            tracker.on_alloc("A", 64, explicit_tag="gpu")
        assert live_by_path(tracker) == {"/gpu": 64}

    def test_explicit_tag_is_a_single_segment(self, tracker):
        with tracker.scopes.scope("net"):
            with tracker.scopes.scope("http"):
                tracker.on_alloc("A", 1, explicit_tag="tls")
        assert live_by_path(tracker) == {"/tls": 1}

    def test_scope_path(self, tracker):
        with tracker.scopes.scope("net"):
            with tracker.scopes.scope("http"):
                tracker.on_alloc("A", 10)
        assert live_by_path(tracker) == {"/net/http": 10}

    def test_scope_beats_classifier(self, tracker):
        tracker.register_classifier(MappingClassifier.from_names(tracker.registry, {"mod.a": "net"}))
        with tracker.scopes.scope("ui"):
            tracker.on_alloc("A", 10, callsite="mod.a")
        assert live_by_path(tracker) == {"/ui": 10}

    def test_classifier_used_at_root(self, tracker):
        tracker.register_classifier(MappingClassifier.from_names(tracker.registry, {"mod.a": "net"}))
        tracker.on_alloc("A", 10, callsite="mod.a")
        tracker.on_alloc("B", 5, callsite="mod.zzz")
        assert live_by_path(tracker) == {"/net": 10, "/untagged": 5}

    def test_no_classifier_is_untagged(self, tracker):
        tracker.on_alloc("A", 7, callsite="anything")
        assert live_by_path(tracker) == {"/untagged": 7}

    def test_classifier_returning_root_falls_back_to_untagged(self, tracker):
        tracker.register_classifier(lambda callsite: ROOT_ID)
        tracker.on_alloc("A", 3, callsite="x")
        assert live_by_path(tracker) == {"/untagged": 3}

    def test_root_explicit_tag_is_rejected(self, tracker):
        tracker.on_alloc("A", 3, explicit_tag=ROOT_ID)
        assert tracker.diagnostics.rejected_events == 1
        assert not tracker.tree.is_live("A")

    def test_root_scope_refused_and_snapshot_still_works(self, tracker):
        with pytest.raises(MalformedPath):
            with tracker.scopes.scope("root"):
                tracker.on_alloc("A", 10)
        tracker.on_alloc("B", 4)
        assert live_by_path(tracker) == {"/untagged": 4}

    def test_unknown_explicit_tag_id_is_rejected(self, tracker):
        tracker.on_alloc("A", 3, explicit_tag=4242)
        assert tracker.diagnostics.rejected_events == 1
        assert live_by_path(tracker) == {}


class TestClassifiers:
    def test_mapping(self, registry):
        classifier = MappingClassifier.from_names(registry, {"mod.a": "net"})
        assert classifier("mod.a") == registry.intern("net")
        assert classifier("mod.b") is None
        assert classifier(None) is None

    def test_prefix_longest_match(self, registry):
        classifier = PrefixClassifier.from_names(registry, {"app.net": "net", "app.net.tls": "tls"})
        assert classifier("app.net.tls.handshake") == registry.intern("tls")
        assert classifier("app.net.http") == registry.intern("net")
        assert classifier("app.net") == registry.intern("net")

    def test_prefix_matches_whole_components_only(self, registry):
        classifier = PrefixClassifier.from_names(registry, {"app.net": "net"})
        assert classifier("app.network") is None
        assert classifier(42) is None


# ---------------------------------------------------------------------------
# Enable / disable
# ---------------------------------------------------------------------------

class TestEnabled:
    def test_disabled_records_nothing(self, clock):
        tracker = Interceptor(enabled=False, clock=clock)
        tracker.on_alloc("A", 100)
        assert tracker.take_snapshot().nodes == ()

    def test_free_while_disabled_still_applies(self, tracker):
        tracker.on_alloc("A", 100, explicit_tag="net")
        tracker.set_enabled(False)
        tracker.on_free("A")
        snapshot = tracker.take_snapshot()
        assert snapshot.node("/net").live_bytes == 0
        assert snapshot.total_live_bytes == 0
        assert snapshot.enabled is False

    def test_resize_while_disabled_still_applies(self, tracker):
        tracker.on_alloc("A", 100, explicit_tag="net")
        tracker.set_enabled(False)
        tracker.on_resize("A", 10)
        assert live_by_path(tracker) == {"/net": 10}

    def test_reenable_resumes(self, tracker):
        tracker.set_enabled(False)
        tracker.on_alloc("A", 1)
        tracker.set_enabled(True)
        tracker.on_alloc("B", 2)
        assert live_by_path(tracker) == {"/untagged": 2}


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

class TestSampling:
    def test_every_fourth_kept_with_weight_four(self, tracker):
        tracker.set_sampling_rate(4)
        for i in range(100):
            tracker.on_alloc(i, 10, explicit_tag="net")
        assert len(tracker.tree.live_records()) == 25
        node = tracker.take_snapshot().node("/net")
        assert node.live_bytes == 1000
        assert node.live_count == 100
        assert all(r.weight == 4 for r in tracker.tree.live_records())

    def test_unsampled_free_is_unmatched(self, tracker):
        tracker.set_sampling_rate(2)
        tracker.on_alloc("A", 10)   # skipped
        tracker.on_alloc("B", 10)   # kept
        tracker.on_free("A")
        assert tracker.tree.unmatched_frees == 1

    def test_snapshot_reports_rate(self, tracker):
        tracker.set_sampling_rate(8)
        assert tracker.take_snapshot().sampling_rate == 8

    @pytest.mark.parametrize("bad", [0, -1, 1.5, True, "4"])
    def test_invalid_rate(self, tracker, bad):
        with pytest.raises(InvalidRate):
            tracker.set_sampling_rate(bad)
        assert tracker.sampling_rate == 1

    def test_rate_change_restarts_counter(self, tracker):
        tracker.set_sampling_rate(3)
        tracker.on_alloc("A", 1)
        tracker.on_alloc("B", 1)
        tracker.set_sampling_rate(3)
        tracker.on_alloc("C", 1)
        tracker.on_alloc("D", 1)
        assert tracker.tree.live_records() == []
        tracker.on_alloc("E", 1)
        assert [r.address for r in tracker.tree.live_records()] == ["E"]

    def test_counters_are_per_thread(self, tracker):
        tracker.set_sampling_rate(2)
        tracker.on_alloc("main-1", 1)

        def worker():
            tracker.on_alloc("worker-1", 1)

        t = threading.Thread(target=worker)
        t.start()
        t.join()
        # each thread has seen only one event, so neither was kept
        assert tracker.tree.live_records() == []


# ---------------------------------------------------------------------------
# Reentrancy & diagnostics
# ---------------------------------------------------------------------------

class TestReentrancy:
    def test_classifier_allocations_are_not_recorded(self, tracker):
        def allocating_classifier(callsite):
            tracker.traced_alloc(32)
            return tracker.registry.intern("net")

        tracker.register_classifier(allocating_classifier)
        tracker.on_alloc("A", 10, callsite="x")
        assert live_by_path(tracker) == {"/net": 10}
        assert tracker.diagnostics.reentrant_skips == 1

    def test_suspended_ignores_events(self, tracker):
        with tracker.suspended():
            tracker.on_alloc("A", 10)
        assert live_by_path(tracker) == {}
        assert tracker.diagnostics.reentrant_skips == 1

    def test_duplicate_address_counted(self, tracker):
        tracker.on_alloc("A", 10)
        tracker.on_alloc("A", 20)
        assert tracker.diagnostics.duplicate_addresses == 1
        assert live_by_path(tracker) == {"/untagged": 10}

    def test_invalid_size_counted_not_raised(self, tracker):
        tracker.on_alloc("A", 0)
        assert tracker.diagnostics.rejected_events == 1

    def test_resize_of_unknown_address(self, tracker):
        tracker.on_resize("nope", 10)
        assert tracker.diagnostics.unmatched_resizes == 1
        assert live_by_path(tracker) == {}

    def test_resize_racing_a_free_is_unmatched(self, tracker, monkeypatch):
        tracker.on_alloc("A", 10)
        record_resize = tracker.tree.record_resize

        def freed_first(address, new_size, timestamp):
            tracker.tree.record_free(address, timestamp)
            return record_resize(address, new_size, timestamp)

        monkeypatch.setattr(tracker.tree, "record_resize", freed_first)
        tracker.on_resize("A", 20)
        assert tracker.diagnostics.unmatched_resizes == 1
        assert tracker.diagnostics.rejected_events == 0
        assert live_by_path(tracker) == {"/untagged": 0}

    def test_reset_clears_everything(self, tracker):
        tracker.on_alloc("A", 10)
        tracker.on_alloc("A", 10)
        tracker.reset()
        assert tracker.take_snapshot().nodes == ()
        assert tracker.diagnostics.as_dict() == {
            "duplicate_addresses": 0,
            "rejected_events": 0,
            "reentrant_skips": 0,
            "unmatched_resizes": 0,
        }


# ---------------------------------------------------------------------------
# Manual shim
# ---------------------------------------------------------------------------

class TestTracedAlloc:
    def test_alloc_and_free(self, tracker):
        address = tracker.traced_alloc(128, "net")
        assert len(tracker.allocator.buffer(address)) == 128
        assert live_by_path(tracker) == {"/net": 128}
        tracker.traced_free(address)
        assert live_by_path(tracker) == {"/net": 0}

    @pytest.mark.parametrize("bad", [0, -1, 2.0, True])
    def test_invalid_size(self, tracker, bad):
        with pytest.raises(InvalidSize):
            tracker.traced_alloc(bad)
        assert live_by_path(tracker) == {}

    def test_allocator_failure(self, clock):
        allocator = MagicMock()
        allocator.allocate.side_effect = MemoryError
        tracker = Interceptor(enabled=True, clock=clock, allocator=allocator)
        with pytest.raises(AllocationFailure):
            tracker.traced_alloc(1 << 40)
        assert tracker.take_snapshot().nodes == ()

    def test_untagged_without_scope(self, tracker):
        tracker.traced_alloc(8)
        assert tracker.tree.live_records()[0].path == UNTAGGED_PATH

    def test_disabled_shim_still_allocates(self, clock):
        tracker = Interceptor(enabled=False, clock=clock)
        address = tracker.traced_alloc(16)
        assert len(tracker.allocator.buffer(address)) == 16
        assert tracker.take_snapshot().nodes == ()


class TestBytearrayAllocator:
    def test_release_unknown_is_tolerated(self):
        allocator = BytearrayAllocator()
        allocator.release(12345)

    def test_distinct_live_addresses(self):
        allocator = BytearrayAllocator()
        addresses = {allocator.allocate(8) for _ in range(100)}
        assert len(addresses) == 100


class TestDefaultTracker:
    def test_singleton_follows_settings(self, monkeypatch):
        from hooks.interceptor import get_tracker
        monkeypatch.setenv("MEMATTR_ENABLED", "1")
        monkeypatch.setenv("MEMATTR_SAMPLING", "16")
        get_tracker.cache_clear()
        try:
            tracker = get_tracker()
            assert get_tracker() is tracker
            assert tracker.enabled is True
            assert tracker.sampling_rate == 16
        finally:
            get_tracker.cache_clear()
