"""
tests/test_tag_model.py
=======================
Tag names, interning, canonical path strings.

Run: pytest tests/ -v
"""

import threading

import pytest
from hypothesis import given, strategies as st

from errors import InvalidTagName, MalformedPath, RootHasNoParent, UnknownTagId
from tagging.tag_model import (
    MAX_DEPTH,
    ROOT_ID,
    UNTAGGED_ID,
    TagRegistry,
    parent_of,
    split_path_text,
    validate_tag_name,
)

tag_names = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="/", min_codepoint=0x20),
    min_size=1,
    max_size=32,
).filter(lambda s: s != "root")


# ---------------------------------------------------------------------------
# Interning
# ---------------------------------------------------------------------------

class TestIntern:
    def test_reserved_ids(self, registry):
        assert registry.intern("root") == ROOT_ID == 0
        assert registry.intern("untagged") == UNTAGGED_ID == 1

    def test_intern_is_idempotent(self, registry):
        assert registry.intern("net") == registry.intern("net")

    def test_fresh_ids_are_consecutive(self, registry):
        assert registry.intern("net") == 2
        assert registry.intern("ui") == 3
        assert registry.intern("net") == 2
        assert len(registry) == 4

    def test_names_are_case_sensitive(self, registry):
        assert registry.intern("Net") != registry.intern("net")

    @pytest.mark.parametrize("bad", ["", "a/b", "tab\there", "nl\n", "\x00", "x" * 129, 42, None])
    def test_invalid_names_rejected(self, registry, bad):
        with pytest.raises(InvalidTagName):
            registry.intern(bad)

    def test_max_length_counts_utf8_bytes(self):
        assert validate_tag_name("x" * 128)
        assert validate_tag_name("é" * 64)  # 128 bytes
        with pytest.raises(InvalidTagName):
            validate_tag_name("é" * 65)

    def test_invalid_intern_does_not_grow_registry(self, registry):
        with pytest.raises(InvalidTagName):
            registry.intern("a/b")
        assert len(registry) == 2

    def test_k_distinct_names_have_no_gaps(self, registry):
        ids = [registry.intern(f"tag{i}") for i in range(50)]
        assert ids == list(range(2, 52))

    def test_matches_reference_list_registry(self, registry):
        reference = ["root", "untagged"]
        for name in ["net", "ui", "net", "db", "ui", "gpu"]:
            if name not in reference:
                reference.append(name)
            assert registry.intern(name) == reference.index(name)

    def test_racing_interns_agree(self, registry):
        results = []
        barrier = threading.Barrier(8)

        def worker():
            barrier.wait()
            results.append(tuple(registry.intern(f"shared{i}") for i in range(100)))

        threads = [threading.Thread(target=worker) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(set(results)) == 1
        assert len(registry) == 102

    @given(tag_names)
    def test_name_round_trip(self, name):
        registry = TagRegistry()
        assert registry.name_of(registry.intern(name)) == name


# ---------------------------------------------------------------------------
# Lookup
# ---------------------------------------------------------------------------

class TestNameOf:
    def test_reserved(self, registry):
        assert registry.name_of(0) == "root"
        assert registry.name_of(1) == "untagged"

    def test_round_trip(self, registry):
        assert registry.name_of(registry.intern("net")) == "net"

    @pytest.mark.parametrize("bad", [9999, -1, True, "2"])
    def test_unknown_id(self, registry, bad):
        with pytest.raises(UnknownTagId):
            registry.name_of(bad)


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------

class TestCanonicalPath:
    def test_root(self, registry):
        assert registry.canonical_path_string(()) == "/"

    def test_single_and_nested(self, registry):
        net, http = registry.intern("net"), registry.intern("http")
        assert registry.canonical_path_string((net,)) == "/net"
        assert registry.canonical_path_string((net, http)) == "/net/http"

    def test_unknown_segment(self, registry):
        with pytest.raises(UnknownTagId):
            registry.canonical_path_string((2,))

    def test_root_segment_refused(self, registry):
        with pytest.raises(MalformedPath):
            registry.canonical_path_string((registry.intern("net"), ROOT_ID))


class TestParsePath:
    def test_root(self, registry):
        assert registry.parse_path("/") == ()

    def test_round_trip(self, registry):
        path = registry.parse_path("/net/http")
        assert path == (registry.intern("net"), registry.intern("http"))
        assert registry.canonical_path_string(path) == "/net/http"

    @pytest.mark.parametrize("bad", ["net", "", "//", "/net/", "/net//http", "/root", "/a\x01"])
    def test_malformed(self, registry, bad):
        with pytest.raises(MalformedPath):
            registry.parse_path(bad)

    def test_depth_limit(self, registry):
        assert len(registry.parse_path("/a" * MAX_DEPTH)) == MAX_DEPTH
        with pytest.raises(MalformedPath):
            registry.parse_path("/a" * (MAX_DEPTH + 1))

    def test_untagged_is_a_valid_segment(self, registry):
        assert registry.parse_path("/untagged") == (UNTAGGED_ID,)

    def test_repeated_segments_allowed(self, registry):
        foo = registry.intern("foo")
        assert registry.parse_path("/foo/foo") == (foo, foo)

    @given(st.lists(tag_names, min_size=0, max_size=MAX_DEPTH))
    def test_parse_inverts_canonical(self, names):
        registry = TagRegistry()
        path = tuple(registry.intern(n) for n in names)
        assert registry.parse_path(registry.canonical_path_string(path)) == path

    def test_split_does_not_intern(self, registry):
        assert split_path_text("/x/y") == ["x", "y"]
        assert "x" not in registry


class TestParentOf:
    def test_parent(self):
        assert parent_of((2, 3)) == (2,)
        assert parent_of((2,)) == ()

    def test_root_has_no_parent(self):
        with pytest.raises(RootHasNoParent):
            parent_of(())
