"""
hooks/classifiers.py
====================
Caller classifiers: map an opaque callsite token supplied by the hook layer to
a tag, for allocations that arrive with no explicit tag and no active scope.

Capturing real call stacks is left to the hook layer; classifiers only see the
token it hands over. Adding a strategy = subclass CallerClassifier.

Classifiers run inside the tracker's reentrancy guard, so anything they
allocate through the tracked hooks is never recorded.
"""

from abc import ABC, abstractmethod
from typing import Hashable, Mapping, Optional

from tagging.tag_model import TagId, TagRegistry


class CallerClassifier(ABC):
    """Base class all classifiers implement. Must be deterministic per token."""

    @abstractmethod
    def classify(self, callsite: Hashable) -> Optional[TagId]:
        ...

    def __call__(self, callsite: Hashable) -> Optional[TagId]:
        return self.classify(callsite)


# ---------------------------------------------------------------------------
# Exact mapping
# ---------------------------------------------------------------------------

class MappingClassifier(CallerClassifier):
    """Exact token -> tag lookup. The deterministic classifier used in tests."""

    def __init__(self, mapping: Mapping[Hashable, TagId]):
        self._mapping = dict(mapping)

    @classmethod
    def from_names(cls, registry: TagRegistry, mapping: Mapping[Hashable, str]) -> "MappingClassifier":
        return cls({token: registry.intern(name) for token, name in mapping.items()})

    def classify(self, callsite: Hashable) -> Optional[TagId]:
        if callsite is None:
            return None
        return self._mapping.get(callsite)


# ---------------------------------------------------------------------------
# Longest prefix
# ---------------------------------------------------------------------------

class PrefixClassifier(CallerClassifier):
    """
    Longest-prefix match over string tokens, e.g. dotted module names:
    {"myapp.net": net, "myapp.net.tls": tls} bills "myapp.net.tls.handshake" to tls.
    A prefix matches whole dotted components only.
    """

    def __init__(self, prefixes: Mapping[str, TagId], separator: str = "."):
        self._separator = separator
        # Longest first so the first hit is the most specific.
        self._prefixes = sorted(prefixes.items(), key=lambda item: (-len(item[0]), item[0]))

    @classmethod
    def from_names(cls, registry: TagRegistry, prefixes: Mapping[str, str], separator: str = ".") -> "PrefixClassifier":
        return cls({prefix: registry.intern(name) for prefix, name in prefixes.items()}, separator)

    def classify(self, callsite: Hashable) -> Optional[TagId]:
        if not isinstance(callsite, str):
            return None
        for prefix, tag_id in self._prefixes:
            if callsite == prefix or callsite.startswith(prefix + self._separator):
                return tag_id
        return None
