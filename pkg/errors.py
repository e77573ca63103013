"""
errors.py - Exception hierarchy shared by every memattr module.
"""

from typing import Any, Optional


class MemAttrError(Exception):
    """Base class for all memattr errors."""


# ---------------------------------------------------------------------------
# Tags & paths
# ---------------------------------------------------------------------------

class InvalidTagName(MemAttrError, ValueError):
    def __init__(self, name: Any, reason: str):
        super().__init__(f"Invalid tag name {name!r}: {reason}")
        self.name = name
        self.reason = reason


class UnknownTagId(MemAttrError, LookupError):
    def __init__(self, tag_id: Any):
        super().__init__(f"Unknown tag id: {tag_id!r}")
        self.tag_id = tag_id


class MalformedPath(MemAttrError, ValueError):
    def __init__(self, text: Any, reason: str):
        super().__init__(f"Malformed tag path {text!r}: {reason}")
        self.text = text
        self.reason = reason


class RootHasNoParent(MemAttrError, ValueError):
    def __init__(self):
        super().__init__("The root path has no parent")


# ---------------------------------------------------------------------------
# Attribution tree
# ---------------------------------------------------------------------------

class InvalidRecord(MemAttrError, ValueError):
    pass


class DuplicateAddress(MemAttrError):
    def __init__(self, address: Any):
        super().__init__(f"Address already live: {address!r}")
        self.address = address


class UnknownAddress(MemAttrError, LookupError):
    def __init__(self, address: Any):
        super().__init__(f"Address not live: {address!r}")
        self.address = address


# ---------------------------------------------------------------------------
# Scopes
# ---------------------------------------------------------------------------

class DepthExceeded(MemAttrError):
    def __init__(self, depth: int, limit: int):
        super().__init__(f"Scope depth {depth} exceeds the limit of {limit}")
        self.depth = depth
        self.limit = limit


class ScopeMismatch(MemAttrError):
    WRONG_THREAD = "wrong_thread"
    STALE_HANDLE = "stale_handle"
    OUT_OF_ORDER = "out_of_order"

    def __init__(self, reason: str, detail: str = ""):
        message = f"Scope mismatch ({reason})"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)
        self.reason = reason


class StackNotEmpty(MemAttrError):
    def __init__(self, depth: int):
        super().__init__(f"Cannot adopt a path: {depth} scope(s) already active on this thread")
        self.depth = depth


# ---------------------------------------------------------------------------
# Interceptor
# ---------------------------------------------------------------------------

class InvalidRate(MemAttrError, ValueError):
    def __init__(self, rate: Any):
        super().__init__(f"Sampling rate must be an integer >= 1, got {rate!r}")
        self.rate = rate


class InvalidSize(MemAttrError, ValueError):
    def __init__(self, size: Any):
        super().__init__(f"Allocation size must be an integer > 0, got {size!r}")
        self.size = size


class AllocationFailure(MemAttrError):
    def __init__(self, size: int, cause: Optional[BaseException] = None):
        super().__init__(f"Underlying allocator refused {size} bytes")
        self.size = size
        self.cause = cause


# ---------------------------------------------------------------------------
# Queries & files
# ---------------------------------------------------------------------------

class InvalidN(MemAttrError, ValueError):
    def __init__(self, n: Any):
        super().__init__(f"n must be an integer >= 1, got {n!r}")
        self.n = n


class InvalidBudget(MemAttrError, ValueError):
    pass


class MalformedSnapshot(MemAttrError, ValueError):
    pass


class MalformedBudgets(MemAttrError, ValueError):
    def __init__(self, line_number: int, reason: str):
        super().__init__(f"Budgets line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason
