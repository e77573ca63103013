"""
tagging/scopes.py
=================
Per-thread hierarchical scope stacks.

All allocator activity inside a scope, and inside every scope nested in it, is
billed to the scope's tag path:

    with scopes.scope("foo"):
        func_a()   # billed to /foo
        func_b()   # billed to /foo

Each thread owns its stack; new threads start at ROOT. A worker thread joins
its parent's attribution context explicitly with adopt_path().
"""

import functools
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Iterator, TypeVar

from errors import DepthExceeded, MalformedPath, ScopeMismatch, StackNotEmpty
from tagging.tag_model import MAX_DEPTH, ROOT_ID, TagId, TagPath, TagRegistry

T = TypeVar("T")


@dataclass(frozen=True, slots=True)
class ScopeHandle:
    """Proof of one push. Valid for exactly one pop on the pushing thread."""
    thread_id: int
    depth: int        # number of frames on the stack right after the push
    generation: int


@dataclass(slots=True)
class _Frame:
    base_length: int  # path length before this frame was pushed
    generation: int


@dataclass(slots=True)
class ScopeStack:
    path: list[int] = field(default_factory=list)
    frames: list[_Frame] = field(default_factory=list)
    next_generation: int = 1


class ScopeManager:
    """Owns the scope stacks of every thread that touches it."""

    def __init__(
        self,
        registry: TagRegistry,
        thread_id: Callable[[], int] = threading.get_ident,
    ):
        self.registry = registry
        self._thread_id = thread_id
        self._local = threading.local()

    # ------------------------------------------------------------------
    # Internals
    # ------------------------------------------------------------------

    def _stack(self) -> ScopeStack:
        stack = getattr(self._local, "stack", None)
        if stack is None:
            stack = self._local.stack = ScopeStack()
        return stack

    def _resolve(self, tag: TagId | str) -> TagId:
        if isinstance(tag, str):
            tag_id = self.registry.intern(tag)
        else:
            self.registry.name_of(tag)
            tag_id = tag
        if tag_id == ROOT_ID:
            raise MalformedPath((tag,), "ROOT cannot be pushed as a scope")
        return tag_id

    def _new_frame(self, stack: ScopeStack, base_length: int) -> ScopeHandle:
        generation = stack.next_generation
        stack.next_generation += 1
        stack.frames.append(_Frame(base_length, generation))
        return ScopeHandle(self._thread_id(), len(stack.frames), generation)

    # ------------------------------------------------------------------
    # Operations
    # ------------------------------------------------------------------

    def push_scope(self, tag: TagId | str) -> ScopeHandle:
        tag_id = self._resolve(tag)
        stack = self._stack()
        if len(stack.path) >= MAX_DEPTH:
            raise DepthExceeded(len(stack.path) + 1, MAX_DEPTH)
        base = len(stack.path)
        stack.path.append(tag_id)
        return self._new_frame(stack, base)

    def pop_scope(self, handle: ScopeHandle) -> None:
        if handle.thread_id != self._thread_id():
            raise ScopeMismatch(
                ScopeMismatch.WRONG_THREAD,
                f"handle belongs to thread {handle.thread_id}",
            )
        stack = self._stack()
        frames = stack.frames
        index = handle.depth - 1
        live = 0 <= index < len(frames) and frames[index].generation == handle.generation
        if not live:
            raise ScopeMismatch(ScopeMismatch.STALE_HANDLE, "handle was already popped")
        if handle.depth != len(frames):
            raise ScopeMismatch(
                ScopeMismatch.OUT_OF_ORDER,
                f"{len(frames) - handle.depth} newer scope(s) still open",
            )
        frame = frames.pop()
        del stack.path[frame.base_length:]

    def current_path(self) -> TagPath:
        return tuple(self._stack().path)

    def depth(self) -> int:
        return len(self._stack().path)

    def adopt_path(self, path: TagPath) -> ScopeHandle:
        stack = self._stack()
        if stack.frames:
            raise StackNotEmpty(len(stack.path))
        if len(path) > MAX_DEPTH:
            raise DepthExceeded(len(path), MAX_DEPTH)
        segments = [self._resolve(tag_id) for tag_id in path]
        stack.path.extend(segments)
        return self._new_frame(stack, 0)

    # ------------------------------------------------------------------
    # Guard forms
    # ------------------------------------------------------------------

    @contextmanager
    def scope(self, tag: TagId | str) -> Iterator[ScopeHandle]:
        handle = self.push_scope(tag)
        try:
            yield handle
        finally:
            self.pop_scope(handle)

    @contextmanager
    def adopted(self, path: TagPath) -> Iterator[ScopeHandle]:
        handle = self.adopt_path(path)
        try:
            yield handle
        finally:
            self.pop_scope(handle)

    def with_scope(self, tag: TagId | str, action: Callable[..., T], *args, **kwargs) -> T:
        with self.scope(tag):
            return action(*args, **kwargs)

    def tagged(self, tag: TagId | str):
        """Decorator: every call of the wrapped function runs inside scope `tag`."""
        def decorator(func: Callable[..., T]) -> Callable[..., T]:
            @functools.wraps(func)
            def wrapper(*args, **kwargs):
                with self.scope(tag):
                    return func(*args, **kwargs)
            return wrapper
        return decorator
