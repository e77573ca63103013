"""
tagging/tag_model.py
====================
Tag names, interned tag ids and hierarchical tag paths.

A tag path is a tuple of tag ids implicitly rooted at ROOT; ROOT itself is the
empty tuple. The canonical string form is "/" for ROOT and "/net/http" style
otherwise, which is what snapshot files, budget files and the CLI speak.
"""

from threading import Lock

from errors import InvalidTagName, MalformedPath, RootHasNoParent, UnknownTagId

ROOT_ID = 0
UNTAGGED_ID = 1
ROOT_NAME = "root"
UNTAGGED_NAME = "untagged"

MAX_DEPTH = 32
MAX_NAME_BYTES = 128
SEPARATOR = "/"

TagId = int
TagPath = tuple[int, ...]

UNTAGGED_PATH: TagPath = (UNTAGGED_ID,)


def validate_tag_name(name: object) -> str:
    """Returns name unchanged if it is a valid tag name, raises InvalidTagName otherwise."""
    if not isinstance(name, str):
        raise InvalidTagName(name, "not a string")
    if not name:
        raise InvalidTagName(name, "empty")
    if SEPARATOR in name:
        raise InvalidTagName(name, "contains '/'")
    if any(ord(ch) < 0x20 for ch in name):
        raise InvalidTagName(name, "contains control characters")
    try:
        encoded = name.encode("utf-8")
    except UnicodeEncodeError:
        raise InvalidTagName(name, "not encodable as UTF-8")
    if len(encoded) > MAX_NAME_BYTES:
        raise InvalidTagName(name, f"longer than {MAX_NAME_BYTES} bytes")
    return name


def split_path_text(text: object) -> list[str]:
    """
    Validates a canonical path string without touching any registry and
    returns its segment names. Used wherever paths arrive as text (snapshot
    files, budget files, CLI arguments).
    """
    if not isinstance(text, str):
        raise MalformedPath(text, "not a string")
    if not text.startswith(SEPARATOR):
        raise MalformedPath(text, "missing leading '/'")
    if text == SEPARATOR:
        return []
    segments = text[1:].split(SEPARATOR)
    if len(segments) > MAX_DEPTH:
        raise MalformedPath(text, f"deeper than {MAX_DEPTH} segments")
    for segment in segments:
        if not segment:
            raise MalformedPath(text, "empty segment")
        if segment == ROOT_NAME:
            raise MalformedPath(text, "'root' is reserved and cannot be a segment")
        try:
            validate_tag_name(segment)
        except InvalidTagName as e:
            raise MalformedPath(text, e.reason) from e
    return segments


def parent_of(path: TagPath) -> TagPath:
    if not path:
        raise RootHasNoParent()
    return path[:-1]


class TagRegistry:
    """
    Append-only, thread-safe bidirectional map between tag names and dense ids.
    Ids 0 and 1 are reserved for ROOT and UNTAGGED.
    """

    def __init__(self):
        self._lock = Lock()
        self._names: list[str] = [ROOT_NAME, UNTAGGED_NAME]
        self._ids: dict[str, int] = {ROOT_NAME: ROOT_ID, UNTAGGED_NAME: UNTAGGED_ID}

    def intern(self, name: str) -> TagId:
        tag_id = self._ids.get(name) if isinstance(name, str) else None
        if tag_id is not None:
            return tag_id
        validate_tag_name(name)
        with self._lock:
            # Re-check under the lock: a racing intern may have won.
            tag_id = self._ids.get(name)
            if tag_id is None:
                tag_id = len(self._names)
                self._names.append(name)
                self._ids[name] = tag_id
            return tag_id

    def name_of(self, tag_id: TagId) -> str:
        if isinstance(tag_id, bool) or not isinstance(tag_id, int) or tag_id < 0:
            raise UnknownTagId(tag_id)
        try:
            return self._names[tag_id]
        except IndexError:
            raise UnknownTagId(tag_id) from None

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name: object) -> bool:
        return name in self._ids

    def canonical_path_string(self, path: TagPath) -> str:
        if not path:
            return SEPARATOR
        if ROOT_ID in path:
            raise MalformedPath(path, f"'{ROOT_NAME}' is reserved and cannot be a segment")
        return SEPARATOR + SEPARATOR.join(self.name_of(tag_id) for tag_id in path)

    def parse_path(self, text: str) -> TagPath:
        return tuple(self.intern(segment) for segment in split_path_text(text))

