"""
reporting/snapshot_store.py
===========================
Snapshot files on disk.

Output:
  - One canonical snapshot file per write: snapshot-<pid>-<counter>.json
  - Files are written atomically (temp file + rename), so readers such as the
    CLI never see a half-written snapshot.

Writes happen only on demand; there is no periodic or streaming export.
"""

import logging
import os
from pathlib import Path
from threading import Lock
from typing import Optional

from accounting.snapshot_query import deserialize, serialize
from config import get_settings
from models import Snapshot

logger = logging.getLogger(__name__)

FILENAME_PATTERN = "snapshot-{pid}-{counter:04d}.json"


def dump_snapshot(snapshot: Snapshot, path: str | Path) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(serialize(snapshot))
    os.replace(tmp, path)
    return path


def load_snapshot(path: str | Path) -> Snapshot:
    """Raises OSError if unreadable, MalformedSnapshot if the content is invalid."""
    return deserialize(Path(path).read_bytes())


class SnapshotStore:
    def __init__(self, directory: Optional[str | Path] = None):
        self._dir = Path(directory or get_settings().snapshot_dir)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._lock = Lock()
        self._counter = 0

    @property
    def directory(self) -> Path:
        return self._dir

    def write(self, snapshot: Snapshot, name: Optional[str] = None) -> Path:
        with self._lock:
            self._counter += 1
            filename = name or FILENAME_PATTERN.format(pid=os.getpid(), counter=self._counter)
        path = dump_snapshot(snapshot, self._dir / filename)
        logger.info(f"Snapshot written to {path} ({len(snapshot.nodes)} nodes)")
        return path

    def recent(self, limit: int = 10) -> list[Path]:
        """Most recent snapshot files first."""
        files = [p for p in self._dir.glob("*.json") if p.is_file()]
        files.sort(key=lambda p: (p.stat().st_mtime_ns, p.name), reverse=True)
        return files[:limit]

    def read(self, path: str | Path) -> Snapshot:
        return load_snapshot(path)

    def latest(self) -> Optional[Snapshot]:
        recent = self.recent(limit=1)
        return self.read(recent[0]) if recent else None
