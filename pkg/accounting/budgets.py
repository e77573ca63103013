"""
accounting/budgets.py
=====================
Per-component memory budgets and accountability checks.

A budget caps the rolled-up live bytes of a tag path (the path plus all of
its descendants). A limit that is exactly met is compliant: only actual > limit
is an exceedance.

Budgets file format: one `path<TAB>max_bytes` per line; `#` comment lines and
blank lines are ignored.
"""

import logging
from functools import lru_cache
from pathlib import Path
from threading import Lock
from typing import Iterable, Optional

from pydantic import ValidationError

from accounting.snapshot_query import rollup, rollups
from config import get_settings
from errors import InvalidBudget, MalformedBudgets
from models import Budget, Exceedance, Snapshot
from tagging.tag_model import split_path_text

logger = logging.getLogger(__name__)


def check_budgets(snapshot: Snapshot, budgets: Iterable[Budget]) -> list[Exceedance]:
    """Every budget whose rolled-up live bytes exceed its limit, worst overshoot first."""
    all_rollups = rollups(snapshot)
    exceedances = []
    for budget in budgets:
        cell = all_rollups.get(budget.path)
        actual = cell.live_bytes if cell is not None else 0
        if actual > budget.max_bytes:
            exceedances.append(Exceedance(
                path=budget.path,
                limit=budget.max_bytes,
                actual=actual,
                overshoot=actual - budget.max_bytes,
            ))
    exceedances.sort(key=lambda e: (-e.overshoot, e.path))
    return exceedances


# ---------------------------------------------------------------------------
# Budgets file
# ---------------------------------------------------------------------------

def parse_budgets(text: str) -> list[Budget]:
    budgets: list[Budget] = []
    seen: set[str] = set()
    for line_number, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise MalformedBudgets(line_number, "expected exactly one TAB between path and max_bytes")
        path, limit = fields[0], fields[1].strip()
        if not limit.isascii() or not limit.isdigit():
            raise MalformedBudgets(line_number, f"max_bytes is not a non-negative integer: {limit!r}")
        try:
            split_path_text(path)
        except ValueError as e:
            raise MalformedBudgets(line_number, str(e)) from e
        if path in seen:
            raise MalformedBudgets(line_number, f"duplicate budget for {path}")
        seen.add(path)
        budgets.append(Budget(path=path, max_bytes=int(limit)))
    return budgets


def load_budgets(path: str | Path) -> list[Budget]:
    return parse_budgets(Path(path).read_text(encoding="utf-8"))


def format_budgets(budgets: Iterable[Budget]) -> str:
    return "".join(f"{b.path}\t{b.max_bytes}\n" for b in budgets)


# ---------------------------------------------------------------------------
# In-memory registry
# ---------------------------------------------------------------------------

class BudgetRegistry:
    """Thread-safe in-memory budget store."""

    def __init__(self, budgets: Iterable[Budget] = ()):
        self._lock = Lock()
        self._budgets: dict[str, int] = {b.path: b.max_bytes for b in budgets}

    @classmethod
    def from_file(cls, path: str | Path) -> "BudgetRegistry":
        return cls(load_budgets(path))

    def set_budget(self, path: str, max_bytes: int):
        try:
            budget = Budget(path=path, max_bytes=max_bytes)
        except ValidationError as e:
            raise InvalidBudget(f"Invalid budget for {path!r}: {e}") from e
        with self._lock:
            self._budgets[budget.path] = budget.max_bytes

    def remove_budget(self, path: str) -> bool:
        with self._lock:
            return self._budgets.pop(path, None) is not None

    def budgets(self) -> list[Budget]:
        with self._lock:
            return [Budget(path=p, max_bytes=m) for p, m in sorted(self._budgets.items())]

    def check(self, snapshot: Snapshot) -> list[Exceedance]:
        exceedances = check_budgets(snapshot, self.budgets())
        for e in exceedances:
            logger.warning(
                f"Memory budget exceeded for {e.path}: "
                f"{e.actual} / {e.limit} bytes (over by {e.overshoot})"
            )
        return exceedances

    def remaining(self, snapshot: Snapshot, path: str) -> Optional[int]:
        """Bytes of headroom before `path` exceeds its budget; negative when over, None if unbudgeted."""
        with self._lock:
            limit = self._budgets.get(path)
        if limit is None:
            return None
        return limit - rollup(snapshot, path).live_bytes

    def __len__(self) -> int:
        return len(self._budgets)


@lru_cache
def get_budget_registry() -> BudgetRegistry:
    """Process-wide registry, loaded from MEMATTR_BUDGETS_FILE on first use."""
    budgets_file = get_settings().budgets_file
    if budgets_file:
        return BudgetRegistry.from_file(budgets_file)
    return BudgetRegistry()
