import itertools

import pytest


@pytest.fixture
def registry():
    from tagging.tag_model import TagRegistry
    return TagRegistry()


@pytest.fixture
def clock():
    """Deterministic monotonic clock: 1, 2, 3, ..."""
    return itertools.count(1).__next__


@pytest.fixture
def tracker(clock):
    from hooks.interceptor import Interceptor
    return Interceptor(enabled=True, sampling_rate=1, clock=clock)


@pytest.fixture
def tree(registry):
    from accounting.attribution import AttributionTree
    return AttributionTree(registry)


@pytest.fixture(autouse=True)
def fresh_settings():
    """Settings and the budget registry are rebuilt from each test's own environment."""
    from accounting.budgets import get_budget_registry
    from config import get_settings
    get_settings.cache_clear()
    get_budget_registry.cache_clear()
    yield
    get_settings.cache_clear()
    get_budget_registry.cache_clear()
