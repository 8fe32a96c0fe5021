import itertools

import pytest
from hypothesis import HealthCheck, settings

from submod_filter.functions import ConcaveModularInstance, canonical_coverage

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

A, B, C, D = 0, 1, 2, 3


@pytest.fixture
def canonical():
    return canonical_coverage()


def modular(weights):
    return ConcaveModularInstance(weights, 1.0)


def all_subsets(n, size=None):
    sizes = range(n + 1) if size is None else [size]
    for s in sizes:
        for combo in itertools.combinations(range(n), s):
            yield frozenset(combo)
