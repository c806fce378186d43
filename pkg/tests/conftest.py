import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from plantedgraphs.graph import Graph

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def path_graph(k, n=None):
    n = k if n is None else n
    return Graph(n, [(i, i + 1) for i in range(k - 1)])


def cycle_graph(k):
    return Graph(k, [(i, (i + 1) % k) for i in range(k)])


def star_graph(leaves, n=None):
    n = leaves + 1 if n is None else n
    return Graph(n, [(0, i) for i in range(1, leaves + 1)])


def binary_tree(h, D=2):
    k = (D ** (h + 1) - 1) // (D - 1)
    return Graph(k, [((i - 1) // D, i) for i in range(1, k)])


def random_graph(rng, n, p):
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    return Graph(n, pairs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
