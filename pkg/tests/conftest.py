import numpy as np
import pytest

from graphpot import Potential, WeightedGraph


def random_connected_graph(rng, n_max=12, n_min=2, extra_edge_prob=0.3,
                           weight_range=(0.5, 2.0)):
    """Random spanning tree plus extra edges; always connected."""
    n = int(rng.integers(n_min, n_max + 1))
    edges = {}
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges[(u, v)] = float(rng.uniform(*weight_range))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and rng.random() < extra_edge_prob:
                edges[(u, v)] = float(rng.uniform(*weight_range))
    if not edges:  # n == 1
        return WeightedGraph([0], {})
    return WeightedGraph(range(n), edges)


def random_potential(rng, graph, scale=3.0):
    return Potential({v: float(rng.normal(0.0, scale)) for v in graph.vertices})


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def unit_triangle():
    return WeightedGraph([0, 1, 2], {(0, 1): 1.0, (1, 2): 1.0, (0, 2): 1.0})


@pytest.fixture
def weighted_triangle():
    # the loader example: 0-1 and 1-2 unit, 0-2 double
    return WeightedGraph([0, 1, 2], {(0, 1): 1.0, (1, 2): 1.0, (0, 2): 2.0})


@pytest.fixture
def single_edge():
    return WeightedGraph([0, 1], {(0, 1): 1.0})


@pytest.fixture
def star4():
    # center 0 with three unit spokes
    return WeightedGraph([0, 1, 2, 3], {(0, 1): 1.0, (0, 2): 1.0, (0, 3): 1.0})
