import numpy as np
import pytest

from graphs.adjacency import AdjacencyFlags, build_adjacency
from graphs.penman import parse_penman
from stages.stage1_generate import random_graph

NORMALIZED = AdjacencyFlags(row_normalize=True)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end training runs (deselect with -m 'not slow')")


def sample_graphs(rng, count, min_nodes=4, max_nodes=8):
    """`count` random graphs with min_nodes..max_nodes nodes."""
    graphs = []
    while len(graphs) < count:
        g = random_graph(rng, max_nodes)
        if g.n >= min_nodes:
            graphs.append(g)
    return graphs


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def want_graph():
    return parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))")


@pytest.fixture
def small_adjacencies(rng):
    """Five row-normalized adjacencies of 4-8 node graphs."""
    return [build_adjacency(g, NORMALIZED) for g in sample_graphs(rng, 5)]
