import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import hypothesis
import numpy as np
import pytest

from ppctp.ctp import CtpSpec, Edge, Node, diamond

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.load_profile("default")


def single_edge(weight=3.0, p_open=1.0):
    return CtpSpec((Node(0, 0.0, 0.0), Node(1, 1.0, 0.0)), (Edge(0, 0, 1, weight, p_open),), 0, 1)


def path_graph(w_sa=1.0, w_at=2.0, p_open=1.0):
    """s=0 -- a=1 -- t=2."""
    nodes = (Node(0, 0.0, 0.0), Node(1, 0.5, 0.0), Node(2, 1.0, 0.0))
    edges = (Edge(0, 0, 1, w_sa, p_open), Edge(1, 1, 2, w_at, p_open))
    return CtpSpec(nodes, edges, 0, 2)


def random_small_spec(rng, n_nodes, p_open=0.6):
    """Random connected-or-not small graph with random weights (ids 0..n-1, s=0, t=n-1)."""
    nodes = tuple(Node(i, float(x), float(y)) for i, (x, y) in enumerate(rng.random((n_nodes, 2))))
    pairs = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes) if rng.random() < 0.5]
    if not pairs:
        pairs = [(0, n_nodes - 1)]
    edges = tuple(Edge(k, u, v, float(rng.uniform(0.1, 2.0)), p_open) for k, (u, v) in enumerate(pairs))
    return CtpSpec(nodes, edges, 0, n_nodes - 1)


@pytest.fixture
def diamond_spec():
    return diamond()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
