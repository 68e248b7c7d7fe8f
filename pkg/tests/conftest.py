import networkx as nx
import numpy as np
import pytest

from dotprod_trees.measures import point_measure


def to_nx(tree):
    g = nx.Graph()
    g.add_nodes_from(range(tree.vertex_count))
    g.add_edges_from(tree.edges)
    return g


def random_cloud(n, d=2, seed=0, lo=0.3, hi=1.0, weighted=True):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(n, d))
    w = rng.uniform(0.2, 1.0, size=n) if weighted else np.ones(n)
    return point_measure(pts, w / w.sum())


@pytest.fixture
def two_point():
    return point_measure([[1.0, 0.0], [0.0, 1.0]], [0.5, 0.5])
