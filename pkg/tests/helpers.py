"""Random graph builders shared by the test modules."""

import numpy as np

from g3.graph import Graph, is_connected

def random_graph(rng: np.random.Generator, n: int, p: float) -> Graph:
    A = np.triu((rng.random((n, n)) < p).astype(np.int64), 1)
    return Graph(n, A + A.T)


def random_connected_graph(rng: np.random.Generator, n: int, p: float = 0.3) -> Graph:
    """Random spanning tree plus independent extra edges."""
    edges = {(int(rng.integers(0, i)), i) for i in range(1, n)}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.add((i, j))
    g = Graph.from_edges(n, sorted(edges))
    assert is_connected(g)
    return g
