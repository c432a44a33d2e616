"""Per-node graphlet orbit counts for connected graphlets on 2-4 nodes.

Orbit numbering follows the usual 15-orbit convention::

    0  edge                 1, 2   path P3 (end, middle)     3  triangle
    4, 5   path P4 (end, inner)     6, 7   star (leaf, centre)
    8  4-cycle              9, 10, 11  paw (pendant, degree-2, degree-3)
    12, 13 diamond (degree-2, degree-3)                       14 K4

Connected node sets are enumerated once each with the ESU scheme.
"""

from __future__ import annotations

import numpy as np

from .errors import TooLarge
from .graph import Graph

NUM_ORBITS = 15
MAX_NODES = 512


def _classify(sub: tuple, nbrs: list[set]) -> list[int]:
    """Orbit of each node in ``sub`` within its induced (connected) subgraph."""
    k = len(sub)
    deg = [sum(1 for u in sub if u in nbrs[v]) for v in sub]
    m = sum(deg) // 2
    if k == 2:
        return [0, 0]
    if k == 3:
        if m == 3:
            return [3, 3, 3]
        return [2 if d == 2 else 1 for d in deg]
    if m == 3:
        if max(deg) == 3:
            return [7 if d == 3 else 6 for d in deg]
        return [5 if d == 2 else 4 for d in deg]
    if m == 4:
        if max(deg) == 2:
            return [8] * 4
        return [{1: 9, 2: 10, 3: 11}[d] for d in deg]
    if m == 5:
        return [13 if d == 3 else 12 for d in deg]
    return [14] * 4


def orbit_counts(g: Graph) -> np.ndarray:
    """``(n, 15)`` integer array of per-node orbit counts."""
    if g.n > MAX_NODES:
        raise TooLarge(f"orbit counting is limited to {MAX_NODES} nodes, got {g.n}")
    nbrs = [set(np.flatnonzero(row).tolist()) for row in g.adjacency]
    counts = np.zeros((g.n, NUM_ORBITS), dtype=np.int64)

    def record(sub):
        for v, o in zip(sub, _classify(sub, nbrs)):
            counts[v, o] += 1

    def extend(sub: tuple, closed: set, ext: list, root: int):
        if len(sub) > 1:
            record(sub)
        if len(sub) == 4:
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            new = [u for u in nbrs[w] if u > root and u not in closed]
            extend(sub + (w,), closed | nbrs[w], ext + new, root)

    for v in range(g.n):
        extend((v,), nbrs[v] | {v}, [u for u in nbrs[v] if u > v], v)
    return counts
