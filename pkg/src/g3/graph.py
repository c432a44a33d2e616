"""Graph representation, Laplacians and spectral decomposition.

All matrices are dense ``float64`` numpy arrays; node indices are 0-based.
"""

from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from ._io import atomic_write_text
from .errors import InvalidGraph, IsolatedNode, NotSymmetric


class LaplacianKind(enum.Enum):
    COMBINATORIAL = "combinatorial"
    RANDOM_WALK = "random_walk"
    NORMALIZED = "normalized"


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph stored as a dense 0/1 adjacency matrix.

    ``z`` optionally holds one real covariate per node (used for conditional
    generation); it travels with the graph through subgraph extraction and IO.
    """

    n: int
    adjacency: np.ndarray
    z: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=np.float64, copy=True)
        if self.n < 0 or a.shape != (self.n, self.n):
            raise InvalidGraph(f"adjacency shape {a.shape} does not match n={self.n}")
        if not np.all((a == 0) | (a == 1)):
            raise InvalidGraph("adjacency entries must be 0 or 1")
        if not np.array_equal(a, a.T):
            raise InvalidGraph("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise InvalidGraph("self-loops are not allowed")
        a.flags.writeable = False
        object.__setattr__(self, "adjacency", a)
        if self.z is not None:
            z = np.array(self.z, dtype=np.float64, copy=True).reshape(-1)
            if z.shape != (self.n,) or not np.all(np.isfinite(z)):
                raise InvalidGraph("covariates must be a finite length-n vector")
            z.flags.writeable = False
            object.__setattr__(self, "z", z)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], z=None) -> "Graph":
        a = np.zeros((n, n))
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise InvalidGraph(f"self-loop at node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise InvalidGraph(f"edge ({i}, {j}) out of range for n={n}")
            a[i, j] = a[j, i] = 1.0
        return cls(n, a, z)

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return [(int(a), int(b)) for a, b in zip(i, j)]

    @property
    def num_edges(self) -> int:
        return int(self.adjacency.sum()) // 2

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.adjacency, other.adjacency)

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.num_edges})"


def degree_vector(g: Graph) -> np.ndarray:
    return g.adjacency.sum(axis=1).astype(np.int64)


def laplacian(g: Graph, kind: LaplacianKind = LaplacianKind.COMBINATORIAL) -> np.ndarray:
    """Combinatorial ``D - A``, random-walk ``I - D^-1 A`` or normalized
    ``I - D^-1/2 A D^-1/2`` Laplacian."""
    a = g.adjacency
    d = a.sum(axis=1)
    if kind is LaplacianKind.COMBINATORIAL:
        return np.diag(d) - a
    if np.any(d == 0):
        raise IsolatedNode(f"{kind.value} Laplacian needs every degree >= 1")
    eye = np.eye(g.n)
    if kind is LaplacianKind.RANDOM_WALK:
        return eye - a / d[:, None]
    r = 1.0 / np.sqrt(d)
    return eye - r[:, None] * a * r[None, :]


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T

    def spectral_gap(self, tol: float = 1e-8) -> float:
        """Smallest eigenvalue above ``tol``; 0 if none."""
        nz = self.eigenvalues[self.eigenvalues > tol]
        return float(nz[0]) if nz.size else 0.0


def spectral_decompose(L: np.ndarray, tol: float = 1e-10) -> SpectralDecomposition:
    L = np.asarray(L, dtype=np.float64)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {L.shape}")
    if not np.allclose(L, L.T, rtol=0.0, atol=tol):
        raise NotSymmetric("matrix is not symmetric; the random-walk Laplacian has "
                           "the spectrum of the normalized one (similar matrices)")
    w, u = np.linalg.eigh(0.5 * (L + L.T))
    w.flags.writeable = False
    u.flags.writeable = False
    return SpectralDecomposition(w, u)


def connected_components(g: Graph) -> list[list[int]]:
    """Node sets of the connected components, each sorted, ordered by smallest node."""
    nbrs = [np.flatnonzero(row) for row in g.adjacency]
    seen = np.zeros(g.n, dtype=bool)
    comps = []
    for s in range(g.n):
        if seen[s]:
            continue
        seen[s] = True
        q = deque([s])
        comp = [s]
        while q:
            v = q.popleft()
            for u in nbrs[v]:
                if not seen[u]:
                    seen[u] = True
                    comp.append(int(u))
                    q.append(u)
        comps.append(sorted(comp))
    return comps


def is_connected(g: Graph) -> bool:
    return g.n > 0 and len(connected_components(g)) == 1


def induced_subgraph(g: Graph, nodes: Sequence[int]) -> Graph:
    idx = np.asarray(nodes, dtype=np.int64)
    z = None if g.z is None else g.z[idx]
    return Graph(len(idx), g.adjacency[np.ix_(idx, idx)], z)


def largest_connected_component(g: Graph) -> Graph:
    if g.n == 0:
        return g
    comps = connected_components(g)
    # max() keeps the first maximum, and comps are ordered by smallest node
    best = max(comps, key=len)
    if len(best) == g.n:
        return g
    return induced_subgraph(g, best)


# -- JSON Lines IO ----------------------------------------------------------

def graph_to_record(g: Graph) -> dict:
    rec = {"n": g.n, "edges": [[i, j] for i, j in g.edges()]}
    if g.z is not None:
        rec["z"] = [float(v) for v in g.z]
    return rec


def graph_from_record(rec: dict) -> Graph:
    try:
        n = int(rec["n"])
        edges = rec["edges"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidGraph(f"malformed graph record: {exc}") from None
    if n < 0:
        raise InvalidGraph("negative node count")
    for e in edges:
        if len(e) != 2:
            raise InvalidGraph(f"malformed edge {e!r}")
    return Graph.from_edges(n, edges, rec.get("z"))


def iter_jsonl(path) -> Iterator[Graph]:
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidGraph(f"{path}:{lineno}: {exc}") from None
            yield graph_from_record(rec)


def read_jsonl(path) -> list[Graph]:
    return list(iter_jsonl(path))


def dumps_jsonl(graphs: Iterable[Graph]) -> str:
    return "".join(json.dumps(graph_to_record(g), separators=(",", ":")) + "\n" for g in graphs)


def write_jsonl(path, graphs: Iterable[Graph]) -> None:
    atomic_write_text(path, dumps_jsonl(graphs))
