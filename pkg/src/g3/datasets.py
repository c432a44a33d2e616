"""Synthetic graph families (SBM, degree-corrected SBM, Delaunay planar),
train/test splitting and edge-list import."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .delaunay import delaunay_edges, orientation
from .errors import DegenerateConfiguration, InvalidGraph, TooFewGraphs
from .graph import Graph, graph_from_record
from .rng import stream


@dataclass(frozen=True)
class SbmSpec:
    n: int
    p_intra: float = 0.3
    p_inter: float = 0.05
    k: Optional[int] = None  # None: drawn uniformly from {2, 3, 4, 5} per graph
    degree_corrected: bool = False
    dc_beta: tuple = (1.0, 1.0)
    balanced: bool = True
    covariates: bool = False  # attach +-1 block membership as z (two blocks only)

    def __post_init__(self):
        for p in (self.p_intra, self.p_inter):
            if not 0.0 <= p <= 1.0:
                raise ValueError("edge probabilities must lie in [0, 1]")
        if self.k is not None and not 2 <= self.k <= self.n:
            raise ValueError("need 2 <= k <= n")
        if self.covariates and self.k != 2:
            raise ValueError("covariates are defined for two-block models")


@dataclass(frozen=True)
class PlanarSpec:
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("planar graphs need n >= 3")


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")


def block_sizes(n: int, k: int, balanced: bool = True,
                rng: Optional[np.random.Generator] = None) -> list[int]:
    """Contiguous block sizes. Balanced sizes differ by at most one; otherwise
    each block gets ``n // (2k)`` nodes and the rest is split uniformly at random."""
    if balanced:
        q, r = divmod(n, k)
        return [q + (i < r) for i in range(k)]
    base = n // (2 * k)
    extra = rng.multinomial(n - k * base, np.full(k, 1.0 / k))
    return [int(base + e) for e in extra]


def gen_sbm(spec: SbmSpec, rng: np.random.Generator) -> Graph:
    k = spec.k if spec.k is not None else int(rng.integers(2, 6))
    k = min(k, spec.n)
    sizes = block_sizes(spec.n, k, spec.balanced, rng)
    labels = np.repeat(np.arange(k), sizes)
    same = labels[:, None] == labels[None, :]
    P = np.where(same, spec.p_intra, spec.p_inter)
    if spec.degree_corrected:
        theta = rng.beta(*spec.dc_beta, size=spec.n)
        P = np.clip(P * np.outer(theta, theta), 0.0, 1.0)
    upper = np.triu(rng.random((spec.n, spec.n)) < P, 1)
    A = (upper | upper.T).astype(np.float64)
    z = np.where(labels == 0, 1.0, -1.0) if spec.covariates else None
    return Graph(spec.n, A, z)


def sbm_labels(g: Graph) -> np.ndarray:
    """Block membership recovered from +-1 covariates."""
    if g.z is None:
        raise ValueError("graph carries no block covariates")
    return (g.z < 0).astype(np.int64)


def _degenerate(pts: np.ndarray) -> bool:
    if len(np.unique(pts, axis=0)) < len(pts):
        return True
    a, b = pts[0], pts[1]
    return all(orientation(a, b, c) == 0 for c in pts[2:])


def gen_planar(spec: PlanarSpec, rng: np.random.Generator, return_points: bool = False):
    """Delaunay triangulation of ``n`` uniform points in the unit square."""
    for _ in range(100):
        pts = rng.random((spec.n, 2))
        if not _degenerate(pts):
            break
    else:
        raise DegenerateConfiguration("100 consecutive degenerate point sets")
    g = Graph.from_edges(spec.n, sorted(delaunay_edges(pts)))
    return (g, pts) if return_points else g


def generate(kind: str, n: int, count: int, seed: int, **kw) -> list[Graph]:
    """``count`` graphs of family ``kind`` in {sbm, dcsbm, planar}; graph ``i``
    draws from its own stream so prefixes agree across counts."""
    out = []
    for i in range(count):
        rng = stream(seed, "data", i)
        if kind == "planar":
            out.append(gen_planar(PlanarSpec(n), rng))
        elif kind in ("sbm", "dcsbm"):
            out.append(gen_sbm(SbmSpec(n, degree_corrected=kind == "dcsbm", **kw), rng))
        else:
            raise ValueError(f"unknown graph family {kind!r}")
    return out


def split(graphs: Sequence, spec: SplitSpec) -> tuple[list, list]:
    """Seeded shuffle, then the first ``ceil(fraction * N)`` graphs (at most
    ``N - 1``) go to training."""
    N = len(graphs)
    if N < 2:
        raise TooFewGraphs(f"need at least 2 graphs to split, got {N}")
    perm = stream(spec.seed, "split").permutation(N)
    n_train = min(math.ceil(spec.train_fraction * N - 1e-9), N - 1)
    return [graphs[i] for i in perm[:n_train]], [graphs[i] for i in perm[n_train:]]


def import_graphs(path) -> list[Graph]:
    """Read graphs from JSON Lines (``{"n":..,"edges":[[i,j],..]}``) or from a
    whitespace edge list with one ``i j`` pair per line, blank lines separating
    graphs and an optional ``n <count>`` header line per graph."""
    text = open(path).read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        graphs = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if line.strip():
                try:
                    graphs.append(graph_from_record(json.loads(line)))
                except json.JSONDecodeError as exc:
                    raise InvalidGraph(f"{path}:{lineno}: {exc}") from None
        return graphs
    graphs = []
    for chunk in text.split("\n\n"):
        n, edges = None, []
        for line in chunk.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "n" and len(parts) == 2:
                n = int(parts[1])
                continue
            if len(parts) < 2:
                raise InvalidGraph(f"bad edge line {line!r}")
            edges.append((int(parts[0]), int(parts[1])))
        if n is None and not edges:
            continue
        if n is None:
            n = 1 + max(max(e) for e in edges)
        # drop duplicate undirected pairs
        uniq = sorted({(min(e), max(e)) for e in edges})
        graphs.append(Graph.from_edges(n, uniq))
    return graphs
