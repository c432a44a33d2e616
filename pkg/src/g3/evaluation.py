"""Graph statistics and kernel MMD between sets of graphs.

Every statistic is turned into a fixed-length vector per graph:

* degree: normalised histogram over the integers ``0..n_max``
* clustering: normalised histogram, uniform bins on ``[0, 1]``
* triangles: normalised histogram over ``[0, 1), [1, 2), [2, 4), [4, 8), ...``
* orbits: ``log1p`` of the 15 orbit counts summed over nodes
* spectrum: normalised histogram of normalised-Laplacian eigenvalues, uniform
  bins on ``[0, 2]``

and sets of vectors are compared with a Gaussian-kernel MMD (biased
V-statistic). Sums run through ``math.fsum`` so the estimate is exactly
symmetric in its arguments and exactly zero for identical samples.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptySample, IsolatedNode
from .graph import (Graph, LaplacianKind, degree_vector, largest_connected_component,
                    laplacian)
from .orbits import orbit_counts

STATISTICS = ("clustering", "degree", "orbit", "spectrum", "triangles")


@dataclass(frozen=True)
class MmdConfig:
    sigma: float = 1.0
    clustering_bins: int = 100
    spectrum_bins: int = 200
    triangle_octaves: int = 24  # bins [0,1), [1,2), ..., [2^(k-2), inf)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        for name in ("clustering_bins", "spectrum_bins", "triangle_octaves"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


# -- per-node statistics ---------------------------------------------------------

def triangles_per_node(g: Graph) -> np.ndarray:
    """Number of triangles through each node (adjacent pairs of neighbours)."""
    A = g.adjacency
    out = np.zeros(g.n, dtype=np.int64)
    for i in range(g.n):
        nb = np.flatnonzero(A[i])
        out[i] = int(A[np.ix_(nb, nb)].sum()) // 2
    return out


def clustering_coefficients(g: Graph) -> np.ndarray:
    """``2 T_i / (d_i (d_i - 1))`` where ``d_i >= 2``, else 0."""
    d = degree_vector(g).astype(np.float64)
    T = triangles_per_node(g).astype(np.float64)
    c = np.zeros(g.n)
    ok = d >= 2
    c[ok] = 2.0 * T[ok] / (d[ok] * (d[ok] - 1.0))
    return c


def spectrum(g: Graph) -> np.ndarray:
    """Ascending eigenvalues of ``I - D^-1/2 A D^-1/2``, clipped to ``[0, 2]``."""
    L = laplacian(g, LaplacianKind.NORMALIZED)
    return np.clip(np.linalg.eigvalsh(L), 0.0, 2.0)


def _eval_spectrum(g: Graph) -> np.ndarray:
    # graphs with isolated nodes are measured on their largest component
    try:
        return spectrum(g)
    except IsolatedNode:
        lcc = largest_connected_component(g)
        if lcc.n < 2:
            return np.zeros(1)
        return spectrum(lcc)


# -- descriptors ----------------------------------------------------------------

def _normalise(h: np.ndarray) -> np.ndarray:
    h = h.astype(np.float64)
    s = h.sum()
    return h / s if s > 0 else h


def degree_descriptor(g: Graph, n_max: int) -> np.ndarray:
    return _normalise(np.bincount(degree_vector(g).astype(np.int64), minlength=n_max + 1)[:n_max + 1])


def clustering_descriptor(g: Graph, cfg: MmdConfig) -> np.ndarray:
    h, _ = np.histogram(clustering_coefficients(g), bins=cfg.clustering_bins, range=(0.0, 1.0))
    return _normalise(h)


def triangle_edges(cfg: MmdConfig) -> np.ndarray:
    return np.array([0.0] + [2.0**i for i in range(cfg.triangle_octaves - 1)] + [np.inf])


def triangle_descriptor(g: Graph, cfg: MmdConfig) -> np.ndarray:
    h, _ = np.histogram(triangles_per_node(g), bins=triangle_edges(cfg))
    return _normalise(h)


def orbit_descriptor(g: Graph) -> np.ndarray:
    return np.log1p(orbit_counts(g).sum(axis=0).astype(np.float64))


def spectrum_descriptor(g: Graph, cfg: MmdConfig) -> np.ndarray:
    h, _ = np.histogram(_eval_spectrum(g), bins=cfg.spectrum_bins, range=(0.0, 2.0))
    return _normalise(h)


def descriptors(graphs: Sequence[Graph], statistic: str, cfg: MmdConfig,
                n_max: int | None = None) -> np.ndarray:
    """``(len(graphs), k)`` matrix of descriptor vectors for one statistic."""
    if statistic == "degree":
        n_max = max(g.n for g in graphs) if n_max is None else n_max
        rows = [degree_descriptor(g, n_max) for g in graphs]
    elif statistic == "clustering":
        rows = [clustering_descriptor(g, cfg) for g in graphs]
    elif statistic == "triangles":
        rows = [triangle_descriptor(g, cfg) for g in graphs]
    elif statistic == "orbit":
        rows = [orbit_descriptor(g) for g in graphs]
    elif statistic == "spectrum":
        rows = [spectrum_descriptor(g, cfg) for g in graphs]
    else:
        raise ValueError(f"unknown statistic {statistic!r}")
    return np.vstack(rows)


# -- MMD --------------------------------------------------------------------------

def _gram_sum(X: np.ndarray, Y: np.ndarray, sigma: float) -> float:
    total = []
    for x in X:
        sq = ((Y - x) ** 2).sum(axis=1)
        total.extend(np.exp(-sq / (2.0 * sigma**2)).tolist())
    return math.fsum(total)


def _as_rows(sample) -> list[np.ndarray]:
    if isinstance(sample, np.ndarray) and sample.ndim == 2:
        return list(sample.astype(np.float64))
    return [np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in sample]


def _pad(rows: list[np.ndarray], k: int) -> np.ndarray:
    out = np.zeros((len(rows), k))
    for i, r in enumerate(rows):
        out[i, :r.size] = r
    return out


def mmd(sample_p, sample_q, cfg: MmdConfig = MmdConfig()) -> float:
    """Gaussian-kernel MMD between two samples of descriptor vectors.

    Shorter vectors are zero-padded to the common length. Returns the square
    root of the (clamped) biased estimate.
    """
    if len(sample_p) == 0 or len(sample_q) == 0:
        raise EmptySample("MMD needs two nonempty samples")
    rp, rq = _as_rows(sample_p), _as_rows(sample_q)
    k = max(r.size for r in rp + rq)
    P, Q = _pad(rp, k), _pad(rq, k)
    kpp = _gram_sum(P, P, cfg.sigma) / len(P) ** 2
    kqq = _gram_sum(Q, Q, cfg.sigma) / len(Q) ** 2
    # the cross sum is the same multiset of terms either way round
    kpq = _gram_sum(P, Q, cfg.sigma) if len(P) <= len(Q) else _gram_sum(Q, P, cfg.sigma)
    kpq /= len(P) * len(Q)
    return math.sqrt(max(kpp + kqq - 2.0 * kpq, 0.0))


# -- uniqueness -----------------------------------------------------------------

EXACT_ISOMORPHISM_MAX_N = 16


def _refine(adjs: list[np.ndarray]) -> list[list[int]]:
    """Joint colour refinement of several graphs; colours are comparable across them."""
    colours = [[int(d) for d in A.sum(1)] for A in adjs]
    nbrs = [[np.flatnonzero(row).tolist() for row in A] for A in adjs]
    while True:
        sigs = [[(c[v], tuple(sorted(c[u] for u in nb[v]))) for v in range(len(c))]
                for c, nb in zip(colours, nbrs)]
        palette = {s: i for i, s in enumerate(sorted(set(itertools.chain(*sigs))))}
        new = [[palette[s] for s in sg] for sg in sigs]
        if all(len(set(a)) == len(set(b)) for a, b in zip(new, colours)):
            return new
        colours = new


def isomorphic(g: Graph, h: Graph) -> bool:
    """Exact isomorphism test by backtracking over colour-refined candidates."""
    if g.n != h.n or g.num_edges != h.num_edges:
        return False
    A, B = g.adjacency.astype(bool), h.adjacency.astype(bool)
    cg, ch = _refine([A, B])
    if sorted(cg) != sorted(ch):
        return False
    order = sorted(range(g.n), key=lambda v: (sum(1 for u in cg if u == cg[v]), -A[v].sum()))
    mapping: dict[int, int] = {}
    used = set()

    def extend(k: int) -> bool:
        if k == len(order):
            return True
        v = order[k]
        for w in range(h.n):
            if w in used or ch[w] != cg[v]:
                continue
            if all(A[v, u] == B[w, mapping[u]] for u in mapping):
                mapping[v] = w
                used.add(w)
                if extend(k + 1):
                    return True
                del mapping[v]
                used.discard(w)
        return False

    return extend(0)


def fingerprint(g: Graph) -> tuple:
    """Heuristic invariant: sorted degrees and sorted combinatorial spectrum (1e-6)."""
    L = laplacian(g, LaplacianKind.COMBINATORIAL)
    ev = np.round(np.linalg.eigvalsh(L), 6) + 0.0  # normalise -0.0
    return (g.n, tuple(sorted(degree_vector(g).astype(int).tolist())), tuple(ev.tolist()))


def non_unique_fraction(graphs: Sequence[Graph]) -> float:
    """Share of graphs that repeat (up to isomorphism) an earlier graph in the list."""
    if len(graphs) == 0:
        raise EmptySample("no graphs")
    reps: dict[tuple, list[Graph]] = {}
    duplicates = 0
    for g in graphs:
        if g.n <= EXACT_ISOMORPHISM_MAX_N:
            key = (g.n, g.num_edges, tuple(sorted(degree_vector(g).astype(int).tolist())))
            bucket = reps.setdefault(key, [])
            if any(isomorphic(g, h) for h in bucket):
                duplicates += 1
            else:
                bucket.append(g)
        else:
            key = fingerprint(g)
            if key in reps:
                duplicates += 1
            else:
                reps[key] = []
    return duplicates / len(graphs)


def evaluate(generated: Sequence[Graph], reference: Sequence[Graph],
             cfg: MmdConfig = MmdConfig(), statistics: Sequence[str] = STATISTICS) -> dict:
    """MMD per statistic plus the non-unique fraction of ``generated``."""
    if len(generated) == 0 or len(reference) == 0:
        raise EmptySample("evaluate needs nonempty generated and reference sets")
    n_max = max(g.n for g in itertools.chain(generated, reference))
    report = {}
    for stat in statistics:
        report[stat] = mmd(descriptors(generated, stat, cfg, n_max),
                           descriptors(reference, stat, cfg, n_max), cfg)
    report["non_unique_fraction"] = non_unique_fraction(generated)
    return report
