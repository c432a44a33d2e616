"""Incremental Bowyer-Watson Delaunay triangulation in the plane.

The in-circle test runs in floating point with a forward error bound and falls
back to exact rational arithmetic when the sign is uncertain, so the large
super-triangle does not cost precision. Cocircular ties count as "outside",
which leaves the triangulation chosen by insertion order.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

_EPS = np.finfo(np.float64).eps / 2
_ICC_BOUND = (10.0 + 96.0 * _EPS) * _EPS
_SUPER = 1e8


def _orient_exact(a, b, c) -> int:
    ax, ay, bx, by, cx, cy = (Fraction(v) for v in (*a, *b, *c))
    d = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (d > 0) - (d < 0)


def orientation(a, b, c) -> int:
    """+1 if ``a, b, c`` turn counter-clockwise, -1 clockwise, 0 collinear."""
    d = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    bound = 4 * _EPS * (abs((b[0] - a[0]) * (c[1] - a[1])) + abs((b[1] - a[1]) * (c[0] - a[0])))
    if abs(d) > bound:
        return 1 if d > 0 else -1
    return _orient_exact(a, b, c)


def _incircle_exact(a, b, c, d) -> int:
    rows = []
    for p in (a, b, c):
        x, y = Fraction(p[0]) - Fraction(d[0]), Fraction(p[1]) - Fraction(d[1])
        rows.append((x, y, x * x + y * y))
    (ax, ay, al), (bx, by, bl), (cx, cy, cl) = rows
    det = (al * (bx * cy - cx * by) - bl * (ax * cy - cx * ay) + cl * (ax * by - bx * ay))
    return (det > 0) - (det < 0)


def _incircle_many(P: np.ndarray, tris: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Boolean mask: is ``d`` strictly inside the circumcircle of each CCW triangle."""
    A = P[tris[:, 0]] - d
    B = P[tris[:, 1]] - d
    C = P[tris[:, 2]] - d
    al = (A * A).sum(1)
    bl = (B * B).sum(1)
    cl = (C * C).sum(1)
    t1 = B[:, 0] * C[:, 1] - C[:, 0] * B[:, 1]
    t2 = A[:, 0] * C[:, 1] - C[:, 0] * A[:, 1]
    t3 = A[:, 0] * B[:, 1] - B[:, 0] * A[:, 1]
    det = al * t1 - bl * t2 + cl * t3
    perm = (al * (np.abs(B[:, 0] * C[:, 1]) + np.abs(C[:, 0] * B[:, 1]))
            + bl * (np.abs(A[:, 0] * C[:, 1]) + np.abs(C[:, 0] * A[:, 1]))
            + cl * (np.abs(A[:, 0] * B[:, 1]) + np.abs(B[:, 0] * A[:, 1])))
    inside = det > 0
    unsure = np.abs(det) <= _ICC_BOUND * perm
    for k in np.flatnonzero(unsure):
        a, b, c = (P[v] for v in tris[k])
        inside[k] = _incircle_exact(a, b, c, d) > 0
    return inside


def delaunay_triangles(points) -> np.ndarray:
    """Triangles (CCW index triples into ``points``) of the Delaunay triangulation."""
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    if n < 3:
        return np.zeros((0, 3), dtype=np.int64)
    lo, hi = pts.min(0), pts.max(0)
    centre = (lo + hi) / 2
    r = max(float((hi - lo).max()), 1.0) * _SUPER
    super_pts = centre + r * np.array([[-3.0, -3.0], [3.0, -3.0], [0.0, 3.0]])
    P = np.vstack([pts, super_pts])
    tris = np.array([[n, n + 1, n + 2]], dtype=np.int64)
    for i in range(n):
        bad = _incircle_many(P, tris, P[i])
        # boundary of the cavity: edges belonging to exactly one bad triangle
        edge_count: dict[tuple[int, int], int] = {}
        directed = []
        for a, b, c in tris[bad]:
            for u, v in ((a, b), (b, c), (c, a)):
                key = (u, v) if u < v else (v, u)
                edge_count[key] = edge_count.get(key, 0) + 1
                directed.append((u, v))
        new = [(u, v, i) for u, v in directed
               if edge_count[(u, v) if u < v else (v, u)] == 1]
        tris = np.vstack([tris[~bad], np.array(new, dtype=np.int64).reshape(-1, 3)])
    keep = np.all(tris < n, axis=1)
    return tris[keep]


def delaunay_edges(points) -> set[tuple[int, int]]:
    edges = set()
    for a, b, c in delaunay_triangles(points):
        for u, v in ((a, b), (b, c), (c, a)):
            edges.add((int(min(u, v)), int(max(u, v))))
    return edges


def segments_cross(p1, p2, p3, p4) -> bool:
    """Do the closed segments p1p2 and p3p4 properly intersect (shared
    endpoints excluded)?"""
    o1 = orientation(p1, p2, p3)
    o2 = orientation(p1, p2, p4)
    o3 = orientation(p3, p4, p1)
    o4 = orientation(p3, p4, p2)
    return o1 * o2 < 0 and o3 * o4 < 0
