"""Convex hulls in the plane and in space.

The planar hull is Andrew's monotone chain with a filtered orientation
predicate (float determinant, exact rational fallback near zero).  Spatial
hulls are delegated to Qhull; its triangulated output is regrouped into
polygonal facets whose normals agree within ``COPLANAR_TOL``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial import ConvexHull, QhullError

COPLANAR_TOL = 1e-10
_EPS = np.finfo(float).eps


class DegenerateError(ValueError):
    """Input does not span a full-dimensional body."""


def orient2d(a, b, c) -> int:
    """Sign of det[b - a, c - a]: +1 left turn, -1 right turn, 0 collinear."""
    det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    bound = 4 * _EPS * (
        abs((b[0] - a[0]) * (c[1] - a[1])) + abs((b[1] - a[1]) * (c[0] - a[0]))
    )
    if abs(det) > bound:
        return 1 if det > 0 else -1
    fa = [Fraction(float(x)) for x in a]
    fb = [Fraction(float(x)) for x in b]
    fc = [Fraction(float(x)) for x in c]
    exact = (fb[0] - fa[0]) * (fc[1] - fa[1]) - (fb[1] - fa[1]) * (fc[0] - fa[0])
    return (exact > 0) - (exact < 0)


def orient3d(a, b, c, d) -> int:
    """Sign of det[b - a, c - a, d - a] with exact fallback."""
    m = np.array([b, c, d], dtype=float) - np.asarray(a, dtype=float)
    det = float(np.linalg.det(m))
    bound = 16 * _EPS * float(np.prod(np.linalg.norm(m, axis=1)))
    if abs(det) > bound:
        return 1 if det > 0 else -1
    fa = [Fraction(float(x)) for x in a]
    rows = [[Fraction(float(x)) - fa[i] for i, x in enumerate(p)] for p in (b, c, d)]
    (a1, a2, a3), (b1, b2, b3), (c1, c2, c3) = rows
    exact = a1 * (b2 * c3 - b3 * c2) - a2 * (b1 * c3 - b3 * c1) + a3 * (b1 * c2 - b2 * c1)
    return (exact > 0) - (exact < 0)


@dataclass(frozen=True, eq=False)
class HullData:
    """Vertex/facet description of a full-dimensional polytope (n = 2 or 3).

    ``normals``/``offsets`` describe facets as ``normals @ x <= offsets`` with
    unit outward normals.  ``facets`` holds the vertex indices of each facet,
    counter-clockwise seen from outside.  ``triangles`` is a boundary
    triangulation (edges in 2D) used for fan decompositions.
    """

    vertices: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    facets: tuple
    triangles: np.ndarray
    facet_areas: np.ndarray

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]


def cluster_rows(rows: np.ndarray, tol: float) -> np.ndarray:
    """Label rows so that rows closer than ``tol`` (chained) share a label."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components
    from scipy.spatial import cKDTree

    pairs = cKDTree(rows).query_pairs(tol, output_type="ndarray")
    m = len(rows)
    graph = coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m)
    )
    _, labels = connected_components(graph, directed=False)
    return labels


def _check_span(pts: np.ndarray) -> None:
    n = pts.shape[1]
    if pts.shape[0] < n + 1:
        raise DegenerateError(f"need at least {n + 1} points in R^{n}")
    centered = pts - pts.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s[-1] <= 1e-12 * max(s[0], 1e-300):
        raise DegenerateError("points lie in a lower-dimensional flat")


def _monotone_chain(pts: np.ndarray) -> np.ndarray:
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    p = pts[order]
    # drop exact duplicates
    keep = np.ones(len(p), dtype=bool)
    keep[1:] = np.any(p[1:] != p[:-1], axis=1)
    p = p[keep]

    def half(seq):
        chain: list = []
        for q in seq:
            while len(chain) >= 2 and orient2d(chain[-2], chain[-1], q) <= 0:
                chain.pop()
            chain.append(q)
        return chain

    lower = half(p)
    upper = half(p[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        raise DegenerateError("points are collinear")
    return hull


def hull_2d(points) -> HullData:
    pts = np.asarray(points, dtype=float)
    _check_span(pts)
    v = _monotone_chain(pts)  # counter-clockwise, starts at lexicographic min
    nxt = np.roll(v, -1, axis=0)
    edges = nxt - v
    lengths = np.linalg.norm(edges, axis=1)
    normals = np.column_stack([edges[:, 1], -edges[:, 0]]) / lengths[:, None]
    offsets = np.einsum("ij,ij->i", normals, v)
    k = len(v)
    facets = tuple((i, (i + 1) % k) for i in range(k))
    tri = np.array(facets, dtype=int)
    return HullData(v, normals, offsets, facets, tri, lengths)


def _order_loop(idx: np.ndarray, pts: np.ndarray, normal: np.ndarray) -> tuple:
    """Counter-clockwise (seen from outside) ordering of a planar facet's vertices."""
    p = pts[idx]
    c = p.mean(axis=0)
    a = np.cross(normal, [1.0, 0.0, 0.0])
    if np.linalg.norm(a) < 0.5:
        a = np.cross(normal, [0.0, 1.0, 0.0])
    a /= np.linalg.norm(a)
    b = np.cross(normal, a)
    ang = np.arctan2((p - c) @ b, (p - c) @ a)
    return tuple(int(i) for i in idx[np.argsort(ang)])


def hull_3d(points) -> HullData:
    pts = np.asarray(points, dtype=float)
    _check_span(pts)
    try:
        qh = ConvexHull(pts)
    except QhullError as exc:  # pragma: no cover - span check catches most
        raise DegenerateError(str(exc)) from exc
    used = np.unique(qh.simplices)
    # deterministic vertex order: lexicographic
    order = used[np.lexsort(pts[used].T[::-1])]
    remap = -np.ones(len(pts), dtype=int)
    remap[order] = np.arange(len(order))
    verts = pts[order]
    simp = remap[qh.simplices]
    eq = qh.equations
    # orient every triangle outward
    tri = verts[simp]
    cr = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    flip = np.einsum("ij,ij->i", cr, eq[:, :3]) < 0
    simp[flip] = simp[flip][:, [0, 2, 1]]
    tri_area = 0.5 * np.linalg.norm(cr, axis=1)

    # group triangles into facets by (normal, offset)
    scale = max(1.0, float(np.max(np.abs(eq[:, 3]))))
    labels = cluster_rows(eq / np.array([1.0, 1.0, 1.0, scale]), COPLANAR_TOL)
    by_label = np.argsort(labels, kind="stable")
    groups = np.split(by_label, np.flatnonzero(np.diff(labels[by_label])) + 1)
    normals, offsets, facets, areas = [], [], [], []
    for g in groups:
        r = eq[g].mean(axis=0)
        nrm = r[:3] / np.linalg.norm(r[:3])
        if len(g) == 1:  # a lone triangle is already an outward loop
            idx = simp[g[0]]
            loop = tuple(int(i) for i in idx)
        else:
            idx = np.unique(simp[g])
            loop = _order_loop(idx, verts, nrm)
        normals.append(nrm)
        offsets.append(float(np.mean(verts[idx] @ nrm)))
        facets.append(loop)
        areas.append(float(tri_area[g].sum()))
    normals = np.array(normals)
    key = np.lexsort(normals.T[::-1])
    return HullData(
        verts,
        normals[key],
        np.asarray(offsets)[key],
        tuple(facets[i] for i in key),
        simp,
        np.asarray(areas)[key],
    )


def hull_data(points) -> HullData:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("points must be an (m, n) array")
    if pts.shape[1] == 2:
        return hull_2d(pts)
    if pts.shape[1] == 3:
        return hull_3d(pts)
    raise ValueError("explicit hulls are supported in dimensions 2 and 3 only")
