"""Quasi-uniform direction sets on the unit sphere with quadrature weights."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import SphericalVoronoi
from scipy.special import gamma

DEFAULT_COUNTS = {2: 720, 3: 2562}


def unit_ball_volume(j: int) -> float:
    """Volume of the j-dimensional unit ball, pi^(j/2) / Gamma(j/2 + 1)."""
    if j == 0:
        return 1.0
    if j == 1:
        return 2.0
    if j == 2:
        return float(np.pi)
    if j == 3:
        return 4.0 * np.pi / 3.0
    return float(np.pi ** (j / 2.0) / gamma(j / 2.0 + 1.0))


def sphere_area(n: int) -> float:
    """Surface measure of S^{n-1}, equal to n * omega_n."""
    return n * unit_ball_volume(n)


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Unit vectors with nonnegative weights summing to the sphere's area.

    ``covering_angle`` is the largest angle from any point of the sphere to
    its nearest direction; it bounds how far a circumscribed polytope built
    from this set can stick out of the body.
    """

    directions: np.ndarray
    weights: np.ndarray
    covering_angle: float
    _key: tuple = field(default=(), compare=False)

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if d.ndim != 2 or d.shape[1] < 2:
            raise ValueError("directions must be an (m, n) array with n >= 2")
        if w.shape != (d.shape[0],):
            raise ValueError("one weight per direction")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        norms = np.linalg.norm(d, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-12:
            raise ValueError("directions must be unit vectors")
        d.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def __len__(self) -> int:
        return self.directions.shape[0]

    @property
    def antipodes(self) -> np.ndarray:
        """Index of -u for every u; raises if the set is not antipodally closed."""
        idx = _antipode_index(self.directions)
        if idx is None:
            raise ValueError("direction set is not antipodally closed")
        return idx

    def is_antipodal(self) -> bool:
        return _antipode_index(self.directions) is not None

    def grid_error(self) -> float:
        """Relative overshoot bound of a circumscribed body, n(1/cos(theta) - 1)."""
        return self.dim * (1.0 / np.cos(self.covering_angle) - 1.0)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def _antipode_index(d: np.ndarray) -> np.ndarray | None:
    from scipy.spatial import cKDTree

    tree = cKDTree(d)
    dist, idx = tree.query(-d)
    if np.max(dist) > 1e-9:
        return None
    return idx


def circle_directions(m: int = 720) -> DirectionSet:
    """m equally spaced angles on S^1 (m even)."""
    if m < 4 or m % 2:
        raise ValueError("circle grid needs an even count >= 4")
    theta = 2.0 * np.pi * np.arange(m) / m
    d = np.column_stack([np.cos(theta), np.sin(theta)])
    # exact axis values keep box normals exact
    d[np.abs(d) < 1e-15] = 0.0
    for k in range(4):
        if (k * m) % 4 == 0:
            i = k * m // 4
            d[i] = [(1, 0), (0, 1), (-1, 0), (0, -1)][k]
    w = np.full(m, 2.0 * np.pi / m)
    return DirectionSet(d, w, np.pi / m, ("circle", m))


_PHI = (1.0 + 5.0 ** 0.5) / 2.0


def _icosahedron():
    v = np.array(
        [
            [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
            [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
            [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
        ],
        dtype=float,
    )
    v /= np.linalg.norm(v, axis=1)[:, None]
    f = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    return [tuple(x) for x in v], f


def icosphere_points(level: int) -> np.ndarray:
    verts, faces = _icosahedron()
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = np.add(verts[a], verts[b])
                m /= np.linalg.norm(m)
                verts.append(tuple(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    return np.array(verts)


def sphere_directions(count: int = 2562) -> DirectionSet:
    """Subdivided-icosahedron vertices with spherical Voronoi cell areas.

    ``count`` must be one of 12, 42, 162, 642, 2562, 10242.
    """
    level = 0
    while 10 * 4 ** level + 2 < count:
        level += 1
    if 10 * 4 ** level + 2 != count:
        raise ValueError(f"icosphere grids have 10*4^k+2 points, got {count}")
    pts = icosphere_points(level)
    sv = SphericalVoronoi(pts, radius=1.0)
    areas = sv.calculate_areas()
    # covering radius: farthest Voronoi vertex from its generators
    cover = 0.0
    for i, region in enumerate(sv.regions):
        cosines = sv.vertices[region] @ pts[i]
        cover = max(cover, float(np.arccos(np.clip(cosines.min(), -1.0, 1.0))))
    return DirectionSet(pts, areas, cover, ("icosphere", count))


def random_directions(n: int, count: int, seed: int = 0) -> DirectionSet:
    """Antipodally closed Gaussian directions for n >= 4 (equal weights)."""
    rng = np.random.Generator(np.random.Philox(seed))
    half = rng.standard_normal((count // 2, n))
    half /= np.linalg.norm(half, axis=1)[:, None]
    d = np.vstack([half, -half])
    w = np.full(d.shape[0], sphere_area(n) / d.shape[0])
    # crude covering estimate; only used for tolerances
    cover = float(np.pi * (d.shape[0] / 2.0) ** (-1.0 / (n - 1)))
    return DirectionSet(d, w, cover, ("random", n, count, seed))


@lru_cache(maxsize=32)
def default_directions(n: int, count: int | None = None) -> DirectionSet:
    """Working grid for dimension n (cached, immutable)."""
    if n == 2:
        return circle_directions(count or DEFAULT_COUNTS[2])
    if n == 3:
        return sphere_directions(count or DEFAULT_COUNTS[3])
    return random_directions(n, count or 4000)
