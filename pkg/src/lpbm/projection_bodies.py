"""Mixed projection bodies Pi_0 K and Pi_1 K of bodies in R^3.

h_{Pi_i K}(u) is the i-th planar quermassintegral of the shadow K | u^perp:
the shadow area for i = 0 and half the shadow perimeter for i = 1.  For a
polytope both are exact per direction: the area is (1/2) sum_f A_f |n_f . u|
and the perimeter is the projected length of the silhouette edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ellipe

from lpbm.functionals.estimate import Estimate
from lpbm.functionals.quermass import quermassintegral_exact
from lpbm.geometry.bodies import (
    Ball,
    ConvexBody,
    Ellipsoid,
    Polytope,
    SupportSampled,
    closed_form,
    memo,
    outer_polytope,
    scale_decompose,
)
from lpbm.geometry.directions import DirectionSet, default_directions, unit_ball_volume


@dataclass(frozen=True)
class ProjectionBodySpec:
    i: int
    grid: DirectionSet = field(default_factory=lambda: default_directions(3))

    def __post_init__(self):
        if self.i not in (0, 1):
            raise ValueError("mixed projection bodies are built for i in {0, 1} (n = 3)")
        if self.grid.dim != 3:
            raise ValueError("projection bodies are built in R^3")
        if not self.grid.is_antipodal():
            raise ValueError("the grid must be antipodally closed")

    @property
    def k(self) -> int:
        return 2 - self.i


def _edges(P: Polytope) -> tuple[np.ndarray, np.ndarray]:
    """Edge vectors (E, 3) and the two facets adjacent to each edge (E, 2)."""
    hd = P.hull
    owner = {}
    vecs, pairs = [], []
    for f, loop in enumerate(hd.facets):
        for a, b in zip(loop, loop[1:] + loop[:1]):
            key = (min(a, b), max(a, b))
            if key in owner:
                vecs.append(hd.vertices[a] - hd.vertices[b])
                pairs.append((owner.pop(key), f))
            else:
                owner[key] = f
    return np.array(vecs), np.array(pairs)


def _basis_perp(u: np.ndarray) -> np.ndarray:
    """(m, 3, 2) orthonormal bases of the planes u^perp."""
    a = np.where(np.abs(u[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    e1 = np.cross(u, a)
    e1 /= np.linalg.norm(e1, axis=1)[:, None]
    e2 = np.cross(u, e1)
    return np.stack([e1, e2], axis=2)


def shadow_area(K: ConvexBody, U: np.ndarray, grid: DirectionSet | None = None) -> tuple[np.ndarray, bool]:
    """V_2(K | u^perp) for each row u of U; returns (values, exact)."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    cf = closed_form(K)
    if isinstance(cf, Ball):
        return np.full(len(U), math.pi * cf.radius ** 2), True
    if isinstance(cf, Ellipsoid):
        A = cf.matrix
        q = np.einsum("ij,jk,ik->i", U, np.linalg.inv(A), U)
        return math.pi * math.sqrt(float(np.linalg.det(A))) * np.sqrt(q), True
    P, exact = outer_polytope(K, grid)
    hd = P.hull
    return 0.5 * np.abs(U @ hd.normals.T) @ hd.facet_areas, exact


def shadow_half_perimeter(K: ConvexBody, U: np.ndarray,
                          grid: DirectionSet | None = None) -> tuple[np.ndarray, bool]:
    """Half the perimeter of K | u^perp for each row u of U; returns (values, exact)."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    cf = closed_form(K)
    if isinstance(cf, Ball):
        return np.full(len(U), math.pi * cf.radius), True
    if isinstance(cf, Ellipsoid):
        B = _basis_perp(U)
        M = np.einsum("kia,ij,kjb->kab", B, cf.matrix, B)
        ev = np.linalg.eigvalsh(M)
        a, b = np.sqrt(ev[:, 1]), np.sqrt(ev[:, 0])
        return 2 * a * ellipe(1.0 - (b / a) ** 2), True
    P, exact = outer_polytope(K, grid)
    vecs, pairs = _edges(P)
    N = P.hull.normals
    out = np.empty(len(U))
    for s in range(0, len(U), 256):
        u = U[s:s + 256]
        up = (u @ N.T) > 0
        sil = up[:, pairs[:, 0]] != up[:, pairs[:, 1]]
        along = vecs @ u.T  # (E, m)
        proj = np.sqrt(np.maximum(np.sum(vecs * vecs, axis=1)[:, None] - along ** 2, 0.0))
        out[s:s + 256] = 0.5 * np.sum(sil * proj.T, axis=1)
    return out, exact


def mixed_projection_body(K: ConvexBody, spec: ProjectionBodySpec | int,
                          body_grid: DirectionSet | None = None) -> SupportSampled:
    """Pi_i K sampled on spec.grid.

    ``body_grid`` is the grid used for the circumscribed polytope of K when K
    has no exact polytope or closed form.
    """
    if isinstance(spec, int):
        spec = ProjectionBodySpec(spec)
    if K.dim != 3:
        raise ValueError("mixed projection bodies are implemented for n = 3")
    return memo(K, ("projection_body", spec.i, spec.grid, body_grid),
                lambda: _projection_body(K, spec, body_grid))


def _projection_body(K: ConvexBody, spec: ProjectionBodySpec, body_grid) -> SupportSampled:
    U = spec.grid.directions
    f = shadow_area if spec.i == 0 else shadow_half_perimeter
    h, _ = f(K, U, body_grid)
    # shadows on u^perp and (-u)^perp coincide; make that exact in floating point
    h = 0.5 * (h + h[spec.grid.antipodes])
    if np.min(h) <= 0:
        raise ValueError("degenerate shadow: the body is not full-dimensional")
    return SupportSampled(spec.grid, h)


def composite_projection_functional(K: ConvexBody, j: int, k: int,
                                    grid: DirectionSet | None = None,
                                    body_grid: DirectionSet | None = None) -> Estimate:
    """W_{n-j}(Pi_{n-1-k} K) in R^3; homogeneous of degree j k.

    Pi K is a grid-sampled body, so the value is evaluated on its
    circumscribed polytope and flagged approximate (balls are closed form).
    """
    if K.dim != 3:
        raise ValueError("composite projection functionals are implemented for n = 3")
    if j not in (1, 2, 3) or k not in (1, 2):
        raise ValueError("need j in {1, 2, 3} and k in {1, 2}")
    cf = closed_form(K)
    if isinstance(cf, Ball):
        rho = math.pi * cf.radius ** k
        return Estimate(unit_ball_volume(3) * rho ** j)
    # dilates reuse the memoized value of their base body
    lam, base = scale_decompose(K)
    value = memo(base, ("composite_projection", j, k, grid, body_grid),
                 lambda: _composite(base, j, k, grid, body_grid))
    return Estimate(lam ** (j * k) * value, 0.0, True)


def _composite(K: ConvexBody, j: int, k: int, grid, body_grid) -> float:
    spec = ProjectionBodySpec(2 - k) if grid is None else ProjectionBodySpec(2 - k, grid)
    Pi = mixed_projection_body(K, spec, body_grid)
    return quermassintegral_exact(Pi, 3 - j).value
