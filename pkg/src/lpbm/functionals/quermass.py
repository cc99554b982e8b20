"""Quermassintegrals and their harmonic / affine variants, plus the width functional.

All Grassmannian averages share one sampler: for a given stream the same
subspaces are drawn, so W_j, harmonic W_j and Phi_j of a body are computed on
identical samples (which makes their power-mean ordering exact).
"""

from __future__ import annotations

import numpy as np

from lpbm.functionals.estimate import Estimate, mc_estimate
from lpbm.functionals.volumes import surface_area_estimate, volume_estimate
from lpbm.geometry.bodies import (
    Ball,
    ConstantWidth2D,
    ConvexBody,
    Ellipsoid,
    closed_form,
    exact_polytope,
    outer_polytope,
    width,
)
from lpbm.geometry.directions import DirectionSet, default_directions, unit_ball_volume
from lpbm.geometry.hull import DegenerateError
from lpbm.grassmann import as_stream, projected_volumes, sample_bases

DEFAULT_SAMPLES = 20000


def _ball_radius(K: ConvexBody) -> float | None:
    cf = closed_form(K)
    return cf.radius if isinstance(cf, Ball) else None


def projection_sample(K: ConvexBody, k: int, samples: int, rng,
                      grid: DirectionSet | None = None) -> tuple[np.ndarray, bool]:
    """V_k(K | xi) for Haar xi in G_{n,k}; rejects degenerate projections."""
    bases = sample_bases(K.dim, k, samples, as_stream(rng))
    v, exact = projected_volumes(K, bases, grid)
    if np.min(v) <= 0:
        raise DegenerateError("a sampled projection has nonpositive volume")
    return v, exact


def quermassintegral(K: ConvexBody, index: int, samples: int = DEFAULT_SAMPLES, rng=0,
                     grid: DirectionSet | None = None) -> Estimate:
    """W_index(K) = (omega_n / omega_j) E[V_j(K | xi)] with j = n - index.

    Closed forms: index 0 is the volume, balls give omega_n r^j, and in the
    plane W_1 is half the perimeter (exact for polygons and Reuleaux bodies,
    support quadrature otherwise).
    """
    n = K.dim
    j = n - index
    if index == 0:
        v, exact = volume_estimate(K, grid)
        return Estimate(v, 0.0, not exact)
    if not 1 <= j <= n - 1:
        raise ValueError(f"quermassintegral index must be in 0..{n - 1}")
    r = _ball_radius(K)
    if r is not None:
        return Estimate(unit_ball_volume(n) * r ** j)
    if n == 2:
        if exact_polytope(K) is not None or isinstance(closed_form(K), (ConstantWidth2D, Ellipsoid)):
            s, _ = surface_area_estimate(K, grid)
            return Estimate(0.5 * s)
        G = default_directions(2) if grid is None else grid
        return Estimate(0.5 * G.integrate(K.support(G.directions)), 0.0, True)
    v, exact = projection_sample(K, j, samples, rng, grid)
    c = unit_ball_volume(n) / unit_ball_volume(j)
    return mc_estimate(v, approximate=not exact).scaled(c)


def _edge_curvature(P) -> float:
    """Sum over edges of length times exterior dihedral angle (n = 3)."""
    hd = P.hull
    owner = {}
    total = 0.0
    for f, loop in enumerate(hd.facets):
        for a, b in zip(loop, loop[1:] + loop[:1]):
            key = (min(a, b), max(a, b))
            if key in owner:
                g = owner.pop(key)
                c = float(np.clip(hd.normals[f] @ hd.normals[g], -1.0, 1.0))
                total += np.linalg.norm(hd.vertices[a] - hd.vertices[b]) * np.arccos(c)
            else:
                owner[key] = f
    return total


def quermassintegral_exact(K: ConvexBody, index: int, grid: DirectionSet | None = None) -> Estimate:
    """Deterministic W_index in R^3 (and R^2): surface area and edge curvature.

    W_1 = S/3 and W_2 = (1/6) sum_e length(e) * exterior angle(e), evaluated
    on the body itself when it is an exact polytope, otherwise on its
    circumscribed grid polytope (flagged approximate).
    """
    n = K.dim
    if index == 0 or n == 2 or _ball_radius(K) is not None:
        return quermassintegral(K, index, grid=grid)
    if n != 3 or index not in (1, 2):
        raise ValueError("exact quermassintegrals need n = 3 and index 1 or 2")
    P, exact = outer_polytope(K, grid)
    if index == 1:
        s, _ = surface_area_estimate(P)
        return Estimate(s / 3.0, 0.0, not exact)
    return Estimate(float(_edge_curvature(P)) / 6.0, 0.0, not exact)


def harmonic_quermassintegral(K: ConvexBody, index: int, samples: int = DEFAULT_SAMPLES, rng=0,
                              grid: DirectionSet | None = None) -> Estimate:
    """(omega_n / omega_{n-j}) / E[V_{n-j}(K | xi)^{-1}]."""
    n = K.dim
    if index == 0:
        v, exact = volume_estimate(K, grid)
        return Estimate(v, 0.0, not exact)
    if not 1 <= index <= n - 1:
        raise ValueError(f"index must be in 0..{n - 1}")
    k = n - index
    c = unit_ball_volume(n) / unit_ball_volume(k)
    r = _ball_radius(K)
    if r is not None:
        return Estimate(unit_ball_volume(n) * r ** k)
    v, exact = projection_sample(K, k, samples, rng, grid)
    return mc_estimate(1.0 / v, lambda m: c / m, lambda m: -c / m ** 2, not exact)


def affine_quermassintegral(K: ConvexBody, index: int, samples: int = DEFAULT_SAMPLES, rng=0,
                            grid: DirectionSet | None = None) -> Estimate:
    """(omega_n / omega_{n-j}) E[V_{n-j}(K | xi)^{-n}]^{-1/n}; SL(n) invariant."""
    n = K.dim
    if index == 0:
        v, exact = volume_estimate(K, grid)
        return Estimate(v, 0.0, not exact)
    if not 1 <= index <= n - 1:
        raise ValueError(f"index must be in 0..{n - 1}")
    k = n - index
    c = unit_ball_volume(n) / unit_ball_volume(k)
    r = _ball_radius(K)
    if r is not None:
        return Estimate(unit_ball_volume(n) * r ** k)
    v, exact = projection_sample(K, k, samples, rng, grid)
    # rescale before the -n power to stay clear of under/overflow
    ref = float(np.median(v))
    return mc_estimate((v / ref) ** (-n), lambda m: c * ref * m ** (-1.0 / n),
                       lambda m: -c * ref * m ** (-1.0 / n - 1.0) / n, not exact)


def width_power_functional(K: ConvexBody, r: float, grid: DirectionSet | None = None) -> float:
    """(∫_{S^{n-1}} w_K(u)^r du)^(1/r) for r < 1, r != 0, by grid quadrature."""
    if not (r < 1 and r != 0):
        raise ValueError("exponent must satisfy r < 1, r != 0")
    G = default_directions(K.dim) if grid is None else grid
    w = width(K, G.directions)
    if np.min(w) <= 0:
        raise DegenerateError("nonpositive width: body is not full-dimensional")
    return float(G.integrate(w ** r) ** (1.0 / r))
