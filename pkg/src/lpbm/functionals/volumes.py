"""Volume, surface area, second moments, moment of inertia, isotropic constant."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.special import ellipeinc, ellipe, ellipkinc

from lpbm.geometry.bodies import (
    AffineImage,
    Ball,
    ConstantWidth2D,
    ConvexBody,
    Ellipsoid,
    Polytope,
    closed_form,
    exact_polytope,
    outer_polytope,
)
from lpbm.geometry.directions import DirectionSet, unit_ball_volume

log = logging.getLogger(__name__)


class UnsupportedBodyError(ValueError):
    """No evaluation route for this representation / dimension."""


def _simplex_volume(V: np.ndarray) -> float:
    n = V.shape[1]
    return abs(float(np.linalg.det(V[1:] - V[0]))) / math.factorial(n)


def _is_box(V: np.ndarray) -> bool:
    lo, hi = V.min(axis=0), V.max(axis=0)
    n = V.shape[1]
    if V.shape[0] != 2 ** n:
        return False
    on_corner = np.all((V == lo) | (V == hi), axis=1)
    return bool(on_corner.all()) and len(np.unique(V, axis=0)) == 2 ** n


def _fan(P: Polytope):
    """Simplices (k, n+1, n) of a fan from an interior point over the boundary."""
    hd = P.hull
    apex = hd.vertices.mean(axis=0)
    tri = hd.vertices[hd.triangles]  # (k, n, n)
    k = tri.shape[0]
    apexes = np.broadcast_to(apex, (k, 1, P.dim))
    return np.concatenate([apexes, tri], axis=1), apex


def polytope_volume(P: Polytope) -> float:
    n = P.dim
    V = P.points
    if n not in (2, 3):
        if V.shape[0] == n + 1:
            return _simplex_volume(V)
        if _is_box(V):
            return float(np.prod(V.max(axis=0) - V.min(axis=0)))
        raise UnsupportedBodyError("exact polytope volume needs n <= 3 (or a box/simplex)")
    S, apex = _fan(P)
    D = S[:, 1:] - S[:, :1]
    return float(np.abs(np.linalg.det(D)).sum() / math.factorial(n))


def volume_estimate(K: ConvexBody, grid: DirectionSet | None = None) -> tuple[float, bool]:
    """(V_n(K), exact).  Inexact values come from the circumscribed grid polytope."""
    n = K.dim
    cf = closed_form(K)
    if isinstance(cf, Ball):
        return unit_ball_volume(n) * cf.radius ** n, True
    if isinstance(cf, Ellipsoid):
        return unit_ball_volume(n) * math.sqrt(float(np.linalg.det(cf.matrix))), True
    if isinstance(cf, ConstantWidth2D):
        return cf.area(), True
    if isinstance(K, AffineImage) and K.matrix.shape[0] == K.matrix.shape[1]:
        v, exact = volume_estimate(K.body, grid)
        return abs(float(np.linalg.det(K.matrix))) * v, exact
    P = exact_polytope(K)
    if P is not None:
        return polytope_volume(P), True
    if n not in (2, 3):
        raise UnsupportedBodyError(f"no volume route for {K.kind} in dimension {n}")
    P, _ = outer_polytope(K, grid)
    return polytope_volume(P), False


def volume(K: ConvexBody, grid: DirectionSet | None = None) -> float:
    return volume_estimate(K, grid)[0]


def _ellipsoid_area(A: np.ndarray) -> float:
    ax = np.sort(np.sqrt(np.linalg.eigvalsh(A)))[::-1]
    if len(ax) == 2:
        a, b = ax
        return float(4 * a * ellipe(1.0 - (b / a) ** 2))
    a, b, c = ax
    if a - c <= 1e-14 * a:
        return float(4 * np.pi * a * a)
    phi = math.acos(c / a)
    m = (a * a * (b * b - c * c)) / (b * b * (a * a - c * c)) if b > c else 0.0
    s = math.sin(phi)
    return float(2 * np.pi * c * c + 2 * np.pi * a * b / s
                 * (ellipeinc(phi, m) * s * s + ellipkinc(phi, m) * (1 - s * s)))


def polytope_surface(P: Polytope) -> float:
    if P.dim not in (2, 3):
        raise UnsupportedBodyError("surface area needs n <= 3")
    return float(P.hull.facet_areas.sum())


def surface_area_estimate(K: ConvexBody, grid: DirectionSet | None = None) -> tuple[float, bool]:
    """(H^{n-1}(boundary of K), exact)."""
    n = K.dim
    cf = closed_form(K)
    if isinstance(cf, Ball):
        return n * unit_ball_volume(n) * cf.radius ** (n - 1), True
    if isinstance(cf, Ellipsoid) and n in (2, 3):
        return _ellipsoid_area(cf.matrix), True
    if isinstance(cf, ConstantWidth2D):
        return math.pi * cf.width, True
    P = exact_polytope(K)
    if P is not None:
        return polytope_surface(P), True
    if n not in (2, 3):
        raise UnsupportedBodyError(f"no surface route for {K.kind} in dimension {n}")
    P, _ = outer_polytope(K, grid)
    return polytope_surface(P), False


def surface_area(K: ConvexBody, grid: DirectionSet | None = None) -> float:
    return surface_area_estimate(K, grid)[0]


@dataclass(frozen=True)
class Moments:
    """Volume, centroid and central second-moment matrix  ∫_K (x-c)(x-c)^t dx."""

    volume: float
    centroid: np.ndarray
    second: np.ndarray
    exact: bool

    @property
    def inertia(self) -> float:
        return float(np.trace(self.second))


def polytope_moments(P: Polytope) -> Moments:
    n = P.dim
    if n not in (2, 3):
        raise UnsupportedBodyError("polytope moments need n <= 3")
    S, apex = _fan(P)
    local = S - apex  # shift for conditioning
    vols = np.abs(np.linalg.det(local[:, 1:] - local[:, :1])) / math.factorial(n)
    sums = local.sum(axis=1)  # (k, n)
    M0 = vols.sum()
    M1 = (vols[:, None] * sums).sum(axis=0) / (n + 1)
    outer = np.einsum("kvi,kvj->kij", local, local) + np.einsum("ki,kj->kij", sums, sums)
    M2 = np.einsum("k,kij->ij", vols, outer) / ((n + 1) * (n + 2))
    c = M1 / M0
    second = M2 - M0 * np.outer(c, c)
    return Moments(float(M0), c + apex, 0.5 * (second + second.T), True)


def moments(K: ConvexBody, grid: DirectionSet | None = None) -> Moments:
    n = K.dim
    cf = closed_form(K)
    if isinstance(cf, Ball):
        v = unit_ball_volume(n) * cf.radius ** n
        return Moments(v, cf.center.copy(), v * cf.radius ** 2 / (n + 2) * np.eye(n), True)
    if isinstance(cf, Ellipsoid):
        v = unit_ball_volume(n) * math.sqrt(float(np.linalg.det(cf.matrix)))
        return Moments(v, cf.center.copy(), v / (n + 2) * cf.matrix, True)
    if isinstance(K, AffineImage) and K.matrix.shape[0] == K.matrix.shape[1]:
        m = moments(K.body, grid)
        T = K.matrix
        d = abs(float(np.linalg.det(T)))
        return Moments(d * m.volume, T @ m.centroid + K.translation, d * T @ m.second @ T.T, m.exact)
    P = exact_polytope(K)
    if P is not None:
        return polytope_moments(P)
    if n not in (2, 3):
        raise UnsupportedBodyError(f"no moment route for {K.kind} in dimension {n}")
    P, _ = outer_polytope(K, grid)
    m = polytope_moments(P)
    return Moments(m.volume, m.centroid, m.second, False)


def moment_of_inertia(K: ConvexBody, grid: DirectionSet | None = None) -> float:
    """I(K) = ∫_K |x - c_K|^2 dx."""
    return moments(K, grid).inertia


@dataclass(frozen=True)
class IsotropicResult:
    constant: float
    transform: np.ndarray
    objective: float
    iterations: int
    converged: bool


def _traceless_basis(n: int) -> np.ndarray:
    basis = []
    for i in range(n):
        for j in range(n):
            if i != j:
                E = np.zeros((n, n))
                E[i, j] = 1.0
                basis.append(E)
    for i in range(n - 1):
        E = np.zeros((n, n))
        E[i, i], E[i + 1, i + 1] = 1.0, -1.0
        basis.append(E)
    return np.array(basis)


def isotropic_constant(K: ConvexBody, budget: int = 2000, tol: float = 1e-7,
                       fd_step: float = 1e-4, grid: DirectionSet | None = None) -> IsotropicResult:
    """L_K from min over T in SL(n) of I(TK), with T = exp(M), trace M = 0.

    I(TK) = tr(T S T^t) for the central second-moment matrix S of K, so the
    objective needs S only once.  Steepest descent with backtracking and
    central-difference gradients; stops when |grad| < tol * objective.
    """
    if not K.origin_symmetric:
        raise ValueError("the isotropic constant is defined for origin-symmetric bodies")
    m = moments(K, grid)
    n = K.dim
    S = m.second
    E = _traceless_basis(n)

    def f(x):
        T = expm(np.tensordot(x, E, axes=1))
        return float(np.trace(T @ S @ T.T))

    def grad(x):
        g = np.empty_like(x)
        for k in range(len(x)):
            d = np.zeros_like(x)
            d[k] = fd_step
            g[k] = (f(x + d) - f(x - d)) / (2 * fd_step)
        return g

    x = np.zeros(len(E))
    fx = f(x)
    step = 1.0 / max(fx, 1e-300)
    converged = False
    it = 0
    for it in range(1, budget + 1):
        g = grad(x)
        gn = float(np.linalg.norm(g))
        if gn < tol * fx:
            converged = True
            break
        t = step
        while True:
            xn = x - t * g
            fn = f(xn)
            if fn <= fx - 0.5 * t * gn * gn or t < 1e-30:
                break
            t *= 0.5
        x, fx = xn, fn
        step = 2 * t
    if not converged:
        log.warning("isotropic optimizer exhausted its budget (|grad|/f = %.3g)", gn / fx)
    T = expm(np.tensordot(x, E, axes=1))
    L = math.sqrt(fx / (n * m.volume ** ((n + 2) / n)))
    return IsotropicResult(L, T, fx, it, converged)


def isotropic_oracle(K: ConvexBody, grid: DirectionSet | None = None) -> float:
    """Closed-form minimum: min tr(T S T^t) over SL(n) is n det(S)^(1/n)."""
    m = moments(K, grid)
    n = K.dim
    best = n * float(np.linalg.det(m.second)) ** (1.0 / n)
    return math.sqrt(best / (n * m.volume ** ((n + 2) / n)))
