"""Convex bodies represented through their support functions.

Every body is immutable.  ``support`` accepts a single vector or an (m, n)
stack and is positively homogeneous, so non-unit arguments are fine; this
is what lets affine images evaluate ``h_B(T^t u)`` directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from lpbm.geometry.directions import DirectionSet, default_directions, unit_ball_volume
from lpbm.geometry.hull import DegenerateError, HullData, cluster_rows, hull_data


class DimensionError(ValueError):
    pass


class NonConvexDataError(ValueError):
    """Sampled support values are not the support function of a convex body."""


@dataclass(frozen=True)
class Tolerances:
    """Numerical acceptance thresholds.

    rel_tol is the relative slack allowance for exact evaluation routes,
    grid_tol the one used when a value comes from a circumscribed
    (grid) approximation, dilate_tol the maximal relative spread of h_K/h_L
    accepted as a dilate, mc_sigma the number of standard errors tolerated
    for Monte Carlo values and equality_tol the relative deadband used when
    equality is expected.
    """

    rel_tol: float = 1e-9
    dilate_tol: float = 1e-6
    mc_sigma: float = 3.0
    equality_tol: float = 1e-6
    grid_tol: float = 1e-2

    def __post_init__(self):
        for name in ("rel_tol", "dilate_tol", "mc_sigma", "equality_tol", "grid_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


def _as_matrix(u, n: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(u, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != n:
        raise DimensionError(f"direction has dimension {arr.shape[1]}, body has {n}")
    return arr, single


class ConvexBody:
    """Base class; subclasses implement ``_h`` on an (m, n) array."""

    dim: int

    def _h(self, U: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def support(self, u):
        U, single = _as_matrix(u, self.dim)
        h = self._h(U)
        return float(h[0]) if single else h

    # -- flags -----------------------------------------------------------
    @cached_property
    def origin_margin(self) -> float:
        """min_u h(u) over the unit sphere (grid minimum for general bodies).

        Positive exactly when the origin is an interior point; then it is the
        distance from the origin to the boundary.
        """
        grid = default_directions(self.dim)
        return float(np.min(self._h(grid.directions)))

    @property
    def contains_origin_interior(self) -> bool:
        return self.origin_margin > 1e-12 * max(self.scale, 1e-300)

    @cached_property
    def origin_symmetric(self) -> bool:
        U = default_directions(self.dim).directions
        a, b = self._h(U), self._h(-U)
        return bool(np.max(np.abs(a - b)) <= 1e-12 * max(self.scale, 1e-300))

    @cached_property
    def scale(self) -> float:
        """Half the largest grid width; a size reference for tolerances."""
        U = default_directions(self.dim).directions
        return float(0.5 * np.max(self._h(U) + self._h(-U)))

    @property
    def kind(self) -> str:
        return type(self).__name__.lower()


@dataclass(frozen=True, eq=False)
class Ball(ConvexBody):
    radius: float
    center: np.ndarray

    def __init__(self, radius: float = 1.0, center=None, dim: int | None = None):
        if center is None:
            center = np.zeros(dim or 3)
        c = np.array(center, dtype=float)
        if radius <= 0:
            raise ValueError("radius must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "radius", float(radius))
        object.__setattr__(self, "center", c)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def _h(self, U):
        return self.radius * np.linalg.norm(U, axis=1) + U @ self.center

    @cached_property
    def origin_margin(self) -> float:
        return self.radius - float(np.linalg.norm(self.center))

    @cached_property
    def origin_symmetric(self) -> bool:
        return not np.any(self.center)

    @cached_property
    def scale(self) -> float:
        return self.radius


@dataclass(frozen=True, eq=False)
class Ellipsoid(ConvexBody):
    """{x : (x - c)^t A^{-1} (x - c) <= 1}, so that h(u) = sqrt(u^t A u) + c.u."""

    matrix: np.ndarray
    center: np.ndarray

    def __init__(self, matrix, center=None):
        A = np.array(matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("ellipsoid matrix must be square")
        A = 0.5 * (A + A.T)
        if np.min(np.linalg.eigvalsh(A)) <= 0:
            raise ValueError("ellipsoid matrix must be positive definite")
        c = np.zeros(A.shape[0]) if center is None else np.array(center, dtype=float)
        A.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "center", c)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def _h(self, U):
        q = np.einsum("ij,jk,ik->i", U, self.matrix, U)
        return np.sqrt(np.maximum(q, 0.0)) + U @ self.center

    @cached_property
    def origin_symmetric(self) -> bool:
        return not np.any(self.center)

    @cached_property
    def scale(self) -> float:
        return float(np.sqrt(np.max(np.linalg.eigvalsh(self.matrix))))


@dataclass(frozen=True, eq=False)
class Polytope(ConvexBody):
    """Convex hull of a finite point set (the points need not all be vertices)."""

    points: np.ndarray

    def __init__(self, points):
        P = np.array(points, dtype=float)
        if P.ndim != 2 or P.shape[0] < 1:
            raise ValueError("polytope needs an (m, n) point array")
        P.setflags(write=False)
        object.__setattr__(self, "points", P)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @cached_property
    def hull(self) -> HullData:
        return hull_data(self.points)

    @property
    def vertices(self) -> np.ndarray:
        if self.dim in (2, 3):
            return self.hull.vertices
        return self.points

    def _h(self, U):
        return np.max(U @ self.vertices.T, axis=1)

    @cached_property
    def origin_margin(self) -> float:
        if self.dim in (2, 3):
            return float(np.min(self.hull.offsets))
        return super().origin_margin

    @cached_property
    def origin_symmetric(self) -> bool:
        V = self.vertices
        a = V[np.lexsort(V.T[::-1])]
        b = -V
        b = b[np.lexsort(b.T[::-1])]
        return a.shape == b.shape and bool(
            np.max(np.abs(a - b)) <= 1e-12 * max(self.scale, 1e-300)
        )


@dataclass(frozen=True, eq=False)
class SupportSampled(ConvexBody):
    """Body given by support values on a direction grid.

    Between grid directions the support is that of the circumscribed
    polytope ``{x : x.u_i <= h_i}``: it matches the data at every node, is a
    genuine support function, and its deviation from the underlying smooth
    body is second order in the grid spacing.
    """

    grid: DirectionSet
    values: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (len(self.grid),):
            raise ValueError("one support value per grid direction")
        if self.grid.dim not in (2, 3):
            raise ValueError("support-sampled bodies are supported for n = 2, 3")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.validate:
            gap = self.consistency_gap()
            if gap > 1e-7 * max(float(np.max(np.abs(v))), 1e-300):
                raise NonConvexDataError(
                    f"sampled values exceed the circumscribed body's support by {gap:.3g}"
                )

    @property
    def dim(self) -> int:
        return self.grid.dim

    @cached_property
    def polytope(self) -> Polytope:
        return _halfspace_polytope(self.grid.directions, self.values, self.grid)

    def consistency_gap(self) -> float:
        """max_i (h_i - h_P(u_i)); zero for data coming from a convex body."""
        hp = np.max(self.grid.directions @ self.polytope.vertices.T, axis=1)
        return float(np.max(self.values - hp))

    def _h(self, U):
        return np.max(U @ self.polytope.vertices.T, axis=1)

    @cached_property
    def origin_symmetric(self) -> bool:
        if not self.grid.is_antipodal():
            return False
        anti = self.grid.antipodes
        return bool(np.max(np.abs(self.values - self.values[anti]))
                    <= 1e-12 * max(float(np.max(np.abs(self.values))), 1e-300))


@dataclass(frozen=True, eq=False)
class ConstantWidth2D(ConvexBody):
    """Reuleaux polygon with an odd number of sides and the given width.

    Its support function is piecewise: in the normal cone of the arc opposite
    vertex v_i it equals v_i.u + width, elsewhere max_k v_k.u.
    """

    width: float
    sides: int = 3
    center: tuple = (0.0, 0.0)
    rotation: float = 0.0
    profile: str = "reuleaux"

    def __post_init__(self):
        if self.profile != "reuleaux":
            raise ValueError(f"unknown constant-width profile {self.profile!r}")
        if self.sides < 3 or self.sides % 2 == 0:
            raise ValueError("Reuleaux polygons need an odd number of sides >= 3")
        if self.width <= 0:
            raise ValueError("width must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    dim = 2

    @cached_property
    def corners(self) -> np.ndarray:
        k = self.sides
        R = self.width / (2.0 * np.cos(np.pi / (2 * k)))
        t = self.rotation + np.pi / 2 + 2 * np.pi * np.arange(k) / k
        return R * np.column_stack([np.cos(t), np.sin(t)]) + np.array(self.center)

    def _h(self, U):
        r = np.linalg.norm(U, axis=1)
        safe = np.where(r > 0, r, 1.0)
        Uh = U / safe[:, None]
        c = np.array(self.center)
        rel = self.corners - c
        rel_hat = rel / np.linalg.norm(rel, axis=1)[:, None]
        vert = Uh @ self.corners.T  # (m, k)
        h = vert.max(axis=1)
        half = np.pi / (2 * self.sides)
        in_arc = (-(Uh @ rel_hat.T)) >= np.cos(half) - 1e-15
        arc = np.where(in_arc, vert + self.width, -np.inf).max(axis=1)
        h = np.maximum(h, arc)
        return np.where(r > 0, h * r, 0.0)

    def area(self) -> float:
        k, w = self.sides, self.width
        R = w / (2.0 * np.cos(np.pi / (2 * k)))
        polygon = 0.5 * k * R * R * np.sin(2 * np.pi / k)
        theta = np.pi / k
        return float(polygon + k * 0.5 * w * w * (theta - np.sin(theta)))


@dataclass(frozen=True, eq=False)
class LpCombination(ConvexBody):
    """a ._p K +_p b ._p L, evaluated lazily from the operands' supports."""

    p: float
    a: float
    first: ConvexBody
    b: float
    second: ConvexBody

    @property
    def dim(self) -> int:
        return self.first.dim

    def _h(self, U):
        hk, hl = self.first._h(U), self.second._h(U)
        if self.p == 1:
            return self.a * hk + self.b * hl
        if np.isinf(self.p):
            return np.maximum(hk, hl)
        p = self.p
        return (self.a * hk ** p + self.b * hl ** p) ** (1.0 / p)


@dataclass(frozen=True, eq=False)
class AffineImage(ConvexBody):
    """T B + x for a (m, n) matrix T; m < n gives projections."""

    matrix: np.ndarray
    translation: np.ndarray
    body: ConvexBody

    def __init__(self, matrix, translation, body: ConvexBody):
        T = np.array(matrix, dtype=float)
        if T.ndim != 2 or T.shape[1] != body.dim:
            raise DimensionError("matrix columns must match the body's dimension")
        x = np.zeros(T.shape[0]) if translation is None else np.array(translation, dtype=float)
        if x.shape != (T.shape[0],):
            raise DimensionError("translation must live in the image space")
        T.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "matrix", T)
        object.__setattr__(self, "translation", x)
        object.__setattr__(self, "body", body)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def _h(self, U):
        return self.body._h(U @ self.matrix) + U @ self.translation


# ---------------------------------------------------------------------------
# constructors and simplifications

def unit_ball(n: int) -> Ball:
    return Ball(1.0, np.zeros(n))


def box(lo, hi) -> Polytope:
    import itertools

    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    corners = [np.where(bits, hi, lo) for bits in itertools.product([0, 1], repeat=len(lo))]
    return Polytope(np.array(corners))


def cube(n: int = 3, half: float = 1.0) -> Polytope:
    return box(-half * np.ones(n), half * np.ones(n))


def scale(K: ConvexBody, lam: float) -> ConvexBody:
    """The dilate lam K (lam > 0)."""
    if lam <= 0:
        raise ValueError("dilation factor must be positive")
    if lam == 1:
        return K
    if isinstance(K, Ball):
        return Ball(lam * K.radius, lam * K.center)
    if isinstance(K, Ellipsoid):
        return Ellipsoid(lam * lam * K.matrix, lam * K.center)
    if isinstance(K, AffineImage):
        return AffineImage(lam * K.matrix, lam * K.translation, K.body)
    return AffineImage(lam * np.eye(K.dim), np.zeros(K.dim), K)


def translate(K: ConvexBody, x) -> ConvexBody:
    x = np.asarray(x, dtype=float)
    if x.shape != (K.dim,):
        raise DimensionError("translation dimension mismatch")
    if isinstance(K, Ball):
        return Ball(K.radius, K.center + x)
    if isinstance(K, Ellipsoid):
        return Ellipsoid(K.matrix, K.center + x)
    if isinstance(K, AffineImage):
        return AffineImage(K.matrix, K.translation + x, K.body)
    return AffineImage(np.eye(K.dim), x, K)


def affine_image(K: ConvexBody, T, x=None) -> ConvexBody:
    T = np.asarray(T, dtype=float)
    x = np.zeros(T.shape[0]) if x is None else np.asarray(x, dtype=float)
    if isinstance(K, AffineImage):
        return AffineImage(T @ K.matrix, T @ K.translation + x, K.body)
    return AffineImage(T, x, K)


def scale_decompose(K: ConvexBody) -> tuple[float, ConvexBody]:
    """Write K = lam * B with B canonical, when recognisable."""
    if isinstance(K, Ball) and not np.any(K.center):
        return K.radius, unit_ball(K.dim)
    if isinstance(K, Ellipsoid) and not np.any(K.center):
        t = float(np.trace(K.matrix)) / K.dim
        return float(np.sqrt(t)), Ellipsoid(K.matrix / t)
    if isinstance(K, AffineImage) and not np.any(K.translation):
        T = K.matrix
        if T.shape[0] == T.shape[1] and T[0, 0] > 0 and np.array_equal(T, T[0, 0] * np.eye(T.shape[0])):
            lam, base = scale_decompose(K.body)
            return T[0, 0] * lam, base
    return 1.0, K


def _close(a, b) -> bool:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return a.shape == b.shape and np.allclose(a, b, rtol=1e-13, atol=1e-300)


def same_body(K: ConvexBody, L: ConvexBody) -> bool:
    """Structural equality of body descriptions (not geometric equality)."""
    if K is L:
        return True
    if type(K) is not type(L) or K.dim != L.dim:
        return False
    if isinstance(K, Ball):
        return _close(K.radius, L.radius) and _close(K.center, L.center)
    if isinstance(K, Ellipsoid):
        return _close(K.matrix, L.matrix) and _close(K.center, L.center)
    if isinstance(K, Polytope):
        return np.array_equal(K.points, L.points)
    if isinstance(K, SupportSampled):
        return K.grid is L.grid and np.array_equal(K.values, L.values)
    if isinstance(K, ConstantWidth2D):
        return (K.width, K.sides, K.center, K.rotation) == (L.width, L.sides, L.center, L.rotation)
    if isinstance(K, AffineImage):
        return (_close(K.matrix, L.matrix) and _close(K.translation, L.translation)
                and same_body(K.body, L.body))
    if isinstance(K, LpCombination):
        return ((K.p, K.a, K.b) == (L.p, L.a, L.b) and same_body(K.first, L.first)
                and same_body(K.second, L.second))
    return False


def lp_combine(p: float, a: float, K: ConvexBody, b: float, L: ConvexBody) -> ConvexBody:
    """The body a ._p K +_p b ._p L, with support (a h_K^p + b h_L^p)^(1/p).

    Dilates of a common body are folded into a single dilate; otherwise the
    result is a lazy ``LpCombination``.
    """
    p = float(p)
    if not p >= 1:
        raise ValueError("p must be >= 1")
    if a < 0 or b < 0 or (a == 0 and b == 0):
        raise ValueError("weights must be nonnegative and not both zero")
    if K.dim != L.dim:
        raise DimensionError("bodies live in different dimensions")
    if p > 1:
        for body in (K, L):
            if not body.contains_origin_interior:
                raise ValueError("L_p combinations with p > 1 need the origin in both interiors")
    inf = np.isinf(p)
    if a == 0:
        return L if inf else scale(L, b ** (1.0 / p))
    if b == 0:
        return K if inf else scale(K, a ** (1.0 / p))
    lk, bk = scale_decompose(K)
    ll, bl = scale_decompose(L)
    if same_body(bk, bl):
        if inf:
            c = max(lk, ll)
        elif p == 1:
            c = a * lk + b * ll
        else:
            c = (a * lk ** p + b * ll ** p) ** (1.0 / p)
        return scale(bk, c)
    return LpCombination(p, float(a), K, float(b), L)


# ---------------------------------------------------------------------------
# measurements on the support function

def support(K: ConvexBody, u):
    return K.support(u)


def width(K: ConvexBody, u):
    U, single = _as_matrix(u, K.dim)
    w = K._h(U) + K._h(-U)
    return float(w[0]) if single else w


def _grid(n: int, grid: DirectionSet | None) -> DirectionSet:
    return default_directions(n) if grid is None else grid


def hausdorff_distance(K: ConvexBody, L: ConvexBody, grid: DirectionSet | None = None) -> float:
    """max |h_K - h_L| over the grid: a lower bound converging to the true distance."""
    if K.dim != L.dim:
        raise DimensionError("bodies live in different dimensions")
    U = _grid(K.dim, grid).directions
    return float(np.max(np.abs(K._h(U) - L._h(U))))


@dataclass(frozen=True)
class DilateDecision:
    yes: bool
    ratio: float | None
    deviation: float
    witness: np.ndarray | None = None

    def __bool__(self):
        return self.yes


def _is_sampled(K: ConvexBody) -> bool:
    if isinstance(K, SupportSampled):
        return True
    if isinstance(K, AffineImage):
        return _is_sampled(K.body)
    if isinstance(K, LpCombination):
        return _is_sampled(K.first) or _is_sampled(K.second)
    return False


def dilate_tolerance(K: ConvexBody, L: ConvexBody, tol: Tolerances,
                     grid: DirectionSet | None = None) -> float:
    """dilate_tol for closed-form bodies, ten grid errors for sampled ones."""
    if _is_sampled(K) or _is_sampled(L):
        return max(tol.dilate_tol, 10 * _grid(K.dim, grid).grid_error())
    return tol.dilate_tol


def is_dilate_pair(K: ConvexBody, L: ConvexBody, tol: Tolerances | None = None,
                   grid: DirectionSet | None = None) -> DilateDecision:
    """Decide whether K = lam L for some lam > 0 from the ratio h_K / h_L."""
    tol = tol or Tolerances()
    if K.dim != L.dim:
        raise DimensionError("bodies live in different dimensions")
    G = _grid(K.dim, grid)
    hk, hl = K._h(G.directions), L._h(G.directions)
    if np.min(hk) <= 0 or np.min(hl) <= 0:
        i = int(np.argmin(np.minimum(hk, hl)))
        return DilateDecision(False, None, np.inf, G.directions[i])
    ratio = hk / hl
    lam = float(np.median(ratio))
    dev = np.abs(ratio / lam - 1.0)
    i = int(np.argmax(dev))
    if dev[i] <= dilate_tolerance(K, L, tol, G):
        return DilateDecision(True, lam, float(dev[i]))
    return DilateDecision(False, None, float(dev[i]), G.directions[i])


@dataclass(frozen=True)
class HomothetyDecision:
    yes: bool
    ratio: float
    translation: np.ndarray
    residual: float

    def __bool__(self):
        return self.yes


def steiner_point(K: ConvexBody, grid: DirectionSet | None = None) -> np.ndarray:
    """(1/omega_n) * integral of h_K(u) u over the sphere; always an interior point."""
    G = _grid(K.dim, grid)
    h = K._h(G.directions)
    return (G.weights * h) @ G.directions / unit_ball_volume(K.dim)


def is_homothetic_pair(K: ConvexBody, L: ConvexBody, tol: Tolerances | None = None,
                       grid: DirectionSet | None = None) -> HomothetyDecision:
    """Least-squares fit h_K ~ lam h_L + x.u; yes when the normalized residual is small."""
    tol = tol or Tolerances()
    if K.dim != L.dim:
        raise DimensionError("bodies live in different dimensions")
    G = _grid(K.dim, grid)
    U, w = G.directions, G.weights
    hk, hl = K._h(U), L._h(U)
    sw = np.sqrt(w)
    A = np.column_stack([hl, U]) * sw[:, None]
    coef, *_ = np.linalg.lstsq(A, hk * sw, rcond=None)
    if coef[0] < 0:
        x, *_ = np.linalg.lstsq(U * sw[:, None], hk * sw, rcond=None)
        coef = np.concatenate([[0.0], x])
    resid = hk - coef[0] * hl - U @ coef[1:]
    centered = hk - U @ steiner_point(K, G)
    rel = float(np.sqrt(np.sum(w * resid ** 2) / np.sum(w * centered ** 2)))
    ok = rel <= dilate_tolerance(K, L, tol, G)
    return HomothetyDecision(ok, float(coef[0]), coef[1:], rel)


def check_sublinear(K: ConvexBody, count: int = 200, seed: int = 0) -> float:
    """Largest violation of h(u + v) <= h(u) + h(v) over random pairs (<= 0 when convex)."""
    rng = np.random.Generator(np.random.Philox(seed))
    U = rng.standard_normal((count, K.dim))
    V = rng.standard_normal((count, K.dim))
    return float(np.max(K._h(U + V) - K._h(U) - K._h(V)))


# ---------------------------------------------------------------------------
# polytope machinery

def convex_hull(points) -> Polytope:
    """Polytope spanned by ``points`` (n = 2 or 3); raises DegenerateError when flat."""
    P = Polytope(points)
    if P.dim not in (2, 3):
        raise ValueError("convex_hull supports n = 2 and n = 3")
    return Polytope(P.hull.vertices)


def _halfspace_polytope(U: np.ndarray, h: np.ndarray, grid: DirectionSet | None = None) -> Polytope:
    """Vertices of {x : U x <= h} through polar duality about an interior point."""
    n = U.shape[1]
    if n not in (2, 3):
        raise ValueError("halfspace intersections are supported for n = 2, 3")
    if U.shape[0] < n + 1 or np.linalg.matrix_rank(U) < n:
        raise DegenerateError("direction grid does not span the space")
    if grid is not None and grid.directions is U:
        w = grid.weights
    else:
        w = np.full(len(U), n * unit_ball_volume(n) / len(U))
    s = (w * h) @ U / unit_ball_volume(n)
    shifted = h - U @ s
    ref = float(np.max(np.abs(h)))
    if np.min(shifted) <= 1e-12 * ref:
        # quadrature Steiner point missed the interior; fall back to an LP centre
        s = _chebyshev_center(U, h)
        shifted = h - U @ s
        if np.min(shifted) <= 1e-12 * ref:
            raise DegenerateError("halfspace intersection has empty interior")
    dual = U / shifted[:, None]
    hd = hull_data(dual)
    verts = hd.normals / hd.offsets[:, None]
    labels = cluster_rows(verts / max(ref, 1e-300), 1e-9)
    counts = np.bincount(labels)
    merged = np.zeros((len(counts), n))
    np.add.at(merged, labels, verts)
    merged /= counts[:, None]
    return Polytope(merged + s)


def _chebyshev_center(U, h):
    from scipy.optimize import linprog

    n = U.shape[1]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A = np.column_stack([U, np.linalg.norm(U, axis=1)])
    res = linprog(c, A_ub=A, b_ub=h, bounds=[(None, None)] * n + [(0, None)])
    if not res.success:
        raise DegenerateError("could not find an interior point")
    return res.x[:n]


def _edge_arcs(hd: HullData, step: float) -> np.ndarray:
    """Points on the great-circle arcs joining the normals of adjacent facets."""
    owner, pts = {}, []
    for f, loop in enumerate(hd.facets):
        for a, b in zip(loop, loop[1:] + loop[:1]):
            key = (min(a, b), max(a, b))
            if key not in owner:
                owner[key] = f
                continue
            m, g = hd.normals[f], hd.normals[owner.pop(key)]
            ang = float(np.arccos(np.clip(m @ g, -1.0, 1.0)))
            k = int(np.ceil(ang / step))
            if k < 2 or ang >= np.pi - 1e-9:
                continue
            t = np.arange(1, k)[:, None] / k
            pts.append((np.sin((1 - t) * ang) * g + np.sin(t * ang) * m) / np.sin(ang))
    return np.vstack(pts) if pts else np.empty((0, hd.dim))


def _kink_directions(K: ConvexBody, step: float) -> list[np.ndarray]:
    """Directions where h_K fails to be smooth, for the polytopes inside K's description.

    A polytope operand makes h_K kink at its facet normals and (in R^3) along
    the arcs between normals of adjacent facets.  Every L_p combination keeps
    these kinks, so cutting along them removes the first-order error of a
    grid-only circumscription.
    """
    if isinstance(K, Polytope) and K.dim in (2, 3):
        hd = K.hull
        return [hd.normals] + ([_edge_arcs(hd, step)] if K.dim == 3 else [])
    if isinstance(K, AffineImage) and K.matrix.shape[0] == K.matrix.shape[1]:
        inner = _kink_directions(K.body, step)
        if not inner:
            return []
        N = np.vstack(inner) @ np.linalg.inv(K.matrix)
        return [N / np.linalg.norm(N, axis=1)[:, None]]
    if isinstance(K, LpCombination):
        return _kink_directions(K.first, step) + _kink_directions(K.second, step)
    return []


def polytope_from_support(K: ConvexBody, grid: DirectionSet | None = None) -> Polytope:
    """Circumscribed polytope  ∩_u {x : x.u <= h_K(u)}  over the grid directions,
    plus the kink directions of any polytope operands of K."""
    G = _grid(K.dim, grid)
    if G.dim != K.dim:
        raise DimensionError("grid and body dimensions differ")
    extra = _kink_directions(K, G.covering_angle)
    if not extra:
        return _halfspace_polytope(G.directions, K._h(G.directions), G)
    U = np.vstack([G.directions] + extra)
    return _halfspace_polytope(U, K._h(U))


def exact_polytope(K: ConvexBody) -> Polytope | None:
    """K as an explicit polytope when that is exact, else None."""
    return memo(K, ("exact",), lambda: _exact_polytope(K))


def _exact_polytope(K: ConvexBody) -> Polytope | None:
    if isinstance(K, Polytope):
        return K
    if isinstance(K, AffineImage):
        inner = exact_polytope(K.body)
        if inner is None:
            return None
        return Polytope(inner.vertices @ K.matrix.T + K.translation)
    if isinstance(K, LpCombination) and K.p == 1:
        P, Q = exact_polytope(K.first), exact_polytope(K.second)
        if P is None or Q is None:
            return None
        A = K.a * P.vertices
        B = K.b * Q.vertices
        sums = (A[:, None, :] + B[None, :, :]).reshape(-1, K.dim)
        return convex_hull(sums) if K.dim in (2, 3) else Polytope(sums)
    return None


def memo(K: ConvexBody, key: tuple, build):
    """Per-body cache for derived objects (bodies are immutable).

    Keys holding a DirectionSet compare it by identity, so the set is kept in
    the entry and checked on lookup.
    """
    cache = K.__dict__.setdefault("_memo", {})
    ident = tuple(id(k) if isinstance(k, DirectionSet) else k for k in key)
    hit = cache.get(ident)
    if hit is not None and all(a is b for a, b in zip(hit[0], key) if isinstance(b, DirectionSet)):
        return hit[1]
    value = build()
    cache[ident] = (key, value)
    return value


def outer_polytope(K: ConvexBody, grid: DirectionSet | None = None) -> tuple[Polytope, bool]:
    """(polytope, exact): the exact polytope when available, else the circumscribed one."""
    P = exact_polytope(K)
    if P is not None:
        return P, True
    if isinstance(K, SupportSampled) and (grid is None or grid is K.grid):
        return K.polytope, False
    G = _grid(K.dim, grid)
    return memo(K, ("outer", G), lambda: polytope_from_support(K, G)), False


def closed_form(K: ConvexBody) -> ConvexBody | None:
    """Ball / Ellipsoid / Reuleaux equivalent of K when one exists."""
    if isinstance(K, (Ball, Ellipsoid, ConstantWidth2D)):
        return K
    if isinstance(K, AffineImage):
        inner = closed_form(K.body)
        T, x = K.matrix, K.translation
        if isinstance(inner, Ball):
            A = inner.radius ** 2 * (T @ T.T)
            if T.shape[0] <= T.shape[1] and np.linalg.matrix_rank(T) == T.shape[0]:
                return Ellipsoid(A, T @ inner.center + x)
        if isinstance(inner, Ellipsoid):
            if T.shape[0] <= T.shape[1] and np.linalg.matrix_rank(T) == T.shape[0]:
                return Ellipsoid(T @ inner.matrix @ T.T, T @ inner.center + x)
    return None
