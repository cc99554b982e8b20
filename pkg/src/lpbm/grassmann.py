"""Haar sampling on Grassmannians and projections of bodies onto subspaces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lpbm.geometry.bodies import (
    AffineImage,
    Ball,
    ConvexBody,
    Ellipsoid,
    Polytope,
    SupportSampled,
    closed_form,
    convex_hull,
    exact_polytope,
    outer_polytope,
)
from lpbm.geometry.directions import DirectionSet, default_directions, unit_ball_volume

# Philox counter steps reserved per block; a block never needs more than this
BLOCK = 1 << 40
CHUNK = 4096


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream: the same (seed, counter) always gives the same draws."""

    seed: int
    counter: int = 0

    def generator(self) -> np.random.Generator:
        key = self.seed & ((1 << 64) - 1)
        return np.random.Generator(np.random.Philox(key=key, counter=self.counter))

    def block(self, i: int) -> RngStream:
        """Disjoint sub-stream number i of this stream."""
        return RngStream(self.seed, self.counter + (i + 1) * BLOCK)

    def child(self, tag: int | str) -> RngStream:
        """Independent stream keyed by (seed, tag)."""
        if isinstance(tag, str):
            tag = int.from_bytes(tag.encode()[:16].ljust(16, b"\0"), "little")
        ss = np.random.SeedSequence(self.seed, spawn_key=(tag & ((1 << 63) - 1),))
        return RngStream(int(ss.generate_state(1, np.uint64)[0]), self.counter)


def as_stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if rng is None:
        return RngStream(0)
    return RngStream(int(rng))


@dataclass(frozen=True, eq=False)
class Subspace:
    """j-dimensional linear subspace of R^n with orthonormal basis columns (n, j)."""

    basis: np.ndarray

    def __post_init__(self):
        B = np.array(self.basis, dtype=float)
        if B.ndim != 2 or not 1 <= B.shape[1] < B.shape[0]:
            raise ValueError("basis must be (n, j) with 1 <= j <= n - 1")
        gram = B.T @ B
        if np.max(np.abs(gram - np.eye(B.shape[1]))) > 1e-12:
            raise ValueError("basis is not orthonormal")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def _haar_bases(n: int, j: int, count: int, gen: np.random.Generator) -> tuple[np.ndarray, int]:
    G = gen.standard_normal((count, n, j))
    Q, R = np.linalg.qr(G)
    d = np.diagonal(R, axis1=1, axis2=2)
    Q = Q * np.sign(d)[:, None, :]
    ok = np.min(np.abs(d), axis=1) > 1e-10 * np.max(np.abs(d), axis=1)
    retries = 0
    while not np.all(ok):
        bad = np.flatnonzero(~ok)
        retries += len(bad)
        Gb = gen.standard_normal((len(bad), n, j))
        Qb, Rb = np.linalg.qr(Gb)
        db = np.diagonal(Rb, axis1=1, axis2=2)
        Q[bad] = Qb * np.sign(db)[:, None, :]
        ok[bad] = np.min(np.abs(db), axis=1) > 1e-10 * np.max(np.abs(db), axis=1)
    return Q, retries


def sample_subspace(n: int, j: int, rng) -> Subspace:
    """One Haar-distributed subspace, determined by the stream's (seed, counter)."""
    if not 1 <= j <= n - 1:
        raise ValueError("need 1 <= j <= n - 1")
    Q, _ = _haar_bases(n, j, 1, as_stream(rng).generator())
    return Subspace(Q[0])


def sample_bases(n: int, j: int, count: int, rng) -> np.ndarray:
    """(count, n, j) Haar bases; chunk k comes from block k so results do not
    depend on how the work is split."""
    if not 1 <= j <= n - 1:
        raise ValueError("need 1 <= j <= n - 1")
    stream = as_stream(rng)
    out = np.empty((count, n, j))
    for k, start in enumerate(range(0, count, CHUNK)):
        m = min(CHUNK, count - start)
        out[start:start + m], _ = _haar_bases(n, j, m, stream.block(k).generator())
    return out


def project_body(K: ConvexBody, S: Subspace | np.ndarray) -> ConvexBody:
    """K | xi expressed in the subspace's basis coordinates: h(v) = h_K(B v)."""
    B = S.basis if isinstance(S, Subspace) else np.asarray(S, dtype=float)
    if B.shape[0] != K.dim:
        raise ValueError("subspace and body live in different dimensions")
    j = B.shape[1]
    cf = closed_form(K)
    if isinstance(cf, Ball):
        return Ball(cf.radius, B.T @ cf.center)
    if isinstance(cf, Ellipsoid):
        return Ellipsoid(B.T @ cf.matrix @ B, B.T @ cf.center)
    if j == 1:
        b = B[:, 0]
        return Polytope([[-float(K.support(-b))], [float(K.support(b))]])
    P = exact_polytope(K)
    if P is not None and j in (2, 3):
        return convex_hull(P.vertices @ B)
    if isinstance(K, SupportSampled) and j in (2, 3):
        sub = default_directions(j)
        return SupportSampled(sub, K.support(sub.directions @ B.T), validate=False)
    return AffineImage(B.T, np.zeros(j), K)


def projected_volumes(K: ConvexBody, bases: np.ndarray,
                      grid: DirectionSet | None = None) -> tuple[np.ndarray, bool]:
    """V_j(K | xi) for a stack of bases (count, n, j); returns (values, exact)."""
    from lpbm.functionals.volumes import volume

    count, n, j = bases.shape
    if j == 1:
        b = bases[:, :, 0]
        return K.support(b) + K.support(-b), True
    cf = closed_form(K)
    if isinstance(cf, Ball):
        return np.full(count, unit_ball_volume(j) * cf.radius ** j), True
    if isinstance(cf, Ellipsoid):
        M = np.einsum("kni,nm,kmj->kij", bases, cf.matrix, bases)
        return unit_ball_volume(j) * np.sqrt(np.linalg.det(M)), True
    if n == 3 and j == 2:
        P, exact = outer_polytope(K, grid)
        hd = P.hull
        normals = np.cross(bases[:, :, 0], bases[:, :, 1])
        out = np.empty(count)
        for s in range(0, count, 1024):
            dots = np.abs(normals[s:s + 1024] @ hd.normals.T)
            out[s:s + 1024] = 0.5 * dots @ hd.facet_areas
        return out, exact
    vals = np.array([volume(project_body(K, B)) for B in bases])
    return vals, exact_polytope(K) is not None


def strict_projection_fraction(K: ConvexBody, L: ConvexBody, j: int, samples: int, rng,
                               margin: float = 1e-9, grid: DirectionSet | None = None) -> float:
    """Monte Carlo estimate of mu_j{xi : V_j(K|xi) < V_j(L|xi) (1 - margin)}.

    Requires h_K <= h_L on the grid (K inside L up to grid resolution).
    """
    if K.dim != L.dim:
        raise ValueError("bodies live in different dimensions")
    G = default_directions(K.dim) if grid is None else grid
    hk, hl = K.support(G.directions), L.support(G.directions)
    if np.any(hk > hl + 1e-9 * max(L.scale, 1e-300)):
        raise ValueError("K is not contained in L on the direction grid")
    bases = sample_bases(K.dim, j, samples, rng)
    vk, _ = projected_volumes(K, bases)
    vl, _ = projected_volumes(L, bases)
    return float(np.mean(vk < vl * (1.0 - margin)))


def fraction_lower_bound(fraction: float, samples: int, confidence: float = 0.99) -> float:
    """One-sided Clopper-Pearson lower bound for a binomial proportion."""
    from scipy.stats import beta

    k = int(round(fraction * samples))
    if k == 0:
        return 0.0
    return float(beta.ppf(1.0 - confidence, k, samples - k + 1))
