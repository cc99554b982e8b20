"""Named functionals with their homogeneity degree and structural flags."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from lpbm.functionals.capacity import capacity_newtonian_wos, capacity_q1
from lpbm.functionals.estimate import Estimate
from lpbm.functionals.mixed import mixed_volume_pair
from lpbm.functionals.quermass import (
    DEFAULT_SAMPLES,
    affine_quermassintegral,
    harmonic_quermassintegral,
    quermassintegral,
    width_power_functional,
)
from lpbm.functionals.volumes import volume_estimate
from lpbm.geometry.bodies import ConvexBody, unit_ball
from lpbm.geometry.directions import unit_ball_volume
from lpbm.grassmann import RngStream, as_stream

STRICT, WEAK, NONE = "strict_on_Kno", "weak", "none"
CLOSED_FORM, POLYTOPE_EXACT, MONTE_CARLO = "closed_form", "polytope_exact", "monte_carlo"


@dataclass(frozen=True)
class DimensionalConstants:
    n: int
    omega: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(unit_ball_volume(j) for j in range(self.n + 1)))


@dataclass(frozen=True)
class FunctionalDescriptor:
    """A raw functional Phi with homogeneity degree; F = Phi**(1/degree)."""

    name: str
    dim: int
    degree: int
    monotone: str
    translation_invariant: bool
    evaluator: Callable[[ConvexBody, RngStream], Estimate] = field(repr=False)
    cost_hint: str
    params: dict = field(default_factory=dict)

    def evaluate(self, K: ConvexBody, rng=0) -> Estimate:
        if K.dim != self.dim:
            raise ValueError(f"{self.name} is registered for n = {self.dim}")
        return self.evaluator(K, as_stream(rng))

    def normalized(self, K: ConvexBody, rng=0) -> Estimate:
        return self.evaluate(K, rng).power(1.0 / self.degree)

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        return self.name + "[" + ",".join(f"{k}={v}" for k, v in sorted(self.params.items())) + "]"


def _exact(v: tuple[float, bool]) -> Estimate:
    return Estimate(v[0], 0.0, not v[1])


def _volume(n, grid, **_):
    return FunctionalDescriptor("volume", n, n, STRICT, True,
                                lambda K, rng: _exact(volume_estimate(K, grid)), POLYTOPE_EXACT)


def _index(n, index):
    if not 1 <= index <= n - 1:
        raise ValueError(f"index must be in 1..{n - 1}")
    return index


def _quermass(n, grid, index=1, samples=DEFAULT_SAMPLES, **_):
    i = _index(n, index)
    hint = POLYTOPE_EXACT if n == 2 else MONTE_CARLO
    return FunctionalDescriptor("quermass", n, n - i, STRICT, True,
                                lambda K, rng: quermassintegral(K, i, samples, rng, grid), hint,
                                {"index": i})


def _harmonic(n, grid, index=1, samples=DEFAULT_SAMPLES, **_):
    i = _index(n, index)
    return FunctionalDescriptor("harmonic_quermass", n, n - i, STRICT, True,
                                lambda K, rng: harmonic_quermassintegral(K, i, samples, rng, grid),
                                MONTE_CARLO, {"index": i})


def _affine(n, grid, index=1, samples=DEFAULT_SAMPLES, **_):
    i = _index(n, index)
    return FunctionalDescriptor("affine_quermass", n, n - i, STRICT, True,
                                lambda K, rng: affine_quermassintegral(K, i, samples, rng, grid),
                                MONTE_CARLO, {"index": i})


def _mixed_ball(n, grid, j=1, **_):
    if not 1 <= j <= n:
        raise ValueError(f"j must be in 1..{n}")
    B = unit_ball(n)

    def ev(K, rng):
        r = mixed_volume_pair(K, B, j, grid)
        return Estimate(r.value, 0.0, not r.exact)

    return FunctionalDescriptor("mixed_volume_ball", n, j, STRICT, True, ev, POLYTOPE_EXACT, {"j": j})


def _inertia(n, grid, **_):
    return FunctionalDescriptor("inertia", n, n + 2, STRICT, True,
                                lambda K, rng: _inertia_estimate(K, grid), POLYTOPE_EXACT)


def _inertia_estimate(K, grid):
    from lpbm.functionals.volumes import moments

    m = moments(K, grid)
    return Estimate(m.inertia, 0.0, not m.exact)


def _width(n, grid, r=0.5, **_):
    r = float(r)
    return FunctionalDescriptor("width_power", n, 1, STRICT, True,
                                lambda K, rng: Estimate(width_power_functional(K, r, grid)),
                                CLOSED_FORM, {"r": r})


def _cap1(n, grid, **_):
    return FunctionalDescriptor("capacity_q1", n, n - 1, STRICT, True,
                                lambda K, rng: capacity_q1(K, grid=grid), POLYTOPE_EXACT)


def _cap2(n, grid, walkers=10 ** 5, **_):
    if n != 3:
        raise ValueError("capacity_q2 is implemented for n = 3")
    walkers = int(walkers)
    return FunctionalDescriptor("capacity_q2", n, 1, STRICT, True,
                                lambda K, rng: capacity_newtonian_wos(K, walkers, rng=rng, grid=grid),
                                MONTE_CARLO, {"walkers": walkers})


def _projection(n, grid, j=3, k=2, **_):
    from lpbm.projection_bodies import composite_projection_functional

    if n != 3:
        raise ValueError("projection functionals are implemented for n = 3")
    j, k = int(j), int(k)
    if j not in (1, 2, 3) or k not in (1, 2):
        raise ValueError("need j in {1, 2, 3} and k in {1, 2}")
    return FunctionalDescriptor(
        "projection", n, j * k, STRICT, True,
        lambda K, rng: composite_projection_functional(K, j, k, body_grid=grid),
        POLYTOPE_EXACT, {"j": j, "k": k})


FACTORIES = {
    "volume": _volume,
    "quermass": _quermass,
    "harmonic_quermass": _harmonic,
    "affine_quermass": _affine,
    "mixed_volume_ball": _mixed_ball,
    "inertia": _inertia,
    "width_power": _width,
    "capacity_q1": _cap1,
    "capacity_q2": _cap2,
    "projection": _projection,
}


def get_functional(name: str, dim: int, grid=None, **params) -> FunctionalDescriptor:
    """Descriptor for a registered functional; unknown names raise KeyError."""
    if name not in FACTORIES:
        raise KeyError(f"unknown functional {name!r}; known: {', '.join(sorted(FACTORIES))}")
    return FACTORIES[name](dim, grid, **params)


def all_functionals(dim: int, grid=None, samples: int = DEFAULT_SAMPLES,
                    walkers: int = 10 ** 5) -> list[FunctionalDescriptor]:
    """One descriptor per registered functional and parameter choice in R^dim."""
    out = [get_functional("volume", dim, grid), get_functional("inertia", dim, grid),
           get_functional("width_power", dim, grid, r=0.5),
           get_functional("width_power", dim, grid, r=-1.0),
           get_functional("capacity_q1", dim, grid)]
    for i in range(1, dim):
        for name in ("quermass", "harmonic_quermass", "affine_quermass"):
            out.append(get_functional(name, dim, grid, index=i, samples=samples))
    if dim in (2, 3):
        for j in range(1, dim + 1):
            out.append(get_functional("mixed_volume_ball", dim, grid, j=j))
    if dim == 3:
        out.append(get_functional("capacity_q2", dim, grid, walkers=walkers))
        for j in (1, 2, 3):
            for k in (1, 2):
                out.append(get_functional("projection", dim, grid, j=j, k=k))
    return out


def homogeneity_gap(F: FunctionalDescriptor, K: ConvexBody, lam: float, rng=0) -> tuple[float, float]:
    """(|F(lam K) - lam^deg F(K)| / F(lam K), allowed) on shared samples."""
    from lpbm.geometry.bodies import scale

    a = F.evaluate(scale(K, lam), rng)
    b = F.evaluate(K, rng).scaled(lam ** F.degree)
    rel = abs(a.value - b.value) / abs(a.value)
    allowed = 1e-9 if not (a.stderr or b.stderr) else 3.0 * np.hypot(a.stderr, b.stderr) / abs(a.value)
    return float(rel), float(allowed)
