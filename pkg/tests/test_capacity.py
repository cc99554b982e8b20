import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import random_polytope
from lpbm.functionals.capacity import (
    _distance_for,
    _restart,
    capacity_newtonian_wos,
    capacity_q1,
)
from lpbm.functionals.volumes import surface_area
from lpbm.geometry.bodies import Ball, cube, scale, translate

# capacitance of the unit-side cube in units where Cap(Ball(r)) = r
CUBE_CAPACITANCE = 0.6606785


def test_cap1_is_surface_area():
    K = random_polytope(3, 5)
    assert capacity_q1(K).value == pytest.approx(surface_area(K), rel=1e-14)
    assert capacity_q1(Ball(2.0, np.zeros(3))).value == pytest.approx(16 * math.pi, rel=1e-14)


def test_distance_bound_is_a_lower_bound():
    K = random_polytope(3, 1)
    D, exact = _distance_for(K, None)
    assert exact
    x = np.random.default_rng(0).normal(size=(500, 3)) * 3
    d, _ = D.full(x - D.center)
    # true distance: minimize over convex combinations of the vertices
    from scipy.optimize import minimize

    V = K.vertices
    for xi, di in zip(x[:20], d[:20]):
        if di <= 0:
            continue

        def f(w):
            w = np.exp(w) / np.exp(w).sum()
            return np.linalg.norm(w @ V - xi)

        best = min(minimize(f, np.random.default_rng(k).normal(size=len(V))).fun for k in range(3))
        assert di <= best + 1e-6


def test_restart_samples_exterior_harmonic_measure():
    R, r = 1.0, 3.0
    x = np.tile([[r, 0.0, 0.0]], (200000, 1))
    y = _restart(np.random.default_rng(2), x, R)
    assert np.allclose(np.linalg.norm(y, axis=1), R)
    c = y[:, 0] / R
    # density of cos(theta) for the hitting point, conditioned on hitting
    dens = lambda t: (r * r - R * R) / (r * r + R * R - 2 * r * R * t) ** 1.5
    z = quad(dens, -1, 1)[0]
    mean = quad(lambda t: t * dens(t), -1, 1)[0] / z
    assert c.mean() == pytest.approx(mean, abs=4 * c.std() / math.sqrt(len(c)))


def test_ball_capacity_unbiased():
    B = Ball(1.5, [0.3, -0.2, 0.1])
    e = capacity_newtonian_wos(B, 40000, rng=3)
    assert abs(e.value - 4 * math.pi * 1.5) <= 3 * e.stderr
    assert not e.approximate


def test_cube_capacity_matches_reference():
    e = capacity_newtonian_wos(cube(3, 0.5), 40000, rng=4)
    assert abs(e.value - 4 * math.pi * CUBE_CAPACITANCE) <= 3 * e.stderr


def test_wos_is_seed_deterministic_and_translation_invariant():
    K = random_polytope(3, 2)
    a = capacity_newtonian_wos(K, 5000, rng=9)
    assert a == capacity_newtonian_wos(K, 5000, rng=9)
    b = capacity_newtonian_wos(translate(K, [5.0, 0.0, 0.0]), 5000, rng=9)
    assert abs(a.value - b.value) <= 3 * math.hypot(a.stderr, b.stderr)


def test_wos_homogeneity():
    K = random_polytope(3, 6)
    a = capacity_newtonian_wos(K, 20000, rng=1)
    b = capacity_newtonian_wos(scale(K, 2.0), 20000, rng=2)
    assert abs(b.value - 2 * a.value) <= 3 * math.hypot(b.stderr, 2 * a.stderr)


def test_wos_rejects_bad_input():
    with pytest.raises(ValueError):
        capacity_newtonian_wos(Ball(1.0, [0.0, 0.0]), 10)
    with pytest.raises(ValueError):
        capacity_newtonian_wos(Ball(1.0, np.zeros(3)), 10, start_radius=1.0)
