import numpy as np
import pytest

from lpbm.geometry.bodies import convex_hull


def random_polytope(n, seed, points=None, symmetric=False):
    """Seeded random polytope with the origin well inside (radii in [0.6, 1.4])."""
    rng = np.random.default_rng(seed)
    m = points or (8 if n == 2 else 14)
    while True:
        U = rng.standard_normal((m, n))
        U /= np.linalg.norm(U, axis=1)[:, None]
        V = U * rng.uniform(0.6, 1.4, (m, 1))
        if symmetric:
            V = np.vstack([V, -V])
        P = convex_hull(V)
        if P.origin_margin > 0.2:
            return P


def random_pair(n, seed, symmetric=False):
    return random_polytope(n, 2 * seed, symmetric=symmetric), \
        random_polytope(n, 2 * seed + 1, symmetric=symmetric)


@pytest.fixture
def rand_poly():
    return random_polytope


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.result_lines():
        terminalreporter.write_line(line)
