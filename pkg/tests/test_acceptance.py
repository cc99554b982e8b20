"""Acceptance suite: one test per criterion, one PASS/FAIL line per criterion.

The lines are printed in pytest's terminal summary (see conftest.py) and by
``python3 tests/test_acceptance.py``.  Tolerances below are pinned, not tuned.
"""

import dataclasses
import itertools
import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import random_pair, random_polytope  # noqa: E402
from lpbm.cli import main as cli_main  # noqa: E402
from lpbm.functionals.capacity import capacity_newtonian_wos, capacity_q1  # noqa: E402
from lpbm.functionals.estimate import combined_stderr  # noqa: E402
from lpbm.functionals.mixed import mixed_volume_pair  # noqa: E402
from lpbm.functionals.quermass import (  # noqa: E402
    affine_quermassintegral,
    harmonic_quermassintegral,
    quermassintegral,
)
from lpbm.functionals.registry import all_functionals, get_functional  # noqa: E402
from lpbm.functionals.volumes import isotropic_constant, moment_of_inertia, volume  # noqa: E402
from lpbm.geometry.bodies import (  # noqa: E402
    AffineImage,
    Ball,
    ConstantWidth2D,
    Ellipsoid,
    Tolerances,
    box,
    cube,
    is_homothetic_pair,
    lp_combine,
    scale,
)
from lpbm.geometry.directions import unit_ball_volume  # noqa: E402
from lpbm.grassmann import RngStream  # noqa: E402
from lpbm.harness import (  # noqa: E402
    SEPARATION,
    VIOLATED,
    check_corollary_isotropic,
    check_lp_bm,
    check_lp_inclusion,
    check_pinfty_limit,
    dilate_separation,
    midpoint_agreement,
    sample_curve,
    strictness_floor,
)
from lpbm.projection_bodies import mixed_projection_body  # noqa: E402

# pinned tolerances
EXACT_REL = 1e-9          # closed-form / exact functionals
MC_SIGMA = 3.0            # Monte Carlo: standard errors
MC_SAMPLES = 10 ** 5      # Grassmannian samples for the closed-form and cube audits
DILATE_EXACT_REL = 1e-6   # dilate equality for exact functionals
FIT_RESIDUAL = 1e-8       # n+1-node Steiner fit residual, relative to V
SQUARE_DISK_TOL = 1e-6    # V(unit square, unit disk) = 2
ISO_TOL = 1e-3            # isotropic constants
L_CUBE = 0.288675         # 1/sqrt(12)
EX36_EQ_REL = 1e-6        # width functional, p = 1
WOS_WALKERS = 10 ** 6
WOS_BUDGET_S = 600.0
PS = (1.5, 2.0, 3.0)

TOL = Tolerances()
BODIES = Path(__file__).resolve().parent.parent / "bodies"

RESULTS: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> bool:
    RESULTS[n] = (bool(ok), detail)
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    return bool(ok)


def result_lines() -> list[str]:
    return [f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {d}" for n, (ok, d) in sorted(RESULTS.items())]


def _rel(a, b):
    return abs(a - b) / abs(b)


# ---------------------------------------------------------------------------

def criterion_1():
    worst_exact, worst_sigma, checked = 0.0, 0.0, 0
    for n, r in itertools.product((2, 3), (0.6, 1.0, 1.7)):
        B = Ball(r, np.zeros(n))
        worst_exact = max(worst_exact, _rel(volume(B), unit_ball_volume(n) * r ** n))
        for i in range(1, n):
            want = unit_ball_volume(n) * r ** (n - i)
            for f in (quermassintegral, harmonic_quermassintegral, affine_quermassintegral):
                e = f(B, i, MC_SAMPLES, 1)
                checked += 1
                if e.stderr:
                    worst_sigma = max(worst_sigma, abs(e.value - want) / e.stderr)
                else:
                    worst_exact = max(worst_exact, _rel(e.value, want))
    ok = worst_exact <= EXACT_REL and worst_sigma <= MC_SIGMA
    return ok, f"{checked} ball values: max rel err {worst_exact:.1e} (<= {EXACT_REL:g}), max |z| {worst_sigma:.2f}"


def criterion_2():
    Q = cube(3, 0.5)
    w1 = quermassintegral(Q, 1, MC_SAMPLES, 11)
    w2 = quermassintegral(Q, 2, MC_SAMPLES, 12)
    z1 = abs(w1.value - 2.0) / w1.stderr
    z2 = abs(w2.value - math.pi) / w2.stderr
    i_cube = _rel(moment_of_inertia(Q), 0.25)
    i_ball = _rel(moment_of_inertia(Ball(1.0, np.zeros(3))), 4 * math.pi / 5)
    cap = capacity_q1(Q).value
    c_facets = _rel(cap, 6.0)
    zc = abs(cap - 3 * w1.value) / (3 * w1.stderr)
    ok = (z1 <= MC_SIGMA and z2 <= MC_SIGMA and i_cube <= EXACT_REL and i_ball <= EXACT_REL
          and c_facets <= EXACT_REL and zc <= MC_SIGMA)
    return ok, (f"W1 z={z1:.2f}, W2 z={z2:.2f}, I rel {i_cube:.1e}/{i_ball:.1e}, "
                f"Cap1 facet sum rel {c_facets:.1e}, Cap1 vs 3 W1 z={zc:.2f}")


def criterion_3():
    violated, strict_fail, strict_checked, total = 0, 0, 0, 0
    for n, pairs in ((2, 50), (3, 20)):
        for s in range(pairs):
            K, L = random_pair(n, 1000 + s)
            sep = dilate_separation(K, L)
            p = PS[s % 3] if n == 3 else None
            for pp in ((p,) if p else PS):
                for index in range(n):  # F = W_index^(1/(n - index)), j = n - index
                    F = get_functional("quermass", n, index=index, samples=5000) if index else \
                        get_functional("volume", n)
                    stream = RngStream(s).child(f"{n}|{pp}|{index}")
                    floor = strictness_floor(F, pp, K, TOL, stream) if sep >= SEPARATION else 0.0
                    r = check_lp_bm(F, pp, K, L, None, TOL, stream, floor)
                    total += 1
                    violated += r.verdict == VIOLATED
                    if sep >= SEPARATION:
                        strict_checked += 1
                        strict_fail += not r.strict
    ok = violated == 0 and strict_fail == 0
    return ok, f"{total} records, {violated} violated, {strict_checked - strict_fail}/{strict_checked} strict beyond floor"


def _dilate_functionals():
    out = []
    for n in (2, 3):
        for F in all_functionals(n, samples=5000, walkers=20000):
            out.append(F)
    return out


def criterion_4():
    worst, fails, count = [], [], 0
    for F in _dilate_functionals():
        K = random_polytope(F.dim, 77)
        L = scale(K, 1.7)
        for p in PS:
            stream = RngStream(4).child(f"{F.label}|{F.dim}|{p}")
            r = check_lp_bm(F, p, K, L, None, TOL, stream)
            lim = max(DILATE_EXACT_REL * abs(r.rhs.value), MC_SIGMA * r.stderr)
            c = sample_curve(F, p, K, L, 11, stream)
            a = c.alphas
            dev = c.values - ((1 - a) * c.values[0] + a * c.values[-1])
            ok_curve = True
            for i in range(1, len(a) - 1):
                se = combined_stderr([1.0, -(1 - a[i]), -a[i]], [c.estimates[i], c.estimates[0], c.estimates[-1]])
                if abs(dev[i]) > max(DILATE_EXACT_REL * abs(c.values[i]), MC_SIGMA * se):
                    ok_curve = False
            count += 1
            worst.append(abs(r.slack) / abs(r.rhs.value))
            if abs(r.slack) > lim or not ok_curve or not r.equality_expected:
                fails.append(f"{F.dim}D {F.label} p={p}")
    ok = not fails
    return ok, f"{count} (functional, p) cases, max |rel slack| {max(worst):.1e}" + (
        f"; failures: {fails[:4]}" if fails else "")


def criterion_5():
    rng = np.random.default_rng(5)
    bad, eq_cases, eq_mismatch = 0, 0, 0
    for t in range(100):
        n = 2 + t % 2
        K = random_polytope(n, 5000 + t)
        L = K if t % 10 == 0 else random_polytope(n, 6000 + t)
        p = float(rng.choice([1.5, 2.0, 3.0, 5.0, 10.0]))
        alpha = float(rng.uniform(0.05, 0.95))
        r = check_lp_inclusion(K, L, p, alpha)
        bad += not r.holds
        eq_cases += r.all_equal
        eq_mismatch += r.all_equal != r.supports_equal
    ok = bad == 0 and eq_mismatch == 0 and eq_cases == 10
    return ok, f"100 tuples, {bad} inclusion failures, equality iff h_K = h_L in {100 - eq_mismatch}/100 ({eq_cases} equal)"


def criterion_6():
    rng = np.random.default_rng(6)
    names = ["volume", "quermass", "inertia", "mixed_volume_ball", "width_power", "volume_sq",
             "inertia_sq"]
    agree, concave_count = 0, 0
    for t in range(100):
        name = names[t % len(names)]
        K, L = random_pair(2, 7000 + t)
        if name == "volume_sq":  # V^2 along L_p sums: not concave for bodies of different size
            F = dataclasses.replace(get_functional("volume", 2), name=name, degree=1)
            L = scale(L, 3.0)
        elif name == "inertia_sq":
            F = dataclasses.replace(get_functional("inertia", 2), name=name, degree=2)
            L = scale(L, 3.0)
        elif name == "quermass":
            F = get_functional("quermass", 2, index=1)
        elif name == "mixed_volume_ball":
            F = get_functional(name, 2, j=1)
        elif name == "width_power":
            F = get_functional(name, 2, r=0.5)
        else:
            F = get_functional(name, 2)
        p = float(rng.choice([1.5, 2.0, 3.0]))
        res = midpoint_agreement(F, p, K, L, 9, random_triples=3, rng=t)
        agree += res.agree
        concave_count += res.curve.concave
    ok = agree == 100
    return ok, f"{agree}/100 agree ({concave_count} concave, {100 - concave_count} not)"


def criterion_7():
    K, L = Ball(0.5, [0.0, 0.0]), ConstantWidth2D(1.0)
    worst_eq, strict_ok, margins = 0.0, True, []
    for r_exp in (0.5, -1.0):
        F = get_functional("width_power", 2, r=r_exp)
        c = sample_curve(F, 1.0, K, L, 21)
        chord = (1 - c.alphas) * c.values[0] + c.alphas * c.values[-1]
        worst_eq = max(worst_eq, float(np.max(np.abs(c.values - chord) / np.abs(chord))))
        r1 = check_lp_bm(F, 1.0, K, L, 0.5)
        worst_eq = max(worst_eq, abs(r1.relative_slack))
        floor = strictness_floor(F, 2.0, K)
        r2 = check_lp_bm(F, 2.0, K, L, 0.5, floor=floor)
        strict_ok &= r2.strict
        margins.append(r2.relative_slack / floor)
    homothetic = bool(is_homothetic_pair(K, L))
    ok = worst_eq <= EX36_EQ_REL and strict_ok and not homothetic
    return ok, (f"p=1 max rel deviation {worst_eq:.1e}; p=2 slack/floor "
                f"{', '.join(f'{m:.0f}x' for m in margins)}; homothetic={homothetic}")


def criterion_8():
    sq = box([0, 0], [1, 1])
    D = Ball(1.0, [0.0, 0.0])
    v = mixed_volume_pair(sq, D, 1)
    sq_ok = abs(v.value - 2.0) <= SQUARE_DISK_TOL
    violated, worst_res, total = 0, 0.0, 0
    for s in range(20):
        K, L = random_pair(2, 8000 + s)
        for j in (1, 2):
            F = get_functional("mixed_volume_ball", 2, j=j)
            for p in PS:
                r = check_lp_bm(F, p, K, L)
                violated += r.verdict == VIOLATED
                total += 1
        for body in (K, L, lp_combine(2.0, 1.0, K, 1.0, L)):
            worst_res = max(worst_res, mixed_volume_pair(body, D, 1).residual)
    ok = sq_ok and violated == 0 and worst_res <= FIT_RESIDUAL
    return ok, (f"V(square, disk) = {v.value:.12f}; {total} records, {violated} violated; "
                f"max fit residual {worst_res:.1e} V")


def criterion_9():
    B = Ball(1.0, np.zeros(3))
    pairs = [(cube(3), B), (box([-1, -0.5, -2], [1, 0.5, 2]), Ellipsoid(np.diag([1.0, 2.0, 0.5])))]
    F = get_functional("inertia", 3)
    verdicts = []
    for K, L in pairs:
        verdicts.append(check_lp_bm(F, 2.0, K, L).verdict)
        verdicts.append(check_corollary_isotropic(K, L, 2.0).verdict)
    lc = isotropic_constant(cube(3)).constant
    le = isotropic_constant(Ellipsoid(np.diag([1.0, 4.0, 0.3]))).constant
    lb = isotropic_constant(B).constant
    ok = all(v == "holds" for v in verdicts) and abs(lc - L_CUBE) <= ISO_TOL and abs(le - lb) <= ISO_TOL
    return ok, f"verdicts {verdicts}; L(cube) = {lc:.6f}; |L(ellipsoid) - L(ball)| = {abs(le - lb):.1e}"


def criterion_10():
    violated, total = 0, 0
    for s in range(20):
        K, L = random_pair(3, 9000 + s)
        p = PS[s % 3]
        for name in ("harmonic_quermass", "affine_quermass"):
            for index in (1, 2):
                F = get_functional(name, 3, index=index, samples=5000)
                r = check_lp_bm(F, p, K, L, None, TOL, RngStream(s).child(f"{name}|{index}"))
                violated += r.verdict == VIOLATED
                total += 1
    K = random_polytope(3, 99)
    base = affine_quermassintegral(K, 1, 20000, 1)
    gen = np.random.default_rng(10)
    zs = []
    for t in range(10):
        T = gen.normal(size=(3, 3))
        if np.linalg.det(T) < 0:
            T[0] *= -1
        T /= np.cbrt(np.linalg.det(T))
        e = affine_quermassintegral(AffineImage(T, np.zeros(3), K), 1, 20000, 100 + t)
        zs.append(abs(e.value - base.value) / math.hypot(e.stderr, base.stderr))
    ok = violated == 0 and max(zs) <= MC_SIGMA
    return ok, f"{total} records, {violated} violated; SL(3) invariance max |z| = {max(zs):.2f} over 10 maps"


def criterion_11():
    B = Ball(1.0, np.zeros(3))
    pairs = [(cube(3), B)] + [random_pair(3, 1100 + s) for s in range(2)]
    violated, total = 0, 0
    for K, L in pairs:
        for j, k in itertools.product((1, 2, 3), (1, 2)):
            F = get_functional("projection", 3, j=j, k=k)
            r = check_lp_bm(F, 2.0, K, L)
            violated += r.verdict == VIOLATED
            total += 1
    Pi = mixed_projection_body(cube(3), 0)
    d = Pi.grid.directions
    axes = np.flatnonzero(np.isclose(np.abs(d).max(axis=1), 1.0))
    axes_ok = len(axes) == 6 and bool(np.all(Pi.values[axes] == 4.0))
    PiB = mixed_projection_body(B, 0)
    ball_dev = float(np.max(np.abs(PiB.values - math.pi)) / math.pi)
    ok = violated == 0 and axes_ok and ball_dev <= PiB.grid.grid_error()
    return ok, f"{total} records, {violated} violated; Pi_0(cube) axes = 4: {axes_ok}; Pi_0(B) rel dev {ball_dev:.1e}"


def criterion_12():
    violated, total = 0, 0
    F1 = get_functional("capacity_q1", 3)
    for s in range(20):
        K, L = random_pair(3, 1200 + s)
        r = check_lp_bm(F1, PS[s % 3], K, L)
        violated += r.verdict == VIOLATED
        total += 1
    t0 = time.perf_counter()
    e = capacity_newtonian_wos(Ball(1.0, np.zeros(3)), WOS_WALKERS, rng=12)
    dt = time.perf_counter() - t0
    z = abs(e.value - 4 * math.pi) / e.stderr
    F2 = get_functional("capacity_q2", 3, walkers=10 ** 5)
    r2 = check_lp_bm(F2, 2.0, cube(3), Ball(1.0, np.zeros(3)), None, TOL, 12)
    ok = violated == 0 and z <= MC_SIGMA and dt <= WOS_BUDGET_S and r2.verdict != VIOLATED
    return ok, (f"Cap1: {total} records, {violated} violated; Cap2(B) = {e.value:.4f} +- {e.stderr:.4f} "
                f"(z = {z:.2f}, {dt:.0f}s); cube/ball Cap2 slack {r2.slack:.3f} +- {r2.stderr:.3f} [{r2.verdict}]")


def criterion_13():
    bad = []
    for s in range(20):
        K, L = random_pair(2, 1300 + s)
        rep = check_pinfty_limit(get_functional("volume", 2), K, L, (2, 4, 8, 16))
        if not rep.ok:
            bad.append(s)
    ok = not bad
    return ok, f"20 pairs, monotone + limit + max bound failures: {bad or 'none'}"


def criterion_14(tmp: Path):
    args = ["--seed", "1234", "--check", "volume", "firey", "pinfty", "--p", "2", "3",
            "--samples", "2000", "--alpha-count", "5",
            "--bodies", str(BODIES / "cube3.json"), str(BODIES / "ball3.json")]
    outs = []
    for name, extra in (("a.json", []), ("b.json", []), ("c.json", ["--threads", "4"])):
        code = cli_main(["run", *args, *extra, "-o", str(tmp / name)])
        outs.append((code, (tmp / name).read_bytes()))
    same = outs[0][1] == outs[1][1] == outs[2][1]
    codes = {c for c, _ in outs}
    n_rec = len(json.loads(outs[0][1])["records"])
    return same and codes == {0}, f"3 runs ({n_rec} records, 1 and 4 threads): byte-identical={same}, exit codes {sorted(codes)}"


# ---------------------------------------------------------------------------

def _run(n, *args):
    ok, detail = globals()[f"criterion_{n}"](*args)
    assert record(n, ok, detail), detail


def test_criterion_01_closed_form_audit():
    _run(1)


def test_criterion_02_cube_oracles():
    _run(2)


def test_criterion_03_firey_inequality():
    _run(3)


def test_criterion_04_dilate_equality():
    _run(4)


def test_criterion_05_lp_inclusion():
    _run(5)


def test_criterion_06_curve_concavity_vs_midpoint():
    _run(6)


def test_criterion_07_width_functional_dichotomy():
    _run(7)


def test_criterion_08_mixed_volumes():
    _run(8)


def test_criterion_09_inertia_and_isotropic():
    _run(9)


def test_criterion_10_harmonic_and_affine():
    _run(10)


def test_criterion_11_projection_composites():
    _run(11)


@pytest.mark.slow
def test_criterion_12_capacities():
    _run(12)


def test_criterion_13_pinfty_limit():
    _run(13)


def test_criterion_14_determinism(tmp_path):
    _run(14, tmp_path)


if __name__ == "__main__":
    import tempfile

    for n in range(1, 15):
        t0 = time.perf_counter()
        args = (Path(tempfile.mkdtemp()),) if n == 14 else ()
        try:
            ok, detail = globals()[f"criterion_{n}"](*args)
        except Exception as exc:  # report and continue
            ok, detail = False, f"error: {exc!r}"
        record(n, ok, detail + f"  [{time.perf_counter() - t0:.0f}s]")
    sys.exit(0 if all(ok for ok, _ in RESULTS.values()) else 1)
