"""Verification engine for L_p Brunn-Minkowski type inequalities.

Every check compares Monte Carlo aware left and right hand sides.  A check is
``violated`` only when

    slack < -(mc_sigma * stderr + rel_tol * |rhs| + grid allowance),

``holds`` when the slack clears that band, and ``holds_within_noise``
otherwise.  Estimates drawn from the same random stream are paired, so the
slack's standard error accounts for their covariance.  The grid allowance
is nonzero only when some value was computed on a circumscribed grid
polytope; it bounds that polytope's upward bias.
"""

from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from lpbm.functionals.estimate import Estimate, combined_stderr
from lpbm.functionals.quermass import quermassintegral
from lpbm.functionals.registry import FunctionalDescriptor
from lpbm.functionals.volumes import isotropic_constant, volume_estimate
from lpbm.geometry.bodies import ConvexBody, Tolerances, is_dilate_pair, lp_combine, scale, translate
from lpbm.geometry.directions import DirectionSet, default_directions
from lpbm.grassmann import as_stream, fraction_lower_bound, strict_projection_fraction

log = logging.getLogger(__name__)

HOLDS, NOISE, VIOLATED, INCONCLUSIVE = "holds", "holds_within_noise", "violated", "inconclusive"
SEPARATION = 0.05  # Hausdorff separation (fraction of scale) needed before strictness is asserted


def _grid(n: int, grid: DirectionSet | None) -> DirectionSet:
    return default_directions(n) if grid is None else grid


def _num(x):
    return "inf" if isinstance(x, float) and math.isinf(x) else x


def body_digest(*bodies: ConvexBody, extra: str = "") -> str:
    """Short hash of the bodies' support values on the default grid."""
    h = hashlib.sha256(extra.encode())
    for K in bodies:
        G = default_directions(K.dim)
        h.update(np.ascontiguousarray(K.support(G.directions), dtype="<f8").tobytes())
    return h.hexdigest()[:16]


def combination(p: float, alpha: float, K: ConvexBody, L: ConvexBody) -> ConvexBody:
    """(1 - alpha) ._p K +_p alpha ._p L."""
    return lp_combine(p, 1.0 - alpha, K, alpha, L)


def dilate_separation(K: ConvexBody, L: ConvexBody, grid: DirectionSet | None = None) -> float:
    """min over lam > 0 of max_u |h_K - lam h_L|, relative to the scale of K."""
    G = _grid(K.dim, grid)
    hk, hl = K.support(G.directions), L.support(G.directions)

    def gap(lam):
        return float(np.max(np.abs(hk - lam * hl)))

    lam0 = float(np.max(hk) / max(float(np.max(hl)), 1e-300))
    res = minimize_scalar(gap, bounds=(0.0, 4.0 * lam0), method="bounded",
                          options={"xatol": 1e-10 * lam0})
    return min(float(res.fun), gap(lam0)) / K.scale


# ---------------------------------------------------------------------------
# records

@dataclass(frozen=True)
class SlackRecord:
    """One inequality lhs >= rhs with its noise band and verdict."""

    check: str
    functional: str
    p: float
    alpha: float | None
    lhs: Estimate
    rhs: Estimate
    slack: float
    stderr: float
    band: float
    verdict: str
    equality_expected: bool
    equality_ok: bool
    strict: bool
    floor: float
    digest: str
    seed: int
    notes: dict = field(default_factory=dict)

    @property
    def relative_slack(self) -> float:
        return self.slack / abs(self.rhs.value) if self.rhs.value else self.slack

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "functional": self.functional,
            "p": _num(self.p),
            "alpha": self.alpha,
            "lhs": _est_dict(self.lhs),
            "rhs": _est_dict(self.rhs),
            "slack": self.slack,
            "stderr": self.stderr,
            "band": self.band,
            "verdict": self.verdict,
            "equality_expected": self.equality_expected,
            "equality_ok": self.equality_ok,
            "strict": self.strict,
            "strictness_floor": self.floor,
            "inputs_digest": self.digest,
            "seed": self.seed,
            "notes": self.notes,
        }


def _est_dict(e: Estimate) -> dict:
    return {"value": float(e.value), "stderr": float(e.stderr), "approximate": bool(e.approximate)}


def _sum(terms) -> Estimate:
    v = sum(c * e.value for c, e in terms)
    se = combined_stderr([c for c, _ in terms], [e for _, e in terms])
    return Estimate(float(v), se, any(e.approximate for _, e in terms))


def make_record(check: str, label: str, p: float, alpha: float | None, lhs_terms, rhs_terms,
                tol: Tolerances, *, dim: int, exponent: float = 1.0, seed: int = 0,
                digest: str = "", equality_expected: bool = False, floor: float = 0.0,
                grid: DirectionSet | None = None, notes: dict | None = None) -> SlackRecord:
    """Record for sum(c e) over lhs_terms >= sum(c e) over rhs_terms.

    ``exponent`` is the power applied to the raw functional (p / degree); it
    scales the grid allowance of approximate values.  ``floor`` is a relative
    strictness floor on top of the noise band.
    """
    lhs, rhs = _sum(lhs_terms), _sum(rhs_terms)
    ests = [e for _, e in lhs_terms] + [e for _, e in rhs_terms]
    coeffs = [c for c, _ in lhs_terms] + [-c for c, _ in rhs_terms]
    se = combined_stderr(coeffs, ests)
    slack = lhs.value - rhs.value
    mag = max(abs(lhs.value), abs(rhs.value))
    allow = 0.0
    if any(e.approximate for e in ests):
        allow = max(exponent, 1.0) * _grid(dim, grid).grid_error() * mag
    band = tol.mc_sigma * se + tol.rel_tol * abs(rhs.value) + allow
    if slack < -band:
        verdict = VIOLATED
    elif slack > band:
        verdict = HOLDS
    else:
        verdict = NOISE
    eq_band = max(tol.mc_sigma * se, tol.equality_tol * abs(rhs.value)) + allow
    strict = slack > band + floor * abs(rhs.value)
    return SlackRecord(check, label, float(p), alpha, lhs, rhs, float(slack), float(se), float(band),
                       verdict, equality_expected, bool(abs(slack) <= eq_band), bool(strict),
                       float(floor), digest, int(seed), dict(notes or {}))


# ---------------------------------------------------------------------------
# curves and concavity

@dataclass(frozen=True)
class CurveSample:
    """alpha -> F((1 - alpha) ._p K +_p alpha ._p L)^p for the normalized F."""

    functional: str
    p: float
    alphas: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    approximate: bool
    estimates: tuple = field(default=(), repr=False, compare=False)
    dim: int = 0

    def endpoint_gap(self, FK: float, FL: float) -> float:
        """Relative mismatch of the curve's ends with F(K)^p and F(L)^p."""
        a = abs(self.values[0] - FK) / abs(FK)
        b = abs(self.values[-1] - FL) / abs(FL)
        return float(max(a, b))

    def to_dict(self) -> dict:
        return {
            "functional": self.functional,
            "p": _num(self.p),
            "alpha": [float(a) for a in self.alphas],
            "value": [float(v) for v in self.values],
            "stderr": [float(s) for s in self.stderr],
            "approximate": self.approximate,
        }


def _alpha_grid(alphas) -> np.ndarray:
    if alphas is None:
        alphas = 21
    if np.isscalar(alphas):
        return np.linspace(0.0, 1.0, int(alphas))
    return np.asarray(alphas, dtype=float)


def _curve_value(F: FunctionalDescriptor, p: float, Q: ConvexBody, stream) -> Estimate:
    e = F.evaluate(Q, stream)
    return e.power(p / F.degree)


def sample_curve(F: FunctionalDescriptor, p: float, K: ConvexBody, L: ConvexBody,
                 alphas=None, rng=0) -> CurveSample:
    """Evaluate the curve on the alpha grid (21 points by default).

    Every alpha uses the same random stream, so Monte Carlo functionals see
    common random numbers along the curve.
    """
    if not p >= 1 or math.isinf(p):
        raise ValueError("curves are sampled for 1 <= p < inf")
    a = _alpha_grid(alphas)
    stream = as_stream(rng)
    ests = tuple(_curve_value(F, p, combination(p, float(t), K, L), stream) for t in a)
    return CurveSample(F.label, float(p), a, np.array([e.value for e in ests]),
                       np.array([e.stderr for e in ests]), any(e.approximate for e in ests), ests, K.dim)


@dataclass(frozen=True)
class ConcavityResult:
    concave: bool
    min_margin: float  # min over interior points of -(second difference)
    worst: int
    second_differences: np.ndarray
    allowance: np.ndarray


def check_concavity(c: CurveSample, tol: Tolerances | None = None,
                    grid: DirectionSet | None = None) -> ConcavityResult:
    """Second differences against tol * scale + Monte Carlo noise (+ grid allowance)."""
    tol = tol or Tolerances()
    if len(c.values) < 3:
        raise ValueError("concavity needs at least three alphas")
    v = c.values
    scale_ = float(np.max(np.abs(v)))
    D = v[:-2] - 2 * v[1:-1] + v[2:]
    # unequal spacing: compare against the chord instead of the plain difference
    a = c.alphas
    if not np.allclose(np.diff(a), a[1] - a[0]):
        w = (a[1:-1] - a[:-2]) / (a[2:] - a[:-2])
        D = (1 - w) * v[:-2] + w * v[2:] - v[1:-1]
    allow = np.full(len(D), tol.rel_tol * scale_)
    if c.estimates and any(e.stderr or e.influence is not None for e in c.estimates):
        for i in range(len(D)):
            se = combined_stderr([1.0, -2.0, 1.0], c.estimates[i:i + 3])
            allow[i] += tol.mc_sigma * se
    if c.approximate and c.dim:
        allow += max(c.p, 1.0) * _grid(c.dim, grid).grid_error() * scale_
    ok = D <= allow
    worst = int(np.argmax(D - allow))
    return ConcavityResult(bool(ok.all()), float(np.min(-D)), worst + 1, D, allow)


@dataclass(frozen=True)
class MidpointTest:
    alpha: float
    beta: float
    lam: float
    record: SlackRecord


def midpoint_tests(F: FunctionalDescriptor, p: float, K: ConvexBody, L: ConvexBody, triples,
                   tol: Tolerances | None = None, rng=0) -> list[MidpointTest]:
    """Direct p-concavity tests F(Q)^p >= (1-lam) F(K_a)^p + lam F(K_b)^p.

    Q is built as the nested combination (1-lam) ._p K_a +_p lam ._p K_b of the
    intermediate bodies, not read off the curve.
    """
    tol = tol or Tolerances()
    stream = as_stream(rng)
    out = []
    for a, b, lam in triples:
        Ka, Kb = combination(p, a, K, L), combination(p, b, K, L)
        Q = lp_combine(p, 1.0 - lam, Ka, lam, Kb)
        eq = _curve_value(F, p, Q, stream)
        ea = _curve_value(F, p, Ka, stream)
        eb = _curve_value(F, p, Kb, stream)
        rec = make_record("midpoint", F.label, p, (1 - lam) * a + lam * b, [(1.0, eq)],
                          [(1 - lam, ea), (lam, eb)], tol, dim=K.dim, exponent=p / F.degree,
                          seed=stream.seed)
        out.append(MidpointTest(float(a), float(b), float(lam), rec))
    return out


@dataclass(frozen=True)
class MidpointAgreement:
    curve: ConcavityResult
    direct_ok: bool
    agree: bool
    tests: list


def midpoint_agreement(F: FunctionalDescriptor, p: float, K: ConvexBody, L: ConvexBody,
                      alphas=None, random_triples: int = 5, tol: Tolerances | None = None,
                      rng=0) -> MidpointAgreement:
    """Curve concavity verdict versus direct midpoint tests on the same bodies.

    The direct tests cover every adjacent triple of the alpha grid with
    lam = 1/2 (the nested-body counterpart of each second difference) plus
    ``random_triples`` random (alpha, beta, lam).
    """
    tol = tol or Tolerances()
    a = _alpha_grid(alphas)
    curve = sample_curve(F, p, K, L, a, rng)
    conc = check_concavity(curve, tol)
    gen = as_stream(rng).child("midpoint").generator()
    triples = [(a[i - 1], a[i + 1], 0.5) for i in range(1, len(a) - 1)]
    triples += [tuple(x) for x in gen.random((random_triples, 3))]
    tests = midpoint_tests(F, p, K, L, triples, tol, rng)
    adjacent = tests[:len(a) - 2]
    # the adjacent triples are second differences divided by -2
    direct_ok = all(t.record.slack >= -(conc.allowance[i] / 2) for i, t in enumerate(adjacent))
    direct_ok &= all(t.record.verdict != VIOLATED for t in tests[len(a) - 2:])
    return MidpointAgreement(conc, bool(direct_ok), bool(direct_ok == conc.concave), tests)


# ---------------------------------------------------------------------------
# L_p Brunn-Minkowski checks

def strictness_floor(F: FunctionalDescriptor, p: float, K: ConvexBody, tol: Tolerances | None = None,
                     rng=0) -> float:
    """Relative strictness floor from the dilate pair (K, 2K): ten times its noise level."""
    tol = tol or Tolerances()
    rec = check_lp_bm(F, p, K, scale(K, 2.0), tol=tol, rng=rng)
    base = (abs(rec.slack) + rec.band) / abs(rec.rhs.value)
    return float(max(10.0 * base, 10.0 * tol.rel_tol))


def check_lp_bm(F: FunctionalDescriptor, p: float, K: ConvexBody, L: ConvexBody,
                alpha: float | None = None, tol: Tolerances | None = None, rng=0,
                floor: float = 0.0, grid: DirectionSet | None = None) -> SlackRecord:
    """F(K +_p L)^p >= F(K)^p + F(L)^p, or the alpha-weighted form when alpha is given."""
    tol = tol or Tolerances()
    stream = as_stream(rng)
    if alpha is None:
        Q = lp_combine(p, 1.0, K, 1.0, L)
        wk, wl = 1.0, 1.0
    else:
        Q = combination(p, alpha, K, L)
        wk, wl = 1.0 - alpha, alpha
    eq = _curve_value(F, p, Q, stream)
    ek = _curve_value(F, p, K, stream)
    el = _curve_value(F, p, L, stream)
    dil = is_dilate_pair(K, L, tol) if K.contains_origin_interior and L.contains_origin_interior \
        else None
    return make_record("lp_bm", F.label, p, alpha, [(1.0, eq)], [(wk, ek), (wl, el)], tol,
                       dim=K.dim, exponent=p / F.degree, seed=stream.seed,
                       digest=body_digest(K, L, extra=f"{F.label}|{p}|{alpha}"),
                       equality_expected=bool(dil), floor=floor, grid=grid)


@dataclass(frozen=True)
class EqualityReport:
    records: list
    ok: bool
    failures: list


def check_equality_characterization(F: FunctionalDescriptor, pairs, p: float,
                                    tol: Tolerances | None = None, rng=0, alpha: float = 0.5,
                                    translate_probe: bool = True) -> EqualityReport:
    """Dilate pairs must give equality, separated non-dilate pairs strict inequality.

    For translation-invariant F a translate pair (K, K + x) is added: it must
    be strict for p > 1 and an equality in the p = 1 (Minkowski) test.
    """
    tol = tol or Tolerances()
    records, failures = [], []
    for idx, (K, L) in enumerate(pairs):
        dil = bool(is_dilate_pair(K, L, tol))
        sep = 0.0 if dil else dilate_separation(K, L)
        floor = strictness_floor(F, p, K, tol, rng) if not dil and sep >= SEPARATION else 0.0
        rec = check_lp_bm(F, p, K, L, alpha, tol, rng, floor)
        rec = _annotate(rec, pair=idx, separation=sep, expect="equality" if dil else
                        ("strict" if sep >= SEPARATION else "none"))
        records.append(rec)
        if rec.verdict == VIOLATED or (dil and not rec.equality_ok) or \
                (not dil and sep >= SEPARATION and not rec.strict):
            failures.append(rec)
    if translate_probe and F.translation_invariant and pairs:
        K = pairs[0][0]
        x = np.zeros(K.dim)
        x[0] = 0.5 * K.origin_margin
        Kx = translate(K, x)
        sep = dilate_separation(K, Kx)
        floor = strictness_floor(F, p, K, tol, rng)
        rp = _annotate(check_lp_bm(F, p, K, Kx, alpha, tol, rng, floor),
                       pair="translate", separation=sep, expect="strict")
        r1 = _annotate(check_lp_bm(F, 1.0, K, Kx, alpha, tol, rng),
                       pair="translate", separation=sep, expect="equality")
        records += [rp, r1]
        if rp.verdict == VIOLATED or not rp.strict:
            failures.append(rp)
        if not r1.equality_ok:
            failures.append(r1)
    return EqualityReport(records, not failures, failures)


def _annotate(rec: SlackRecord, **notes) -> SlackRecord:
    merged = dict(rec.notes)
    merged.update(notes)
    return SlackRecord(**{**rec.__dict__, "notes": merged})


@dataclass(frozen=True)
class PinftyReport:
    p_values: tuple
    values: list  # normalized F(K +_p L) per p
    limit: Estimate  # F(K +_inf L)
    monotone: bool
    above_limit: bool
    max_bound_ok: bool
    contained: bool
    containment_equality_ok: bool | None
    ok: bool

    def to_dict(self) -> dict:
        return {
            "p_values": [_num(float(p)) for p in self.p_values],
            "values": [_est_dict(e) for e in self.values],
            "limit": _est_dict(self.limit),
            "monotone": self.monotone,
            "above_limit": self.above_limit,
            "max_bound_ok": self.max_bound_ok,
            "contained": self.contained,
            "containment_equality_ok": self.containment_equality_ok,
            "ok": self.ok,
        }


def check_pinfty_limit(F: FunctionalDescriptor, K: ConvexBody, L: ConvexBody,
                       p_sequence=(2, 4, 8, 16), tol: Tolerances | None = None, rng=0,
                       grid: DirectionSet | None = None) -> PinftyReport:
    """F(K +_p L) decreases in p toward F(K +_inf L) >= max(F(K), F(L))."""
    tol = tol or Tolerances()
    stream = as_stream(rng)
    vals = [F.normalized(lp_combine(p, 1.0, K, 1.0, L), stream) for p in p_sequence]
    lim = F.normalized(lp_combine(math.inf, 1.0, K, 1.0, L), stream)
    fk, fl = F.normalized(K, stream), F.normalized(L, stream)
    n = K.dim
    allow_g = _grid(n, grid).grid_error() / F.degree

    def le(a: Estimate, b: Estimate) -> bool:
        """a <= b within noise."""
        se = combined_stderr([1.0, -1.0], [a, b])
        mag = max(abs(a.value), abs(b.value))
        allow = allow_g * mag if (a.approximate or b.approximate) else 0.0
        return a.value <= b.value + tol.mc_sigma * se + tol.rel_tol * mag + allow

    monotone = all(le(vals[i + 1], vals[i]) for i in range(len(vals) - 1))
    above = all(le(lim, v) for v in vals)
    top = fk if fk.value >= fl.value else fl
    max_ok = le(top, lim)
    G = _grid(n, grid)
    hk, hl = K.support(G.directions), L.support(G.directions)
    contained = bool(np.all(hk <= hl) or np.all(hl <= hk))
    eq_ok = None
    if contained:
        big = fl if np.all(hk <= hl) else fk
        se = combined_stderr([1.0, -1.0], [lim, big])
        eq_ok = bool(abs(lim.value - big.value) <= max(tol.mc_sigma * se, tol.equality_tol * abs(big.value)))
    ok = monotone and above and max_ok and (eq_ok is not False)
    return PinftyReport(tuple(p_sequence), vals, lim, bool(monotone), bool(above), bool(max_ok),
                        contained, eq_ok, bool(ok))


def check_corollary_isotropic(K0: ConvexBody, K1: ConvexBody, p: float,
                              tol: Tolerances | None = None,
                              grid: DirectionSet | None = None) -> SlackRecord:
    """V(K0 +_p K1)^{p/n} L^{2p/(n+2)} >= the same for K0 plus the same for K1.

    Optimizer non-convergence yields the verdict ``inconclusive``.
    """
    tol = tol or Tolerances()
    n = K0.dim
    if n not in (2, 3):
        raise ValueError("the isotropic check needs n in {2, 3}")
    Q = lp_combine(p, 1.0, K0, 1.0, K1)
    terms, converged, consts = [], True, []
    for B in (Q, K0, K1):
        v, exact = volume_estimate(B, grid)
        iso = isotropic_constant(B, grid=grid)
        converged &= iso.converged
        consts.append(iso.constant)
        val = v ** (p / n) * iso.constant ** (2 * p / (n + 2))
        terms.append(Estimate(float(val), 0.0, not exact))
    rec = make_record("isotropic", "volume_isotropic", p, None, [(1.0, terms[0])],
                      [(1.0, terms[1]), (1.0, terms[2])], tol, dim=n, exponent=p,
                      digest=body_digest(K0, K1, extra=f"isotropic|{p}"),
                      equality_expected=bool(is_dilate_pair(K0, K1, tol)), grid=grid,
                      notes={"isotropic_constants": [float(c) for c in consts]})
    if not converged:
        rec = SlackRecord(**{**rec.__dict__, "verdict": INCONCLUSIVE})
    return rec


# ---------------------------------------------------------------------------
# pointwise inclusion and strict monotonicity

@dataclass(frozen=True)
class InclusionResult:
    holds: bool  # h_p >= h_1 at every grid direction
    min_gap: float
    all_equal: bool  # h_p == h_1 at every grid direction (relative 1e-12)
    supports_equal: bool  # h_K == h_L on the grid (relative 1e-12)


def check_lp_inclusion(K: ConvexBody, L: ConvexBody, p: float, alpha: float,
                       grid: DirectionSet | None = None) -> InclusionResult:
    """(1-alpha) ._p K +_p alpha ._p L contains (1-alpha) K + alpha L, pointwise on the grid."""
    G = _grid(K.dim, grid)
    U = G.directions
    hp = combination(p, alpha, K, L).support(U)
    h1 = lp_combine(1.0, 1.0 - alpha, K, alpha, L).support(U)
    hk, hl = K.support(U), L.support(U)
    s = float(np.max(np.abs(h1)))
    tiny = 1e-12 * s
    gap = hp - h1
    return InclusionResult(bool(np.all(gap >= -tiny)), float(np.min(gap)),
                           bool(np.all(np.abs(gap) <= tiny)),
                           bool(np.all(np.abs(hk - hl) <= tiny)))


@dataclass(frozen=True)
class StrictMonotoneResult:
    fraction: float
    lower_bound: float
    wk: Estimate
    wl: Estimate
    strict: bool


def check_strict_monotone(K: ConvexBody, L: ConvexBody, j: int, samples: int = 10000, rng=0,
                          tol: Tolerances | None = None, confidence: float = 0.99) -> StrictMonotoneResult:
    """For K strictly inside L: positive projection fraction and W_{n-j}(K) < W_{n-j}(L)."""
    tol = tol or Tolerances()
    stream = as_stream(rng)
    frac = strict_projection_fraction(K, L, j, samples, stream)
    lb = fraction_lower_bound(frac, samples, confidence)
    wk = quermassintegral(K, K.dim - j, samples, stream)
    wl = quermassintegral(L, L.dim - j, samples, stream)
    se = combined_stderr([1.0, -1.0], [wl, wk])
    strict = lb > 0 and wl.value - wk.value > tol.mc_sigma * se
    return StrictMonotoneResult(frac, lb, wk, wl, bool(strict))


# ---------------------------------------------------------------------------
# job execution

def run_jobs(jobs, threads: int = 1) -> list:
    """Run zero-argument callables; results come back in submission order."""
    if threads <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda f: f(), jobs))
