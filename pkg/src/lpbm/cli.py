"""Command line front end.

    lpbm run --seed 42 --check firey --p 2 --bodies cube3.json ball3.json
    lpbm curve --functional volume --p 2 --bodies square.json disk.json

Exit codes: 0 when no verdict is ``violated``, 1 otherwise, 2 for parse
errors (arguments or body files), 3 for internal numeric failures.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field

from lpbm.bodyspec import SpecError, load_body
from lpbm.functionals.quermass import DEFAULT_SAMPLES
from lpbm.functionals.registry import FunctionalDescriptor, get_functional
from lpbm.geometry.bodies import Tolerances
from lpbm.geometry.directions import default_directions
from lpbm.geometry.hull import DegenerateError
from lpbm.grassmann import RngStream
from lpbm.harness import (
    check_concavity,
    check_corollary_isotropic,
    check_lp_bm,
    check_pinfty_limit,
    run_jobs,
    sample_curve,
)
from lpbm.report import build_report, curve_csv, to_csv, to_json

log = logging.getLogger("lpbm")

EXIT_OK, EXIT_VIOLATED, EXIT_PARSE, EXIT_NUMERIC = 0, 1, 2, 3

# check id -> functional family (None for checks with their own engine)
CHECKS = {
    "volume": "volume",
    "firey": "quermass",
    "mixed_volume": "mixed_volume_ball",
    "inertia": "inertia",
    "harmonic": "harmonic_quermass",
    "affine": "affine_quermass",
    "projection": "projection",
    "capacity_q1": "capacity_q1",
    "capacity_q2": "capacity_q2",
    "width_power": "width_power",
    "isotropic": None,
    "pinfty": None,
    "concavity": None,
}


@dataclass
class RunConfig:
    seed: int = 0
    checks: list = field(default_factory=list)
    p_values: list = field(default_factory=lambda: [2.0])
    alpha_count: int = 21
    curves: bool = True
    grid_resolution: dict = field(default_factory=dict)
    mc_samples: int = DEFAULT_SAMPLES
    walkers: int = 20000
    width_exponent: float = 0.5
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: str | None = None
    format: str = "json"
    threads: int = 1

    def __post_init__(self):
        for c in self.checks:
            if c not in CHECKS:
                raise SpecError(f"unknown check {c!r}; known: {', '.join(sorted(CHECKS))}")
        for p in self.p_values:
            if not p >= 1:
                raise SpecError("p values must be >= 1")
        if self.alpha_count < 3:
            raise SpecError("alpha_count must be at least 3")
        if self.format not in ("json", "csv"):
            raise SpecError("format must be json or csv")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("output")
        d.pop("threads")  # results do not depend on it
        d["p_values"] = ["inf" if math.isinf(p) else p for p in self.p_values]
        return d


def _functionals(family: str, n: int, cfg: RunConfig, grid) -> list[FunctionalDescriptor]:
    if family in ("quermass", "harmonic_quermass", "affine_quermass"):
        return [get_functional(family, n, grid, index=i, samples=cfg.mc_samples) for i in range(1, n)]
    if family == "mixed_volume_ball":
        return [get_functional(family, n, grid, j=j) for j in range(1, n + 1)]
    if family == "projection":
        return [get_functional(family, n, grid, j=j, k=k) for j in (1, 2, 3) for k in (1, 2)]
    if family == "width_power":
        return [get_functional(family, n, grid, r=cfg.width_exponent)]
    if family == "capacity_q2":
        return [get_functional(family, n, grid, walkers=cfg.walkers)]
    return [get_functional(family, n, grid)]


def _jobs(cfg: RunConfig, K, L):
    """(kind, zero-argument callable) in a fixed order."""
    n = K.dim
    count = cfg.grid_resolution.get(str(n)) or cfg.grid_resolution.get(n)
    grid = default_directions(n, count) if count else None
    tol = cfg.tolerances
    root = RngStream(cfg.seed)
    jobs = []
    for check in cfg.checks:
        family = CHECKS[check]
        for p in cfg.p_values:
            tag = f"{check}|{p}"
            if check == "isotropic":
                jobs.append(("record", lambda p=p: check_corollary_isotropic(K, L, p, tol, grid)))
                continue
            if check == "pinfty":
                F = get_functional("volume", n, grid)
                jobs.append(("extra", lambda F=F, s=root.child(tag): check_pinfty_limit(
                    F, K, L, (2, 4, 8, 16), tol, s, grid)))
                break  # p-independent
            if check == "concavity":
                F = get_functional("volume", n, grid)
                jobs.append(("concavity", lambda F=F, p=p, s=root.child(tag): _concavity(
                    F, p, K, L, cfg, s, tol, grid)))
                continue
            for F in _functionals(family, n, cfg, grid):
                stream = root.child(f"{tag}|{F.label}")
                jobs.append(("record", lambda F=F, p=p, s=stream: check_lp_bm(F, p, K, L, None, tol, s, grid=grid)))
                if math.isfinite(p):
                    jobs.append(("record", lambda F=F, p=p, s=stream: check_lp_bm(F, p, K, L, 0.5, tol, s, grid=grid)))
                    if cfg.curves:
                        jobs.append(("curve", lambda F=F, p=p, s=stream: sample_curve(
                            F, p, K, L, cfg.alpha_count, s)))
    return jobs


def _concavity(F, p, K, L, cfg, stream, tol, grid):
    c = sample_curve(F, p, K, L, cfg.alpha_count, stream)
    r = check_concavity(c, tol, grid)
    return c, {
        "check": "concavity",
        "functional": F.label,
        "p": p,
        "concave": r.concave,
        "min_margin": r.min_margin,
        "verdict": "holds" if r.concave else "violated",
    }


def execute(cfg: RunConfig, K, L) -> dict:
    if K.dim != L.dim:
        raise SpecError("the two bodies live in different dimensions")
    jobs = _jobs(cfg, K, L)
    results = run_jobs([fn for _, fn in jobs], cfg.threads)
    records, curves, extras = [], [], []
    for (kind, _), res in zip(jobs, results):
        if kind == "record":
            records.append(res.to_dict())
        elif kind == "curve":
            curves.append(res.to_dict())
        elif kind == "concavity":
            curves.append(res[0].to_dict())
            extras.append(res[1])
        else:
            d = res.to_dict()
            d["check"] = "pinfty"
            d["verdict"] = "holds" if res.ok else "violated"
            extras.append(d)
    config = cfg.to_dict()
    config["dim"] = K.dim
    return build_report(config, records, curves, extras)


def _write(text: str, path: str | None):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _threads(value: int | None) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("LPBM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise SpecError("LPBM_THREADS must be an integer") from exc
    return 1


def _p_value(s: str) -> float:
    if s in ("inf", "infinity"):
        return math.inf
    try:
        return float(s)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid p value {s!r}") from exc


def _grid_arg(s: str) -> tuple[int, int]:
    try:
        n, count = s.split(":")
        return int(n), int(count)
    except ValueError as exc:
        raise argparse.ArgumentTypeError("grid must look like DIM:COUNT, e.g. 3:642") from exc


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lpbm", description="Numerical checks of L_p Brunn-Minkowski inequalities.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--bodies", nargs=2, required=True, metavar=("K.json", "L.json"))
        p.add_argument("--grid", type=_grid_arg, action="append", default=[],
                       help="direction count per dimension, DIM:COUNT (repeatable)")
        p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="Grassmannian samples")
        p.add_argument("--walkers", type=int, default=20000, help="walk-on-spheres walkers")
        p.add_argument("--alpha-count", type=int, default=21)
        p.add_argument("--output", "-o")

    run = sub.add_parser("run", help="run checks and write a report")
    common(run)
    run.add_argument("--check", action="extend", nargs="+", required=True, choices=sorted(CHECKS))
    run.add_argument("--p", type=_p_value, nargs="+", default=[2.0])
    run.add_argument("--format", choices=["json", "csv"], default="json")
    run.add_argument("--threads", type=int)
    run.add_argument("--no-curves", action="store_true")
    run.add_argument("--width-exponent", type=float, default=0.5)
    run.add_argument("--rel-tol", type=float, default=Tolerances.rel_tol)
    run.add_argument("--dilate-tol", type=float, default=Tolerances.dilate_tol)
    run.add_argument("--mc-sigma", type=float, default=Tolerances.mc_sigma)

    cur = sub.add_parser("curve", help="emit the curve alpha -> F_{p;K,L}(alpha) as CSV")
    common(cur)
    cur.add_argument("--functional", required=True)
    cur.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    cur.add_argument("--p", type=_p_value, default=2.0)
    return ap


def _params(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise SpecError(f"--param expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = int(v)
        except ValueError:
            try:
                out[k] = float(v)
            except ValueError as exc:
                raise SpecError(f"--param {k} must be numeric") from exc
    return out


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        K, L = (load_body(b) for b in args.bodies)
        grid_res = {str(n): c for n, c in args.grid}
        for n, c in args.grid:
            try:
                default_directions(n, c)
            except ValueError as exc:
                raise SpecError(f"--grid {n}:{c}: {exc}") from exc
        if args.command == "curve":
            n = K.dim
            grid = default_directions(n, grid_res.get(str(n))) if str(n) in grid_res else None
            params = _params(args.param)
            if args.functional in ("quermass", "harmonic_quermass", "affine_quermass"):
                params.setdefault("samples", args.samples)
            if args.functional == "capacity_q2":
                params.setdefault("walkers", args.walkers)
            try:
                F = get_functional(args.functional, n, grid, **params)
            except (KeyError, TypeError) as exc:
                raise SpecError(str(exc)) from exc
            if args.alpha_count < 2:
                raise SpecError("alpha-count must be at least 2")
            c = sample_curve(F, args.p, K, L, args.alpha_count, RngStream(args.seed).child("curve"))
            _write(curve_csv(c.to_dict()), args.output)
            return EXIT_OK
        cfg = RunConfig(seed=args.seed, checks=list(dict.fromkeys(args.check)), p_values=args.p,
                        alpha_count=args.alpha_count, curves=not args.no_curves,
                        grid_resolution=grid_res, mc_samples=args.samples, walkers=args.walkers,
                        width_exponent=args.width_exponent,
                        tolerances=Tolerances(rel_tol=args.rel_tol, dilate_tol=args.dilate_tol,
                                              mc_sigma=args.mc_sigma),
                        output=args.output, format=args.format, threads=_threads(args.threads))
        report = execute(cfg, K, L)
    except SpecError as exc:
        log.error("%s", exc)
        return EXIT_PARSE
    except (DegenerateError, ArithmeticError, RuntimeError, ValueError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    _write(to_json(report) if cfg.format == "json" else to_csv(report), cfg.output)
    return EXIT_VIOLATED if report["summary"]["violated"] else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
