"""JSON body specifications.

A specification is an object ``{"dim": n, "rep": {...}, "flags": {...}}``.
``rep`` has a ``type`` and type-specific fields::

    ball             radius, center?
    ellipsoid        matrix, center?
    polytope         vertices
    support_sampled  values + grid_count, or sample_of (a rep) + grid_count?
    reuleaux         width, sides?, center?, rotation?        (n = 2)
    affine_image     matrix, translation?, body (a rep)
    lp_sum           p (number or "inf"), a?, b?, first (a rep), second (a rep)

``flags`` may assert ``contains_origin_interior`` and ``origin_symmetric``;
asserted flags are verified against the constructed body.  Unknown fields
anywhere are rejected.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from lpbm.geometry.bodies import (
    AffineImage,
    Ball,
    ConstantWidth2D,
    ConvexBody,
    Ellipsoid,
    Polytope,
    SupportSampled,
    lp_combine,
)
from lpbm.geometry.directions import default_directions


class SpecError(ValueError):
    """Malformed or inconsistent body specification."""


_FIELDS = {
    "ball": ({"radius"}, {"center"}),
    "ellipsoid": ({"matrix"}, {"center"}),
    "polytope": ({"vertices"}, set()),
    "support_sampled": (set(), {"values", "grid_count", "sample_of"}),
    "reuleaux": ({"width"}, {"sides", "center", "rotation"}),
    "affine_image": ({"matrix", "body"}, {"translation"}),
    "lp_sum": ({"p", "first", "second"}, {"a", "b"}),
}
_FLAGS = {"contains_origin_interior", "origin_symmetric"}


def _vec(x, n: int, what: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (n,) or not np.all(np.isfinite(v)):
        raise SpecError(f"{what} must be a finite vector of length {n}")
    return v


def _mat(x, shape, what: str) -> np.ndarray:
    try:
        A = np.asarray(x, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{what} must be numeric") from exc
    if A.ndim != 2 or (shape is not None and A.shape != shape) or not np.all(np.isfinite(A)):
        raise SpecError(f"{what} must be a finite matrix" + (f" of shape {shape}" if shape else ""))
    return A


def _num(x, what: str, positive: bool = False) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SpecError(f"{what} must be a number")
    v = float(x)
    if not math.isfinite(v) or (positive and v <= 0):
        raise SpecError(f"{what} must be {'positive and ' if positive else ''}finite")
    return v


def parse_rep(rep: dict, n: int) -> ConvexBody:
    if not isinstance(rep, dict) or "type" not in rep:
        raise SpecError("rep must be an object with a 'type'")
    kind = rep["type"]
    if kind not in _FIELDS:
        raise SpecError(f"unknown rep type {kind!r}")
    required, optional = _FIELDS[kind]
    keys = set(rep) - {"type"}
    if missing := required - keys:
        raise SpecError(f"{kind}: missing field(s) {sorted(missing)}")
    if unknown := keys - required - optional:
        raise SpecError(f"{kind}: unknown field(s) {sorted(unknown)}")
    center = _vec(rep["center"], n, "center") if "center" in rep else np.zeros(n)
    try:
        if kind == "ball":
            return Ball(_num(rep["radius"], "radius", True), center)
        if kind == "ellipsoid":
            return Ellipsoid(_mat(rep["matrix"], (n, n), "matrix"), center)
        if kind == "polytope":
            V = _mat(rep["vertices"], None, "vertices")
            if V.shape[1] != n:
                raise SpecError(f"vertices must have {n} columns")
            P = Polytope(V)
            _ = P.hull  # flat point sets are rejected here, not deep inside a check
            return P
        if kind == "support_sampled":
            return _support_sampled(rep, n)
        if kind == "reuleaux":
            if n != 2:
                raise SpecError("reuleaux bodies are planar")
            sides = rep.get("sides", 3)
            if isinstance(sides, bool) or not isinstance(sides, int):
                raise SpecError("sides must be an odd integer >= 3")
            return ConstantWidth2D(_num(rep["width"], "width", True), sides, tuple(center),
                                   _num(rep.get("rotation", 0.0), "rotation"))
        if kind == "affine_image":
            T = _mat(rep["matrix"], (n, n), "matrix")
            x = _vec(rep["translation"], n, "translation") if "translation" in rep else np.zeros(n)
            return AffineImage(T, x, parse_rep(rep["body"], n))
        # lp_sum
        p = rep["p"]
        p = math.inf if p == "inf" else _num(p, "p")
        a = _num(rep.get("a", 1.0), "a")
        b = _num(rep.get("b", 1.0), "b")
        return lp_combine(p, a, parse_rep(rep["first"], n), b, parse_rep(rep["second"], n))
    except SpecError:
        raise
    except (ValueError, TypeError) as exc:
        raise SpecError(f"{kind}: {exc}") from exc


def _support_sampled(rep: dict, n: int) -> SupportSampled:
    count = rep.get("grid_count")
    if count is not None and (isinstance(count, bool) or not isinstance(count, int)):
        raise SpecError("grid_count must be an integer")
    if ("values" in rep) == ("sample_of" in rep):
        raise SpecError("support_sampled needs exactly one of 'values' and 'sample_of'")
    try:
        G = default_directions(n, count)
    except ValueError as exc:
        raise SpecError(f"grid_count: {exc}") from exc
    if "values" in rep:
        v = np.asarray(rep["values"], dtype=float)
        if v.shape != (len(G),):
            raise SpecError(f"values must have one entry per grid direction ({len(G)})")
    else:
        v = parse_rep(rep["sample_of"], n).support(G.directions)
    return SupportSampled(G, v)


def parse_body(spec: dict) -> ConvexBody:
    if not isinstance(spec, dict):
        raise SpecError("a body specification must be a JSON object")
    if unknown := set(spec) - {"dim", "rep", "flags"}:
        raise SpecError(f"unknown top-level field(s) {sorted(unknown)}")
    if "dim" not in spec or "rep" not in spec:
        raise SpecError("'dim' and 'rep' are required")
    n = spec["dim"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 2:
        raise SpecError("dim must be an integer >= 2")
    K = parse_rep(spec["rep"], n)
    if K.dim != n:
        raise SpecError(f"rep has dimension {K.dim}, spec says {n}")
    flags = spec.get("flags", {})
    if not isinstance(flags, dict):
        raise SpecError("flags must be an object")
    if unknown := set(flags) - _FLAGS:
        raise SpecError(f"unknown flag(s) {sorted(unknown)}")
    for name, want in flags.items():
        if not isinstance(want, bool):
            raise SpecError(f"flag {name} must be true or false")
        if bool(getattr(K, name)) != want:
            raise SpecError(f"flag {name}={want} does not match the body")
    return K


def load_body(path: str | Path) -> ConvexBody:
    try:
        spec = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise SpecError(f"{path}: {exc}") from exc
    return parse_body(spec)
