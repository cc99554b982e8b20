"""Versioned, deterministic JSON reports and their flattened CSV view."""

from __future__ import annotations

import csv
import io
import json
import math

SCHEMA = "lpbm.report"
VERSION = 1


def _clean(x):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def build_report(config: dict, records: list, curves: list, extras: list) -> dict:
    verdicts = [r["verdict"] for r in records] + [e["verdict"] for e in extras if "verdict" in e]
    summary = {
        "records": len(records),
        "curves": len(curves),
        "violated": verdicts.count("violated"),
        "holds": verdicts.count("holds"),
        "holds_within_noise": verdicts.count("holds_within_noise"),
        "inconclusive": verdicts.count("inconclusive"),
        "equality_failures": sum(1 for r in records if r["equality_expected"] and not r["equality_ok"]),
    }
    return _clean({
        "schema": SCHEMA,
        "version": VERSION,
        "config": config,
        "summary": summary,
        "records": records,
        "curves": curves,
        "extras": extras,
    })


def to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


RECORD_COLUMNS = ["kind", "check", "functional", "p", "alpha", "lhs", "lhs_stderr", "rhs",
                  "rhs_stderr", "slack", "stderr", "band", "verdict", "equality_expected",
                  "equality_ok", "strict"]


def to_csv(report: dict) -> str:
    """Slack records and curve points as one table (JSON stays the source of truth)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in report["records"]:
        w.writerow(["slack", r["check"], r["functional"], r["p"], r["alpha"],
                    repr(r["lhs"]["value"]), repr(r["lhs"]["stderr"]),
                    repr(r["rhs"]["value"]), repr(r["rhs"]["stderr"]),
                    repr(r["slack"]), repr(r["stderr"]), repr(r["band"]), r["verdict"],
                    r["equality_expected"], r["equality_ok"], r["strict"]])
    for c in report["curves"]:
        for a, v, s in zip(c["alpha"], c["value"], c["stderr"]):
            w.writerow(["curve", c.get("check", ""), c["functional"], c["p"], repr(a),
                        repr(v), repr(s), "", "", "", "", "", "", "", "", ""])
    return buf.getvalue()


def curve_csv(curve: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "value", "stderr"])
    for a, v, s in zip(curve["alpha"], curve["value"], curve["stderr"]):
        w.writerow([repr(a), repr(v), repr(s)])
    return buf.getvalue()
