"""JSON reports and their CSV view.

Reports are plain dicts serialized with sorted keys.  Non-finite floats
become the strings ``"inf"``, ``"-inf"`` and ``"nan"``, complex arrays become
nested ``[re, im]`` pairs, and ``-0.0`` is written as ``0.0``, so equal
computations give equal bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math

import numpy as np

SCHEMA = 1
RESIDUAL_LIMIT = 1e-6


def clean(obj):
    """Convert ``obj`` into JSON-safe builtins."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return clean(np.stack([obj.real, obj.imag], axis=-1).tolist())
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x + 0.0
    if isinstance(obj, complex):
        return [clean(obj.real), clean(obj.imag)]
    return obj


def dumps(report: dict) -> str:
    return json.dumps(clean(report), sort_keys=True, indent=2) + "\n"


def inputs_digest(texts) -> str:
    """SHA-256 over the canonical input files, in order."""
    h = hashlib.sha256()
    for t in texts:
        b = t.encode()
        h.update(len(b).to_bytes(8, "big"))
        h.update(b)
    return h.hexdigest()


def make_report(command: str, inputs: list, texts: list, rows: list, passed: bool = True, **extra) -> dict:
    rep = {"schema": SCHEMA, "command": command,
           "inputs": {"files": list(inputs), "digest": inputs_digest(texts)}, "rows": rows, "pass": bool(passed)}
    rep.update(extra)
    return rep


def certificate_residual(result) -> float:
    """Largest constraint violation or optimality gap recorded on a measure result."""
    r = result.residuals
    worst = 0.0
    for key in ("X-rho", "X^G", "sigma", "sigma^G"):
        if key in r:
            worst = max(worst, -float(r[key]))
    if "gap" in r:
        worst = max(worst, abs(float(r["gap"])))
    return worst


def _flatten(row: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in row.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            out[key] = json.dumps(v, sort_keys=True)
        else:
            out[key] = "" if v is None else v
    return out


def to_csv(report: dict) -> str:
    """CSV of ``rows`` (or of ``suites`` when there are no rows).

    Built from the serialized JSON, so the column order is the sorted key order.
    """
    data = json.loads(dumps(report))
    rows = data.get("rows") or data.get("suites") or []
    flat = [_flatten(r) for r in rows]
    cols = []
    for r in flat:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in flat:
        w.writerow(r)
    return buf.getvalue()
