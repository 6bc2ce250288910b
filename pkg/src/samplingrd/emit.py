"""CSV and JSON emission of computed curves."""

from __future__ import annotations

import csv
import hashlib
import io
import json

import numpy as np

from . import __version__

HEADER = ("delta", "rate", "lambda", "witness")


def fmt(x):
    """Nine significant digits; negative zero printed as zero."""
    return f"{float(x) + 0.0:.9g}"


def _witness(curve, delta):
    mix = [(w, t) for w, t in curve.mix_at(delta) if t > 0]
    if len(mix) == 1:
        return str(mix[0][0])
    return "+".join(f"{w}*{fmt(t)}" for w, t in mix)


def curve_rows(result, n=None):
    """(delta, rate, lambda, witness) on a uniform grid over the result's range.

    ``lambda`` is the magnitude of the curve's slope at ``delta`` (the
    Lagrangian slope supporting it); ``witness`` is a registry id, or
    ``id*weight+id*weight`` where two witnesses are time-shared.
    """
    curve = result.curve
    lo, hi = result.delta_range.delta_min, result.delta_range.delta_max
    n = n or 201
    grid = np.linspace(lo, hi, n) if hi > lo else np.array([lo])
    rows = []
    for delta in grid:
        at = max(float(delta), curve.delta_min)
        rate = max(curve(at), 0.0)
        lam = -curve.slope_at(at)
        rows.append((fmt(delta), fmt(rate), fmt(lam), _witness(curve, at)))
    return rows


def to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    writer.writerows(rows)
    return buf.getvalue()


def to_json(result, rows, metadata):
    doc = {
        "label": result.label,
        "columns": list(HEADER),
        "rows": [[float(d), float(r), float(lam), w] for d, r, lam, w in rows],
        "delta_range": [result.delta_range.delta_min, result.delta_range.delta_max],
        "convex": result.convex,
        "metadata": dict(metadata, version=__version__),
    }
    return json.dumps(doc, indent=2) + "\n"


def spec_hash(text):
    return hashlib.sha256(text.encode()).hexdigest()


def file_stem(label):
    """'R_{1,2}' -> 'R_1_2', 'R_m^U raw bound' -> 'R_m_U_raw_bound'."""
    out = "".join(ch if ch.isalnum() else "_" for ch in label)
    while "__" in out:
        out = out.replace("__", "_")
    return out.strip("_")
