"""JSON wire formats for matrices and measurement counts."""

from __future__ import annotations

import json

import numpy as np

from .errors import DimensionError
from .tomography import MeasurementRecord


def matrix_to_json(M):
    """``{"rows": n, "cols": m, "data": [[re, im], ...]}`` in row-major order."""
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    flat = M.reshape(-1)
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_json(obj):
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if len(data) != rows * cols:
        raise DimensionError(f"matrix JSON declares {rows}x{cols} but has {len(data)} entries")
    arr = np.array([complex(re, im) for re, im in data]).reshape(rows, cols)
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix JSON contains non-finite entries")
    return arr


def load_matrix(path):
    with open(path) as fh:
        return matrix_from_json(json.load(fh))


def counts_to_json(records, dt, omega):
    return {"dt": dt, "omega": omega, "records": [r.to_dict() for r in records]}


def counts_from_json(obj):
    try:
        records = [MeasurementRecord.from_dict(r) for r in obj["records"]]
        return records, float(obj["dt"]), float(obj.get("omega", 1.0))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed counts JSON: {exc}") from exc
