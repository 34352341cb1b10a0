"""Result files: CSV tables at 17 significant digits and a JSON report.

JSON floats use Python's shortest round-trip representation, which carries
the same information as 17 significant digits.  Reports never contain wall
clock times, so equal inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .. import __version__
from ..observables import format_float


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    return obj


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(jsonable(data), indent=2, sort_keys=True) + "\n")


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else format_float(v) for v in row])


def report_header(cfg, family) -> dict:
    return {"version": f"cnvmoran {__version__}", "config": cfg.resolved(),
            "moment_params": family.moment_params.as_dict() if family is not None else None,
            "family_metadata": dict(family.metadata) if family is not None else None}


def output_dir(cfg) -> Path:
    path = Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path
