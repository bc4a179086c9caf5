"""Report and histogram emission.

Reports are JSON documents that echo their full configuration and seeds, so
any claim in them can be recomputed by re-running the echoed config.
Histograms are plain CSV (`bin_left,bin_right,count`) for plotting elsewhere.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

REPORT_FORMAT_VERSION = 1


def emit_histogram(samples, bins: int, path) -> str:
    """Equal-width histogram CSV over [min, max]; an all-equal sample widens
    the range by +/-0.5 so the single occupied bin keeps a positive width."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    values = np.asarray(getattr(samples, "values", samples), dtype=np.float64)
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo -= 0.5
        hi += 0.5
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "count"])
        for i, c in enumerate(counts):
            writer.writerow([repr(float(edges[i])), repr(float(edges[i + 1])), int(c)])
    assert int(counts.sum()) == values.size
    return str(path)


def emit_trace(trace, path) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "log_penalty"])
        for i, v in enumerate(trace):
            writer.writerow([i + 1, repr(float(v))])
    return str(path)


def write_report(report: dict, out_dir, name: str = "report.json") -> str:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, default=_jsonable)
    return str(path)


def read_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
