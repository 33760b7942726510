"""JSON / CSV serialization and the console summary table.

Every JSON document carries ``schema_version``, the tool version and the
fully resolved run configuration. Undefined metrics are written as ``null``
in JSON and as empty cells in CSV, never as 0.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA_VERSION = 1

ZONE_COLUMNS = ["label", "kind", "r_i", "r_j", "area", "zp", "zp50", "zp75", "n_gt", "n_det"]


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, NaN to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return None if math.isnan(obj) else obj
    return obj


def document(mode: str, config: dict, results: dict) -> dict:
    return _clean({
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "zonemetrics", "version": __version__},
        "mode": mode,
        "config": config,
        "results": results,
    })


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def write_json(doc: dict, path) -> None:
    Path(path).write_text(dumps(doc))


def _cell(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_rows(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def zone_row(m) -> list:
    z = m.zone
    r_i = getattr(z, "r_inner", None)
    r_j = getattr(z, "r_outer", None)
    kind = z.to_dict()["kind"]
    return [z.label, kind, r_i, r_j, z.normalized_area, m.zp, m.zp50, m.zp75, m.n_gt, m.n_det]


def emit_heatmap_data(matrix, path=None) -> str:
    """Row-major numeric CSV (no header) for external plotting; empty cell = undefined."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in matrix:
        w.writerow([_cell(v) if not isinstance(v, (int, np.integer)) else str(int(v)) for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def _pct(v: float | None) -> str:
    return "-" if v is None else f"{100 * v:.1f}"


def summary_table(report) -> str:
    """Table in the familiar layout: SP, full-image ZP, variance, then one column per ring.

    Metrics are shown x100; the variance is of the x100 values.
    """
    heads = ["SP", f"ZP^{{0,{report.n}}}", "Variance"] + [f"ZP^{{{m.zone.label}}}" for m in report.zones]
    var = report.variance.get("zp")
    cells = [_pct(report.sp), _pct(report.traditional.zp), "-" if var is None else f"{1e4 * var:.1f}"]
    cells += [_pct(m.zp) for m in report.zones]
    rows = [heads, cells]
    sp75 = report.sp75
    var75 = report.variance.get("zp75")
    rows.append(
        [_pct(sp75), _pct(report.traditional.zp75), "-" if var75 is None else f"{1e4 * var75:.1f}"]
        + [_pct(m.zp75) for m in report.zones]
    )
    width = [max(len(r[k]) for r in rows) for k in range(len(heads))]
    labels = ["", "AP", "AP75"]
    lines = []
    for label, r in zip(labels, rows):
        lines.append(f"{label:<5}" + "  ".join(c.rjust(w) for c, w in zip(r, width)))
    return "\n".join(lines)
