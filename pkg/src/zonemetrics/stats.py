"""Pearson / Spearman correlation between zone metrics and object counts."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

__all__ = ["CorrelationCurve", "average_ranks", "pearson", "spearman", "zone_metric_correlation"]


@dataclass
class CorrelationCurve:
    iou_thresholds: list[float]
    pcc: list[float | None] = field(default_factory=list)
    scc: list[float | None] = field(default_factory=list)
    n_points: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iou_thresholds": list(self.iou_thresholds),
            "pcc": list(self.pcc),
            "scc": list(self.scc),
            "n_points": list(self.n_points),
        }


def _pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise InputError(f"vectors must be 1-D and of equal length, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise InputError("correlation needs at least two points")
    return x, y


def pearson(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Product-moment correlation; ``None`` if either vector is constant."""
    x, y = _pair(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return None
    # separate square roots: sxx * syy underflows for tiny-magnitude inputs
    r = float(dx @ dy) / (np.sqrt(sxx) * np.sqrt(syy))
    return float(min(1.0, max(-1.0, r)))


def average_ranks(x: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they span."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x), dtype=float)
    sx = x[order]
    start = 0
    while start < len(x):
        stop = start + 1
        while stop < len(x) and sx[stop] == sx[start]:
            stop += 1
        ranks[order[start:stop]] = (start + stop + 1) / 2.0
        start = stop
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float | None:
    x, y = _pair(x, y)
    return pearson(average_ranks(x), average_ranks(y))


def zone_metric_correlation(grid_report, counts, iou_thresholds: Sequence[float]) -> CorrelationCurve:
    """Correlate per-cell mZP with per-cell object counts at each IoU threshold.

    ``grid_report`` is a rows x cols nested list of ``ZoneMetrics`` and
    ``counts`` a matching rows x cols array (or flat, row-major). Cells whose
    mZP is undefined are dropped pairwise.
    """
    if not iou_thresholds:
        raise InputError("no IoU thresholds given")
    cells = [m for row in grid_report for m in row]
    counts = np.asarray(counts, dtype=float)
    shape = (len(grid_report), len(grid_report[0]) if grid_report else 0)
    if counts.ndim == 2 and counts.shape != shape:
        raise InputError(f"grid is {shape[0]}x{shape[1]} but counts are {counts.shape[0]}x{counts.shape[1]}")
    counts = counts.ravel()
    if len(counts) != len(cells) or any(len(row) != shape[1] for row in grid_report):
        raise InputError(f"grid has {len(cells)} cells but {len(counts)} counts were given")

    curve = CorrelationCurve(iou_thresholds=[float(t) for t in iou_thresholds])
    for thr in curve.iou_thresholds:
        xs, ys = [], []
        for m, c in zip(cells, counts):
            value = _mzp_at(m, thr)
            if value is not None:
                xs.append(value)
                ys.append(c)
        curve.n_points.append(len(xs))
        if len(xs) < 2:
            curve.pcc.append(None)
            curve.scc.append(None)
        else:
            curve.pcc.append(pearson(xs, ys))
            curve.scc.append(spearman(xs, ys))
    return curve


def _mzp_at(metrics, thr):
    for t, v in metrics.mzp.items():
        if abs(t - thr) < 1e-9:
            return v
    raise InputError(f"IoU threshold {thr} was not evaluated on this grid")
