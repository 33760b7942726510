"""Greedy COCO-style matching and 101-point interpolated Average Precision.

Zone restriction happens before matching: ground truths and detections are
kept only when their box centers fall inside the zone, and the usual COCO
procedure runs on what is left. A detection whose ground truth sits in a
different zone is therefore a false positive in its own zone.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .dataset import Detection, DetectionDataset, DetectionSet, GtObject
from .errors import ContractError, InputError
from .geometry import Zone, iou_matrix, zone_mask

__all__ = [
    "COCO_IOUS",
    "RECALL_GRID",
    "MatchRecord",
    "PrCurve",
    "ZoneEvaluator",
    "ZoneMetrics",
    "average_precision",
    "evaluate_zone",
    "iou_grid",
    "match_detections",
]

RECALL_GRID = np.arange(101) / 100


def iou_grid(start: float, step: float, stop: float) -> tuple[float, ...]:
    count = round((stop - start) / step) + 1
    return tuple(round(start + k * step, 10) for k in range(count))


COCO_IOUS = iou_grid(0.5, 0.05, 0.95)


@dataclass(frozen=True)
class MatchRecord:
    det_index: int
    score: float
    matched: bool
    matched_gt: int | None = None
    ignored: bool = False

    def __post_init__(self):
        if self.matched and self.ignored:
            raise ContractError("a detection cannot be both matched and ignored")


@dataclass(frozen=True)
class PrCurve:
    recall: np.ndarray
    precision: np.ndarray
    ap: float


@dataclass
class ZoneMetrics:
    zone: Zone
    zp: float | None
    zp50: float | None
    zp75: float | None
    mzp: dict[float, float | None]
    n_gt: int
    n_det: int
    ap_by_category: dict[int, dict[float, float]] = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "zone": self.zone.to_dict(),
            "label": self.zone.label,
            "zp": self.zp,
            "zp50": self.zp50,
            "zp75": self.zp75,
            "mzp": {f"{t:g}": v for t, v in self.mzp.items()},
            "n_gt": self.n_gt,
            "n_det": self.n_det,
        }


def _greedy(ious: np.ndarray, crowd: np.ndarray, thr: float):
    """Match rows (score-sorted detections) to columns (ground truths).

    Returns ``(gt_index or -1, ignored)`` per detection. Non-crowd columns are
    consumed once; crowd columns absorb any number of detections.
    """
    n_det, n_gt = ious.shape
    match = np.full(n_det, -1, dtype=int)
    ignored = np.zeros(n_det, dtype=bool)
    if n_gt == 0:
        return match, ignored
    free = ~crowd
    for d in range(n_det):
        row = ious[d]
        cand = free & (row >= thr)
        if cand.any():
            g = int(np.argmax(np.where(cand, row, -1.0)))
            free[g] = False
            match[d] = g
        elif crowd.any() and (crowd & (row >= thr)).any():
            ignored[d] = True
    return match, ignored


def match_detections(dets: Sequence[Detection], gts: Sequence[GtObject], iou_thr: float) -> list[MatchRecord]:
    scores = [d.score for d in dets]
    if any(a < b for a, b in itertools.pairwise(scores)):
        raise ContractError("detections must be sorted by descending score")
    crowd = np.array([g.is_crowd for g in gts], dtype=bool)
    ious = iou_matrix([d.bbox.as_list() for d in dets], [g.bbox.as_list() for g in gts], crowd)
    match, ignored = _greedy(ious, crowd, iou_thr)
    return [
        MatchRecord(
            det_index=k,
            score=d.score,
            matched=bool(match[k] >= 0),
            matched_gt=gts[match[k]].id if match[k] >= 0 else None,
            ignored=bool(ignored[k]),
        )
        for k, d in enumerate(dets)
    ]


def _curve(scores, tp, ignored, n_gt) -> PrCurve | None:
    if n_gt < 0:
        raise InputError(f"positive count must be >= 0, got {n_gt}")
    if n_gt == 0:
        return None
    scores = np.asarray(scores, dtype=float)
    if np.any(np.diff(scores) > 0):
        raise ContractError("match records must be sorted by descending score")
    keep = ~np.asarray(ignored, dtype=bool)
    tp = np.asarray(tp, dtype=bool)[keep]
    tp_sum = np.cumsum(tp)
    fp_sum = np.cumsum(~tp)
    recall = tp_sum / n_gt
    precision = tp_sum / np.maximum(tp_sum + fp_sum, 1)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_GRID, side="left")
    q = np.zeros(len(RECALL_GRID))
    hit = idx < len(envelope)
    q[hit] = envelope[idx[hit]]
    return PrCurve(recall=RECALL_GRID.copy(), precision=q, ap=float(q.mean()))


def average_precision(matches: Sequence[MatchRecord], n_gt: int) -> PrCurve | None:
    """PR curve for one category; ``None`` when there is no positive to recall."""
    return _curve(
        [m.score for m in matches], [m.matched for m in matches], [m.ignored for m in matches], n_gt
    )


@dataclass
class _Group:
    W: float
    H: float
    gt_ids: np.ndarray
    gt_centers: np.ndarray
    crowd: np.ndarray
    det_centers: np.ndarray
    scores: np.ndarray
    ious: np.ndarray


class ZoneEvaluator:
    """Precomputes per ``(image, category)`` IoUs once, then evaluates any number of zones."""

    def __init__(self, ds: DetectionDataset, dets: DetectionSet, iou_set: Sequence[float] = COCO_IOUS,
                 max_dets: int = 100):
        iou_set = tuple(float(t) for t in iou_set)
        if not iou_set:
            raise InputError("IoU threshold set is empty")
        if any(not (0.0 < t < 1.0) for t in iou_set):
            raise InputError(f"IoU thresholds must lie in (0, 1), got {iou_set}")
        if max_dets < 1:
            raise InputError(f"max_dets must be >= 1, got {max_dets}")
        self.iou_set = iou_set
        self.max_dets = max_dets
        self.categories = ds.category_ids
        self.groups: dict[tuple[int, int], _Group] = {}
        gts = ds.gts_by_group()
        for key in sorted(set(gts) | set(dets.keys())):
            im = ds.image(key[0])
            g_list = gts.get(key, [])
            d_list = dets.group(*key)
            crowd = np.array([g.is_crowd for g in g_list], dtype=bool)
            g_boxes = np.array([g.bbox.as_list() for g in g_list], dtype=float).reshape(-1, 4)
            d_boxes = np.array([d.bbox.as_list() for d in d_list], dtype=float).reshape(-1, 4)
            d_centers = d_boxes[:, :2] + d_boxes[:, 2:] / 2
            # detections may spill outside the image; membership uses the clipped center
            d_centers = np.clip(d_centers, 0, [im.width, im.height])
            self.groups[key] = _Group(
                W=im.width,
                H=im.height,
                gt_ids=np.array([g.id for g in g_list]),
                gt_centers=g_boxes[:, :2] + g_boxes[:, 2:] / 2,
                crowd=crowd,
                det_centers=d_centers,
                scores=np.array([d.score for d in d_list], dtype=float),
                ious=iou_matrix(d_boxes, g_boxes, crowd),
            )

    def evaluate(self, zone: Zone) -> ZoneMetrics:
        n_t = len(self.iou_set)
        # per category: lists of per-image (scores, tp[T, D], ignored[T, D])
        pooled: dict[int, list] = {c: [] for c in self.categories}
        n_pos = dict.fromkeys(self.categories, 0)
        n_gt_total = n_det_total = 0
        for (image_id, cat), g in self.groups.items():
            gm = zone_mask(zone, g.gt_centers[:, 0], g.gt_centers[:, 1], g.W, g.H)
            dm = np.flatnonzero(zone_mask(zone, g.det_centers[:, 0], g.det_centers[:, 1], g.W, g.H))
            dm = dm[: self.max_dets]
            crowd = g.crowd[gm]
            positives = int((~crowd).sum())
            n_pos[cat] += positives
            n_gt_total += positives
            n_det_total += len(dm)
            if len(dm) == 0:
                continue
            ious = g.ious[np.ix_(dm, np.flatnonzero(gm))]
            tp = np.zeros((n_t, len(dm)), dtype=bool)
            ign = np.zeros((n_t, len(dm)), dtype=bool)
            for t, thr in enumerate(self.iou_set):
                match, ignored = _greedy(ious, crowd, thr)
                tp[t] = match >= 0
                ign[t] = ignored
            pooled[cat].append((g.scores[dm], tp, ign))

        ap_by_category: dict[int, dict[float, float]] = {}
        for cat in self.categories:
            if n_pos[cat] == 0:
                continue
            parts = pooled[cat]
            if parts:
                scores = np.concatenate([p[0] for p in parts])
                tp = np.concatenate([p[1] for p in parts], axis=1)
                ign = np.concatenate([p[2] for p in parts], axis=1)
                order = np.argsort(-scores, kind="mergesort")
                scores, tp, ign = scores[order], tp[:, order], ign[:, order]
            else:
                scores = np.zeros(0)
                tp = ign = np.zeros((n_t, 0), dtype=bool)
            ap_by_category[cat] = {
                thr: _curve(scores, tp[t], ign[t], n_pos[cat]).ap for t, thr in enumerate(self.iou_set)
            }

        mzp: dict[float, float | None] = {}
        for thr in self.iou_set:
            vals = [aps[thr] for aps in ap_by_category.values()]
            mzp[thr] = float(np.mean(vals)) if vals else None
        defined = [v for v in mzp.values() if v is not None]
        zp = float(np.mean(defined)) if defined else None
        return ZoneMetrics(
            zone=zone,
            zp=zp,
            zp50=_lookup(mzp, 0.5),
            zp75=_lookup(mzp, 0.75),
            mzp=mzp,
            n_gt=n_gt_total,
            n_det=n_det_total,
            ap_by_category=ap_by_category,
        )


def _lookup(mzp, thr):
    for t, v in mzp.items():
        if abs(t - thr) < 1e-9:
            return v
    return None


def evaluate_zone(ds: DetectionDataset, dets: DetectionSet, z: Zone, iou_set: Sequence[float] = COCO_IOUS,
                  max_dets: int = 100) -> ZoneMetrics:
    return ZoneEvaluator(ds, dets, iou_set, max_dets).evaluate(z)
