"""Label-assignment simulator over synthetic anchor grids.

Implements max-IoU assignment, ATSS, and the spatially relaxed ATSS variant
where an anchor is positive for a ground truth when

    IoU(anchor, gt) >= t - gamma * alpha(anchor center)

with ``t`` the per-object ATSS threshold (mean + population std of the
candidate IoUs) and ``alpha`` the spatial weight from :mod:`geometry`. The
cost-sensitive variant keeps ATSS labels and weights each positive by
``1 + gamma * alpha``. Nothing here trains a model; the outputs are labels
and sampling statistics.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputError, SchemaError
from .geometry import (
    LEFT_HALF,
    RIGHT_HALF,
    BBox,
    Point,
    Zone,
    check_partition,
    iou_matrix,
    spatial_weight,
    spatial_weight_array,
    zone_mask,
)

NEGATIVE = -1
IGNORE = -2

DEFAULT_STRIDES = (8, 16, 32, 64, 128)


@dataclass(frozen=True)
class AnchorLevel:
    stride: float
    scale: float
    centers: np.ndarray  # (N, 2)

    @property
    def size(self) -> float:
        return self.stride * self.scale

    @property
    def boxes(self) -> np.ndarray:
        half = self.size / 2
        return np.column_stack(
            [self.centers[:, 0] - half, self.centers[:, 1] - half,
             np.full(len(self.centers), self.size), np.full(len(self.centers), self.size)]
        )


@dataclass(frozen=True)
class AnchorGrid:
    width: float
    height: float
    levels: tuple[AnchorLevel, ...]

    @classmethod
    def build(cls, width, height, strides=DEFAULT_STRIDES, scale=8.0, center_offset=0.5) -> AnchorGrid:
        """One square anchor of side ``stride * scale`` per location and level.

        Centers sit at ``(k + center_offset) * stride`` and are kept only if
        they fall inside the image.
        """
        if width <= 0 or height <= 0:
            raise InputError(f"image size must be positive, got {width}x{height}")
        if not strides:
            raise InputError("anchor grid needs at least one stride")
        levels = []
        for s in strides:
            xs = (np.arange(int(np.ceil(width / s)) + 1) + center_offset) * s
            ys = (np.arange(int(np.ceil(height / s)) + 1) + center_offset) * s
            xs, ys = xs[xs <= width], ys[ys <= height]
            gx, gy = np.meshgrid(xs, ys)
            levels.append(AnchorLevel(float(s), float(scale), np.column_stack([gx.ravel(), gy.ravel()])))
        return cls(float(width), float(height), tuple(levels))

    @property
    def centers(self) -> np.ndarray:
        return np.concatenate([lv.centers for lv in self.levels])

    @property
    def boxes(self) -> np.ndarray:
        return np.concatenate([lv.boxes for lv in self.levels])

    @property
    def level_slices(self) -> list[slice]:
        out, start = [], 0
        for lv in self.levels:
            out.append(slice(start, start + len(lv.centers)))
            start += len(lv.centers)
        return out

    def __len__(self) -> int:
        return sum(len(lv.centers) for lv in self.levels)


@dataclass(frozen=True)
class MaxIoU:
    pos_thr: float = 0.5
    neg_thr: float = 0.4
    low_quality: bool = True


@dataclass(frozen=True)
class ATSS:
    top_k: int = 9


@dataclass(frozen=True)
class SelaFreq:
    top_k: int = 9
    gamma: float = 0.2


@dataclass(frozen=True)
class SelaCost:
    top_k: int = 9
    gamma: float = 0.2


Strategy = MaxIoU | ATSS | SelaFreq | SelaCost


@dataclass(frozen=True)
class ZoneFilter:
    """Sampling manipulation for ground truths centered in ``region``.

    ``discard`` drops those objects entirely; ``keep1`` keeps only their
    single highest-IoU positive anchor.
    """

    region: Zone = LEFT_HALF
    mode: str = "discard"

    def __post_init__(self):
        if self.mode not in ("discard", "keep1"):
            raise ConfigError(f"zone filter mode must be 'discard' or 'keep1', got {self.mode!r}")


@dataclass(frozen=True)
class AssignConfig:
    strategy: Strategy = field(default_factory=ATSS)
    zone_filter: ZoneFilter | None = None

    def __post_init__(self):
        _validate(self.strategy)


def _validate(strategy):
    if isinstance(strategy, MaxIoU):
        if not (0 < strategy.neg_thr < 1 and 0 < strategy.pos_thr < 1):
            raise ConfigError("max-IoU thresholds must lie in (0, 1)")
        if strategy.pos_thr < strategy.neg_thr:
            raise ConfigError(f"pos_thr {strategy.pos_thr} is below neg_thr {strategy.neg_thr}")
        return
    if strategy.top_k < 1:
        raise ConfigError(f"top_k must be >= 1, got {strategy.top_k}")
    if getattr(strategy, "gamma", 0.0) < 0:
        raise ConfigError(f"gamma must be >= 0, got {strategy.gamma}")


@dataclass
class AssignmentResult:
    width: float
    height: float
    labels: np.ndarray  # per anchor: gt index, NEGATIVE or IGNORE
    pos_count: np.ndarray  # per gt
    thresholds: np.ndarray  # per gt ATSS threshold; nan where not applicable
    loss_weights: np.ndarray  # per anchor; 1 except cost-sensitive positives
    discarded: np.ndarray  # per gt

    def positives(self, gt_index: int) -> np.ndarray:
        return np.flatnonzero(self.labels == gt_index)

    @property
    def num_positive(self) -> int:
        return int((self.labels >= 0).sum())


def _gt_array(gts: Sequence[BBox]) -> np.ndarray:
    return np.array([g.as_list() for g in gts], dtype=float).reshape(-1, 4)


def atss_threshold(candidate_ious) -> float:
    """Mean plus population standard deviation of the candidate IoUs."""
    v = np.asarray(candidate_ious, dtype=float)
    if v.size == 0:
        raise InputError("ATSS threshold needs at least one candidate")
    return float(v.mean() + v.std())


def _candidates(grid: AnchorGrid, gt: np.ndarray, top_k: int) -> np.ndarray:
    centers = grid.centers
    gc = gt[:2] + gt[2:] / 2
    dist = np.hypot(centers[:, 0] - gc[0], centers[:, 1] - gc[1])
    picks = []
    for sl in grid.level_slices:
        order = np.argsort(dist[sl], kind="stable")[:top_k]
        picks.append(order + sl.start)
    return np.concatenate(picks)


def _inside(centers: np.ndarray, gt: np.ndarray) -> np.ndarray:
    x, y, w, h = gt
    return (centers[:, 0] > x) & (centers[:, 0] < x + w) & (centers[:, 1] > y) & (centers[:, 1] < y + h)


def _adaptive_assign(grid: AnchorGrid, gts: np.ndarray, top_k: int, gamma: float | None):
    """ATSS when ``gamma`` is None, otherwise the relaxed per-anchor test."""
    if len(grid) == 0:
        raise InputError("anchor grid is empty")
    n_anchor, n_gt = len(grid), len(gts)
    centers = grid.centers
    ious = iou_matrix(grid.boxes, gts)
    alpha = spatial_weight_array(centers[:, 0], centers[:, 1], grid.width, grid.height)
    thresholds = np.full(n_gt, np.nan)
    claim = np.full((n_anchor, n_gt), -np.inf)
    for g in range(n_gt):
        cand = _candidates(grid, gts[g], top_k)
        cand_iou = ious[cand, g]
        t = atss_threshold(cand_iou)
        thresholds[g] = t
        if gamma is None:
            passed = cand_iou >= t
        else:
            passed = cand_iou >= t - gamma * alpha[cand]
        pos = cand[passed & _inside(centers[cand], gts[g])]
        claim[pos, g] = ious[pos, g]
    labels = np.full(n_anchor, NEGATIVE, dtype=int)
    if n_gt:
        best = np.argmax(claim, axis=1)  # first maximum: ties go to the earlier gt
        claimed = np.isfinite(claim[np.arange(n_anchor), best])
        labels[claimed] = best[claimed]
    return labels, thresholds, ious


def _max_iou(grid: AnchorGrid, gts: np.ndarray, cfg: MaxIoU):
    n_anchor, n_gt = len(grid), len(gts)
    labels = np.full(n_anchor, NEGATIVE, dtype=int)
    ious = iou_matrix(grid.boxes, gts)
    if n_gt == 0:
        return labels, np.full(0, np.nan), ious
    best = np.argmax(ious, axis=1)
    best_iou = ious[np.arange(n_anchor), best]
    labels[best_iou >= cfg.pos_thr] = best[best_iou >= cfg.pos_thr]
    labels[(best_iou >= cfg.neg_thr) & (best_iou < cfg.pos_thr)] = IGNORE
    if cfg.low_quality:
        for g in range(n_gt):
            a = int(np.argmax(ious[:, g]))
            if ious[a, g] > 0:
                labels[a] = g
    return labels, np.full(n_gt, np.nan), ious


def assign(grid: AnchorGrid, gts: Sequence[BBox], config: AssignConfig) -> AssignmentResult:
    """Run one strategy on one image, applying the optional zone filter."""
    gt_arr = _gt_array(gts)
    n_gt = len(gt_arr)
    discarded = np.zeros(n_gt, dtype=bool)
    filtered = np.zeros(n_gt, dtype=bool)
    zf = config.zone_filter
    if zf is not None and n_gt:
        gc = gt_arr[:, :2] + gt_arr[:, 2:] / 2
        filtered = zone_mask(zf.region, gc[:, 0], gc[:, 1], grid.width, grid.height)
        if zf.mode == "discard":
            discarded = filtered
    kept = np.flatnonzero(~discarded)

    strategy = config.strategy
    if isinstance(strategy, MaxIoU):
        sub_labels, sub_t, sub_ious = _max_iou(grid, gt_arr[kept], strategy)
    elif isinstance(strategy, SelaFreq):
        sub_labels, sub_t, sub_ious = _adaptive_assign(grid, gt_arr[kept], strategy.top_k, strategy.gamma)
    else:
        sub_labels, sub_t, sub_ious = _adaptive_assign(grid, gt_arr[kept], strategy.top_k, None)

    labels = np.where(sub_labels >= 0, kept[np.clip(sub_labels, 0, None)] if len(kept) else NEGATIVE, sub_labels)
    thresholds = np.full(n_gt, np.nan)
    thresholds[kept] = sub_t

    if zf is not None and zf.mode == "keep1":
        for sub_g, g in enumerate(kept):
            if not filtered[g]:
                continue
            pos = np.flatnonzero(labels == g)
            if len(pos) > 1:
                keep = pos[np.argmax(sub_ious[pos, sub_g])]
                labels[pos[pos != keep]] = NEGATIVE

    weights = np.ones(len(grid))
    if isinstance(strategy, SelaCost):
        centers = grid.centers
        alpha = spatial_weight_array(centers[:, 0], centers[:, 1], grid.width, grid.height)
        pos = labels >= 0
        weights[pos] = 1.0 + strategy.gamma * alpha[pos]

    pos_count = np.bincount(labels[labels >= 0], minlength=n_gt) if n_gt else np.zeros(0, dtype=int)
    return AssignmentResult(grid.width, grid.height, labels, pos_count, thresholds, weights, discarded)


def max_iou_assign(grid, gts, pos_thr=0.5, neg_thr=0.4, low_quality=True, zone_filter=None) -> AssignmentResult:
    return assign(grid, gts, AssignConfig(MaxIoU(pos_thr, neg_thr, low_quality), zone_filter))


def atss_assign(grid, gts, top_k=9, zone_filter=None) -> AssignmentResult:
    return assign(grid, gts, AssignConfig(ATSS(top_k), zone_filter))


def sela_assign(grid, gts, top_k=9, gamma=0.2, zone_filter=None) -> AssignmentResult:
    return assign(grid, gts, AssignConfig(SelaFreq(top_k, gamma), zone_filter))


def sela_loss_weight(p: Point, W: float, H: float, gamma: float) -> float:
    if gamma < 0:
        raise ConfigError(f"gamma must be >= 0, got {gamma}")
    return 1.0 + gamma * spatial_weight(p, W, H)


@dataclass
class ZoneSampling:
    zone: Zone
    n_gt: int = 0
    positives: int = 0

    @property
    def mean_positives(self) -> float | None:
        return self.positives / self.n_gt if self.n_gt else None

    def to_dict(self) -> dict:
        return {"zone": self.zone.to_dict(), "label": self.zone.label, "n_gt": self.n_gt,
                "positives": self.positives, "mean_positives": self.mean_positives}


def assignment_zone_stats(result: AssignmentResult, gts: Sequence[BBox], zones: Sequence[Zone],
                          into: list[ZoneSampling] | None = None) -> list[ZoneSampling]:
    """Per-zone GT counts (by center) and positive totals.

    Pass ``into`` to accumulate over several images.
    """
    check_partition(zones)
    stats = into if into is not None else [ZoneSampling(z) for z in zones]
    gt_arr = _gt_array(gts)
    if len(gt_arr) != len(result.pos_count):
        raise InputError(f"result covers {len(result.pos_count)} ground truths, got {len(gt_arr)}")
    gc = gt_arr[:, :2] + gt_arr[:, 2:] / 2
    for s, z in zip(stats, zones):
        m = zone_mask(z, gc[:, 0], gc[:, 1], result.width, result.height)
        s.n_gt += int(m.sum())
        s.positives += int(result.pos_count[m].sum())
    return stats


@dataclass
class Scene:
    width: float
    height: float
    gts: list[BBox]
    grid: AnchorGrid


def parse_scene(doc: dict, source: str = "<memory>") -> Scene:
    try:
        W, H = float(doc["width"]), float(doc["height"])
        gts = [BBox(*map(float, b)) for b in doc["gts"]]
    except KeyError as e:
        raise SchemaError(f"{source}: missing required key {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        raise SchemaError(f"{source}: {e}") from None
    spec = doc.get("anchors", {})
    grid = AnchorGrid.build(
        W, H,
        strides=tuple(spec.get("strides", DEFAULT_STRIDES)),
        scale=float(spec.get("scale", 8.0)),
        center_offset=float(spec.get("center_offset", 0.5)),
    )
    return Scene(W, H, gts, grid)


def load_scene(path) -> Scene:
    from .dataset import _read_json

    return parse_scene(_read_json(path), str(path))


def scene_to_dict(scene: Scene, strides=DEFAULT_STRIDES, scale=8.0, center_offset=0.5) -> dict:
    return {
        "width": scene.width,
        "height": scene.height,
        "gts": [g.as_list() for g in scene.gts],
        "anchors": {"strides": list(strides), "scale": scale, "center_offset": center_offset},
    }


def region_from_name(name: str) -> Zone:
    regions = {"left": LEFT_HALF, "right": RIGHT_HALF}
    if name not in regions:
        raise ConfigError(f"unknown filter region {name!r}; expected one of {sorted(regions)}")
    return regions[name]
