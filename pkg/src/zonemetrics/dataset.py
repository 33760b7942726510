"""COCO-format ingestion and object-distribution counts.

Ground truth follows the COCO annotation layout (``images``, ``categories``,
``annotations``); detections follow the COCO results layout (a JSON array of
``{image_id, category_id, bbox, score}``). Out-of-image ground-truth boxes are
clamped to the image and counted in :class:`LoadStats`; boxes that collapse to
zero area are dropped and counted as well.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter, defaultdict
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IntegrityError, ParseError, RangeError, SchemaError
from .geometry import BBox, Zone, check_partition, zone_mask

log = logging.getLogger(__name__)

__all__ = [
    "Category",
    "Detection",
    "DetectionDataset",
    "DetectionSet",
    "GtObject",
    "ImageInfo",
    "LoadStats",
    "load_detections",
    "load_ground_truth",
    "object_distribution",
    "parse_detections",
    "parse_ground_truth",
]


@dataclass(frozen=True)
class ImageInfo:
    id: int
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise RangeError(f"image {self.id}: width and height must be positive")


@dataclass(frozen=True)
class Category:
    id: int
    name: str


@dataclass(frozen=True)
class GtObject:
    id: int
    image_id: int
    category_id: int
    bbox: BBox
    is_crowd: bool = False


@dataclass(frozen=True)
class Detection:
    image_id: int
    category_id: int
    bbox: BBox
    score: float
    index: int = 0  # position in the source file, used for stable ordering


@dataclass
class LoadStats:
    clamped: int = 0
    dropped: int = 0


@dataclass(frozen=True)
class DetectionDataset:
    images: tuple[ImageInfo, ...]
    categories: tuple[Category, ...]
    annotations: tuple[GtObject, ...]
    stats: LoadStats = field(default_factory=LoadStats, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "categories", tuple(self.categories))
        object.__setattr__(self, "annotations", tuple(self.annotations))
        image_ids = [im.id for im in self.images]
        cat_ids = [c.id for c in self.categories]
        for what, ids in (("image", image_ids), ("category", cat_ids)):
            dup = sorted(i for i, n in Counter(ids).items() if n > 1)
            if dup:
                raise IntegrityError(f"duplicate {what} ids: {dup}", dup)
        image_set, cat_set = set(image_ids), set(cat_ids)
        bad = [a.id for a in self.annotations if a.image_id not in image_set or a.category_id not in cat_set]
        if bad:
            raise IntegrityError(f"annotations reference unknown image/category ids: {bad[:20]}", bad)
        object.__setattr__(self, "_image_index", {im.id: im for im in self.images})

    def image(self, image_id: int) -> ImageInfo:
        return self._image_index[image_id]

    @property
    def image_ids(self) -> list[int]:
        return sorted(self._image_index)

    @property
    def category_ids(self) -> list[int]:
        return sorted(c.id for c in self.categories)

    def gts_by_group(self) -> dict[tuple[int, int], list[GtObject]]:
        groups = defaultdict(list)
        for a in self.annotations:
            groups[(a.image_id, a.category_id)].append(a)
        return dict(groups)

    def to_coco_dict(self) -> dict:
        return {
            "images": [{"id": im.id, "width": im.width, "height": im.height} for im in self.images],
            "categories": [{"id": c.id, "name": c.name} for c in self.categories],
            "annotations": [
                {
                    "id": a.id,
                    "image_id": a.image_id,
                    "category_id": a.category_id,
                    "bbox": a.bbox.as_list(),
                    "area": a.bbox.area,
                    "iscrowd": int(a.is_crowd),
                }
                for a in self.annotations
            ],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_coco_dict()))


class DetectionSet:
    """Detections grouped by ``(image_id, category_id)``, each group score-descending.

    Equal scores keep their source-file order.
    """

    def __init__(self, detections: Sequence[Detection] = ()):
        groups = defaultdict(list)
        for d in detections:
            groups[(d.image_id, d.category_id)].append(d)
        self._groups = {
            key: tuple(sorted(dets, key=lambda d: (-d.score, d.index))) for key, dets in groups.items()
        }

    def __len__(self) -> int:
        return sum(len(g) for g in self._groups.values())

    def __iter__(self) -> Iterator[Detection]:
        for key in sorted(self._groups):
            yield from self._groups[key]

    def group(self, image_id: int, category_id: int) -> tuple[Detection, ...]:
        return self._groups.get((image_id, category_id), ())

    def keys(self):
        return self._groups.keys()

    def to_coco_list(self) -> list[dict]:
        ordered = sorted((d for g in self._groups.values() for d in g), key=lambda d: d.index)
        return [
            {"image_id": d.image_id, "category_id": d.category_id, "bbox": d.bbox.as_list(), "score": d.score}
            for d in ordered
        ]


def _read_json(path):
    path = Path(path)
    raw = path.read_bytes()
    text = raw.decode("utf-8-sig")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        offset = len(text[: e.pos].encode("utf-8"))
        raise ParseError(str(path), offset, e.msg) from None


def _require(record: dict, key: str, where: str):
    if not isinstance(record, dict):
        raise SchemaError(f"{where}: expected an object, got {type(record).__name__}")
    if key not in record:
        raise SchemaError(f"{where}: missing required key '{key}'")
    return record[key]


def _number(value, key, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where}: '{key}' must be a number")
    return value


def _bbox_values(value, where):
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise SchemaError(f"{where}: 'bbox' must be a list [x, y, w, h]")
    return [float(_number(v, "bbox", where)) for v in value]


def _clamp(vals, W, H, tol=1e-9):
    x, y, w, h = vals
    W, H = float(W), float(H)
    # sub-tolerance overshoot (float residue from an earlier clamp) is left as is
    if x >= -tol and y >= -tol and x + w <= W + tol * W and y + h <= H + tol * H:
        return vals, False
    x1, y1 = max(0.0, x), max(0.0, y)
    x2, y2 = min(W, x + w), min(H, y + h)
    return [x1, y1, x2 - x1, y2 - y1], True


def parse_ground_truth(doc, source: str = "<memory>") -> DetectionDataset:
    if not isinstance(doc, dict):
        raise SchemaError(f"{source}: top level must be an object")
    images_raw = _require(doc, "images", source)
    cats_raw = _require(doc, "categories", source)
    anns_raw = _require(doc, "annotations", source)
    for key, value in (("images", images_raw), ("categories", cats_raw), ("annotations", anns_raw)):
        if not isinstance(value, list):
            raise SchemaError(f"{source}: '{key}' must be a list")

    images = []
    for k, rec in enumerate(images_raw):
        where = f"{source}: images[{k}]"
        images.append(
            ImageInfo(
                id=_require(rec, "id", where),
                width=_number(_require(rec, "width", where), "width", where),
                height=_number(_require(rec, "height", where), "height", where),
            )
        )
    categories = []
    for k, rec in enumerate(cats_raw):
        where = f"{source}: categories[{k}]"
        categories.append(Category(id=_require(rec, "id", where), name=str(_require(rec, "name", where))))

    sizes = {im.id: (im.width, im.height) for im in images}
    stats = LoadStats()
    annotations = []
    dangling = []
    for k, rec in enumerate(anns_raw):
        where = f"{source}: annotations[{k}]"
        ann_id = _require(rec, "id", where)
        image_id = _require(rec, "image_id", where)
        category_id = _require(rec, "category_id", where)
        vals = _bbox_values(_require(rec, "bbox", where), where)
        crowd = bool(rec.get("iscrowd", 0))
        if image_id not in sizes:
            dangling.append(ann_id)
            continue
        if not all(math.isfinite(v) for v in vals) or vals[2] <= 0 or vals[3] <= 0:
            stats.dropped += 1
            continue
        vals, clamped = _clamp(vals, *sizes[image_id])
        if vals[2] <= 0 or vals[3] <= 0:
            stats.dropped += 1
            continue
        stats.clamped += clamped
        annotations.append(GtObject(ann_id, image_id, category_id, BBox(*vals), crowd))
    if dangling:
        raise IntegrityError(f"{source}: annotations reference unknown image ids: {dangling[:20]}", dangling)
    if stats.clamped or stats.dropped:
        log.warning("%s: clamped %d and dropped %d ground-truth boxes", source, stats.clamped, stats.dropped)
    return DetectionDataset(images, categories, annotations, stats)


def load_ground_truth(path) -> DetectionDataset:
    return parse_ground_truth(_read_json(path), str(path))


def parse_detections(doc, ds: DetectionDataset, source: str = "<memory>",
                     stats: LoadStats | None = None) -> DetectionSet:
    if not isinstance(doc, list):
        raise SchemaError(f"{source}: detection results must be a JSON array")
    stats = stats if stats is not None else LoadStats()
    image_ids = {im.id for im in ds.images}
    cat_ids = {c.id for c in ds.categories}
    dets, offenders = [], []
    for k, rec in enumerate(doc):
        where = f"{source}: [{k}]"
        image_id = _require(rec, "image_id", where)
        category_id = _require(rec, "category_id", where)
        vals = _bbox_values(_require(rec, "bbox", where), where)
        score = float(_number(_require(rec, "score", where), "score", where))
        if not (math.isfinite(score) and 0.0 <= score <= 1.0):
            raise RangeError(f"{where}: score {score} outside [0, 1]")
        if image_id not in image_ids or category_id not in cat_ids:
            offenders.append(k)
            continue
        if not all(math.isfinite(v) for v in vals) or vals[2] <= 0 or vals[3] <= 0:
            stats.dropped += 1
            continue
        dets.append(Detection(image_id, category_id, BBox(*vals), score, k))
    if offenders:
        raise IntegrityError(
            f"{source}: detections reference unknown image/category ids at indices {offenders[:20]}", offenders
        )
    return DetectionSet(dets)


def load_detections(path, ds: DetectionDataset) -> DetectionSet:
    return parse_detections(_read_json(path), ds, str(path))


def object_distribution(ds: DetectionDataset, zones: Sequence[Zone], per_category: bool = False):
    """Count non-crowd ground-truth centers per zone.

    Returns an int array aligned with ``zones``; with ``per_category`` also a
    dict mapping category id to its own count array.
    """
    check_partition(zones)
    totals = np.zeros(len(zones), dtype=int)
    by_cat = {c: np.zeros(len(zones), dtype=int) for c in ds.category_ids}
    per_image = defaultdict(list)
    for a in ds.annotations:
        if not a.is_crowd:
            per_image[a.image_id].append(a)
    for image_id, anns in per_image.items():
        im = ds.image(image_id)
        cx = np.array([a.bbox.x + a.bbox.w / 2 for a in anns])
        cy = np.array([a.bbox.y + a.bbox.h / 2 for a in anns])
        cats = np.array([a.category_id for a in anns])
        for k, z in enumerate(zones):
            m = zone_mask(z, cx, cy, im.width, im.height)
            totals[k] += int(m.sum())
            if per_category:
                for c in np.unique(cats[m]):
                    by_cat[int(c)][k] += int((cats[m] == c).sum())
    if per_category:
        return totals, by_cat
    return totals
