"""Boxes, points, evaluation zones and the center-distance spatial weight.

Boxes use the COCO convention ``[x, y, w, h]`` (top-left corner plus size)
in absolute pixels. Zones are defined in normalized image space and are
resolved against a concrete ``W x H`` only when testing membership.

Annular zones are ``R_i minus R_j`` where ``R_k`` is the *closed* centered
rectangle ``[r_k W, (1 - r_k) W] x [r_k H, (1 - r_k) H]`` and ``r_k = k / 2n``.
A point on a ring boundary therefore belongs to the inner ring. ``R`` with
``r = 0.5`` collapses to the center point and is treated as empty, so the
innermost ring keeps the exact image center.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = [
    "LEFT_HALF",
    "RIGHT_HALF",
    "Annular",
    "BBox",
    "GridCell",
    "Point",
    "RangeBand",
    "Zone",
    "annular_zones",
    "check_partition",
    "grid_zones",
    "iou",
    "iou_matrix",
    "range_band",
    "spatial_weight",
    "spatial_weight_array",
    "zone_contains",
    "zone_mask",
]


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InputError(f"point coordinates must be finite, got ({self.x}, {self.y})")
        if self.x < 0 or self.y < 0:
            raise InputError(f"point coordinates must be non-negative, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise InputError(f"bbox fields must be finite, got {self.as_list()}")
        if self.w <= 0 or self.h <= 0:
            raise InputError(f"bbox needs w > 0 and h > 0, got {self.as_list()}")

    @classmethod
    def from_xyxy(cls, x1, y1, x2, y2) -> BBox:
        return cls(x1, y1, x2 - x1, y2 - y1)

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2, self.y + self.h / 2)

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]


def iou(a: BBox, b: BBox) -> float:
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    # edge subtraction can leave inter a few ulps above the smaller area
    return min(1.0, inter / (a.area + b.area - inter))


def iou_matrix(boxes_a, boxes_b, crowd=None) -> np.ndarray:
    """Pairwise IoU of ``(N, 4)`` and ``(M, 4)`` xywh arrays.

    Columns flagged in ``crowd`` use intersection over the area of the
    ``boxes_a`` row instead of the union (COCO's crowd-region rule).
    """
    a = np.asarray(boxes_a, dtype=float).reshape(-1, 4)
    b = np.asarray(boxes_b, dtype=float).reshape(-1, 4)
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)))
    ax2, ay2 = a[:, 0] + a[:, 2], a[:, 1] + a[:, 3]
    bx2, by2 = b[:, 0] + b[:, 2], b[:, 1] + b[:, 3]
    iw = np.minimum(ax2[:, None], bx2[None, :]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(ay2[:, None], by2[None, :]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
    area_a = (a[:, 2] * a[:, 3])[:, None]
    area_b = (b[:, 2] * b[:, 3])[None, :]
    denom = area_a + area_b - inter
    if crowd is not None:
        crowd = np.asarray(crowd, dtype=bool)
        denom = np.where(crowd[None, :], np.broadcast_to(area_a, denom.shape), denom)
    return np.minimum(inter / denom, 1.0)


def spatial_weight(p: Point, W: float, H: float) -> float:
    """Normalized Chebyshev distance from the image center: 0 at center, 1 on the border."""
    if W <= 0 or H <= 0:
        raise InputError(f"image size must be positive, got {W}x{H}")
    if p.x > W or p.y > H:
        raise InputError(f"point ({p.x}, {p.y}) lies outside the {W}x{H} image")
    return 2.0 * max(abs(p.x - W / 2) / W, abs(p.y - H / 2) / H)


def spatial_weight_array(xs, ys, W: float, H: float) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    return 2.0 * np.maximum(np.abs(xs - W / 2) / W, np.abs(ys - H / 2) / H)


@dataclass(frozen=True)
class Annular:
    """Ring ``z^{i,j}`` of an ``n``-zone division, ``r_k = k / 2n``."""

    i: int
    j: int
    n: int

    def __post_init__(self):
        if self.n < 1 or not (0 <= self.i < self.j <= self.n):
            raise InputError(f"annular zone needs 0 <= i < j <= n, got ({self.i}, {self.j}, {self.n})")

    @property
    def r_inner(self) -> float:
        return self.i / (2 * self.n)

    @property
    def r_outer(self) -> float:
        return self.j / (2 * self.n)

    @property
    def normalized_area(self) -> float:
        return (1 - self.i / self.n) ** 2 - (1 - self.j / self.n) ** 2

    @property
    def label(self) -> str:
        return f"{self.i},{self.j}"

    def _bounds(self, k, size):
        # k * size / 2n rather than r * size keeps boundaries exact for integer sizes
        lo = k * size / (2 * self.n)
        return lo, size - lo

    def mask(self, x, y, W, H):
        return _centered_rect(self._bounds(self.i, W), self._bounds(self.i, H), x, y) & ~(
            _centered_rect(self._bounds(self.j, W), self._bounds(self.j, H), x, y)
            if self.j < self.n
            else _false_like(x)
        )

    def to_dict(self) -> dict:
        return {"kind": "annular", "i": self.i, "j": self.j, "n": self.n,
                "range": [self.r_inner, self.r_outer], "area": self.normalized_area}


@dataclass(frozen=True)
class RangeBand:
    """Ring between arbitrary fractions ``r_i < r_j`` in ``[0, 0.5]``."""

    r_i: float
    r_j: float

    def __post_init__(self):
        if not (0 <= self.r_i < self.r_j <= 0.5):
            raise InputError(f"range band needs 0 <= r_i < r_j <= 0.5, got ({self.r_i}, {self.r_j})")

    @property
    def r_inner(self) -> float:
        return self.r_i

    @property
    def r_outer(self) -> float:
        return self.r_j

    @property
    def normalized_area(self) -> float:
        return (1 - 2 * self.r_i) ** 2 - (1 - 2 * self.r_j) ** 2

    @property
    def label(self) -> str:
        return f"{self.r_i:g}-{self.r_j:g}"

    def mask(self, x, y, W, H):
        outer = _centered_rect((self.r_i * W, W - self.r_i * W), (self.r_i * H, H - self.r_i * H), x, y)
        if self.r_j >= 0.5:
            return outer
        inner = _centered_rect((self.r_j * W, W - self.r_j * W), (self.r_j * H, H - self.r_j * H), x, y)
        return outer & ~inner

    def to_dict(self) -> dict:
        return {"kind": "range", "range": [self.r_i, self.r_j], "area": self.normalized_area}


@dataclass(frozen=True)
class GridCell:
    """Cell of an equal ``rows x cols`` grid; half-open except along the far edges."""

    row: int
    col: int
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InputError(f"grid needs rows, cols >= 1, got {self.rows}x{self.cols}")
        if not (0 <= self.row < self.rows and 0 <= self.col < self.cols):
            raise InputError(f"cell ({self.row}, {self.col}) outside {self.rows}x{self.cols} grid")

    @property
    def normalized_area(self) -> float:
        return 1.0 / (self.rows * self.cols)

    @property
    def label(self) -> str:
        return f"r{self.row}c{self.col}"

    def mask(self, x, y, W, H):
        col = np.minimum(np.floor(np.asarray(x, dtype=float) * self.cols / W), self.cols - 1)
        row = np.minimum(np.floor(np.asarray(y, dtype=float) * self.rows / H), self.rows - 1)
        return (col == self.col) & (row == self.row)

    def to_dict(self) -> dict:
        return {"kind": "grid", "row": self.row, "col": self.col, "rows": self.rows,
                "cols": self.cols, "area": self.normalized_area}


Zone = Annular | RangeBand | GridCell

LEFT_HALF = GridCell(0, 0, 1, 2)
RIGHT_HALF = GridCell(0, 1, 1, 2)


def _centered_rect(xb, yb, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (x >= xb[0]) & (x <= xb[1]) & (y >= yb[0]) & (y <= yb[1])


def _false_like(x):
    return np.zeros(np.shape(x), dtype=bool)


def annular_zones(n: int) -> list[Annular]:
    if n < 1:
        raise InputError(f"zone count must be >= 1, got {n}")
    return [Annular(k, k + 1, n) for k in range(n)]


def grid_zones(rows: int, cols: int) -> list[GridCell]:
    if rows < 1 or cols < 1:
        raise InputError(f"grid needs rows, cols >= 1, got {rows}x{cols}")
    return [GridCell(r, c, rows, cols) for r in range(rows) for c in range(cols)]


def range_band(r_i: float, r_j: float) -> RangeBand:
    return RangeBand(float(r_i), float(r_j))


def zone_contains(z: Zone, p: Point, W: float, H: float) -> bool:
    return bool(z.mask(p.x, p.y, W, H))


def zone_mask(z: Zone, xs, ys, W: float, H: float) -> np.ndarray:
    """Vectorized ``zone_contains`` over arrays of center coordinates."""
    return np.asarray(z.mask(xs, ys, W, H), dtype=bool)


def check_partition(zones: Sequence[Zone]) -> None:
    """Raise ``InputError`` unless ``zones`` is a complete, disjoint division of the image."""
    zones = list(zones)
    if not zones:
        raise InputError("empty zone list is not a partition")
    kinds = {type(z) for z in zones}
    if len(kinds) != 1:
        raise InputError("a partition must use a single zone kind")
    kind = kinds.pop()
    if kind is GridCell:
        rows, cols = zones[0].rows, zones[0].cols
        cells = {(z.row, z.col) for z in zones if (z.rows, z.cols) == (rows, cols)}
        if len(zones) != rows * cols or len(cells) != rows * cols:
            raise InputError(f"grid cells do not cover the {rows}x{cols} grid exactly once")
        return
    if kind is Annular:
        n = zones[0].n
        if any(z.n != n for z in zones):
            raise InputError("annular zones from different divisions")
        spans = sorted((z.i, z.j) for z in zones)
        end = n
    else:
        spans = sorted((z.r_i, z.r_j) for z in zones)
        end = 0.5
    cursor = 0
    for lo, hi in spans:
        if lo != cursor:
            raise InputError(f"ring chain broken at {cursor}: next ring starts at {lo}")
        cursor = hi
    if cursor != end:
        raise InputError(f"rings stop at {cursor}, image edge needs {end}")
