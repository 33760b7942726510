"""Small synthetic datasets with known zone behaviour, for tests and demos."""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np

from .dataset import Category, Detection, DetectionDataset, DetectionSet, GtObject, ImageInfo
from .geometry import BBox, annular_zones


def ring_dataset(n: int = 5, perfect_rings: Iterable[int] | None = None, objects_per_ring: int = 1,
                 images: int = 1, width: float = 1000.0, height: float = 1000.0, box_frac: float = 0.02):
    """One category; ``objects_per_ring`` GTs centered in every ring of an ``n``-division.

    Rings listed in ``perfect_rings`` (default: all) get exact detections;
    the others get none, so their ZP is 0.
    """
    perfect = set(range(n)) if perfect_rings is None else set(perfect_rings)
    zones = annular_zones(n)
    bw, bh = box_frac * width, box_frac * height
    infos, anns, dets = [], [], []
    for img in range(1, images + 1):
        infos.append(ImageInfo(img, width, height))
        for k, z in enumerate(zones):
            # left strip of the ring: x between the two rectangles' left edges
            cx = (z.r_inner + z.r_outer) / 2 * width
            for m in range(objects_per_ring):
                cy = height * (z.r_inner + (1 - 2 * z.r_inner) * (m + 1) / (objects_per_ring + 1))
                box = BBox(cx - bw / 2, cy - bh / 2, bw, bh)
                ann_id = len(anns) + 1
                anns.append(GtObject(ann_id, img, 1, box))
                if k in perfect:
                    dets.append(Detection(img, 1, box, 0.9, len(dets)))
    ds = DetectionDataset(infos, [Category(1, "object")], anns)
    return ds, DetectionSet(dets)


def random_instance(rng: np.random.Generator, max_images: int = 5, max_categories: int = 4,
                    max_detections: int = 10, size: float = 100.0, crowd_prob: float = 0.1):
    """Random small GT/detection pair; detections are mostly jittered copies of GTs."""
    n_img = int(rng.integers(1, max_images + 1))
    n_cat = int(rng.integers(1, max_categories + 1))
    images = [ImageInfo(i + 1, size, size) for i in range(n_img)]
    cats = [Category(c + 1, f"c{c + 1}") for c in range(n_cat)]
    anns = []
    for im in images:
        for _ in range(int(rng.integers(0, 5))):
            anns.append(GtObject(len(anns) + 1, im.id, int(rng.integers(1, n_cat + 1)),
                                 _random_box(rng, size), bool(rng.random() < crowd_prob)))
    dets = []
    for k in range(int(rng.integers(0, max_detections + 1))):
        if anns and rng.random() < 0.7:
            src = anns[int(rng.integers(len(anns)))]
            box = _jitter(rng, src.bbox, size)
            image_id, cat = src.image_id, src.category_id
            if rng.random() < 0.2:
                cat = int(rng.integers(1, n_cat + 1))
        else:
            box = _random_box(rng, size)
            image_id, cat = int(rng.integers(1, n_img + 1)), int(rng.integers(1, n_cat + 1))
        # coarse scores make ties common
        score = float(rng.integers(1, 11)) / 10 if rng.random() < 0.5 else float(rng.random())
        dets.append(Detection(image_id, cat, box, score, k))
    return DetectionDataset(images, cats, anns), DetectionSet(dets)


def _random_box(rng, size):
    w, h = rng.uniform(5, size / 2, 2)
    x = rng.uniform(0, size - w)
    y = rng.uniform(0, size - h)
    return BBox(float(x), float(y), float(w), float(h))


def _jitter(rng, box, size):
    dx, dy = rng.normal(0, 0.15, 2) * [box.w, box.h]
    sw, sh = np.exp(rng.normal(0, 0.2, 2))
    w, h = box.w * sw, box.h * sh
    x = float(np.clip(box.x + dx, 0, size - 1))
    y = float(np.clip(box.y + dy, 0, size - 1))
    return BBox(x, y, float(min(w, size - x)), float(min(h, size - y)))


def sela_scene(width: float = 640.0, height: float = 640.0):
    """Fixed anchor-grid scene: one centered object plus objects near every border and corner."""
    from .assigners import AnchorGrid, Scene

    def box(cx, cy, w, h):
        return BBox(cx - w / 2, cy - h / 2, w, h)

    sx, sy = width / 640.0, height / 640.0
    layout = [(320, 320, 96, 96), (24, 320, 40, 64), (616, 200, 36, 36), (320, 20, 120, 30),
              (30, 30, 50, 50), (600, 600, 70, 70), (150, 500, 60, 80)]
    gts = [box(cx * sx, cy * sy, w * sx, h * sy) for cx, cy, w, h in layout]
    return Scene(width, height, gts, AnchorGrid.build(width, height))
