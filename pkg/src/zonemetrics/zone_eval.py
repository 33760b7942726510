"""Multi-zone evaluation: SP, zone variance, range sweeps and grid evaluation.

All metrics are fractions in ``[0, 1]``. A zone without ground truth has an
undefined (``None``) ZP; for SP its area weight is spread proportionally over
the defined zones, and it is left out of the variance.
"""

from __future__ import annotations

import math
import statistics
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .ap_engine import COCO_IOUS, ZoneEvaluator, ZoneMetrics
from .dataset import DetectionDataset, DetectionSet
from .errors import InputError
from .geometry import RangeBand, Zone, annular_zones, grid_zones

__all__ = [
    "ZoneMetrics",
    "ZoneReport",
    "core_sweep",
    "evaluate_zones",
    "grid_evaluation",
    "hollow_sweep",
    "range_sweep",
    "spatial_equilibrium_precision",
    "zone_evaluation",
    "zone_variance",
]

FULL_IMAGE = RangeBand(0.0, 0.5)


@dataclass
class ZoneReport:
    zones: list[ZoneMetrics]
    sp: float | None
    sp75: float | None
    variance: dict[str, float | None]
    traditional: ZoneMetrics

    @property
    def n(self) -> int:
        return len(self.zones)

    def to_dict(self) -> dict:
        return {
            "zones": [z.to_dict() for z in self.zones],
            "sp": self.sp,
            "sp75": self.sp75,
            "variance": dict(self.variance),
            "traditional": self.traditional.to_dict(),
        }


def spatial_equilibrium_precision(zps: Sequence[float | None], areas: Sequence[float]) -> float | None:
    """Area-weighted sum of per-zone metrics.

    ``None`` entries are undefined zones; the remaining areas are rescaled to
    sum to one. Returns ``None`` when no zone is defined.
    """
    if len(zps) != len(areas):
        raise InputError(f"got {len(zps)} zone metrics but {len(areas)} areas")
    if not zps:
        raise InputError("no zones given")
    if abs(math.fsum(areas) - 1.0) > 1e-9:
        raise InputError(f"zone areas sum to {math.fsum(areas)!r}, not 1")
    pairs = [(a, z) for a, z in zip(areas, zps) if z is not None]
    if not pairs:
        return None
    weighted = sum(a * z for a, z in pairs)
    if len(pairs) == len(zps):
        return weighted
    return weighted / sum(a for a, _ in pairs)


def zone_variance(zps: Sequence[float]) -> float:
    """Population variance (divide by the number of zones)."""
    if len(zps) == 0:
        raise InputError("variance of an empty list")
    if any(z is None for z in zps):
        raise InputError("variance needs defined zone metrics; drop undefined zones first")
    # exact rational arithmetic: a constant list gives exactly 0
    return float(statistics.pvariance([float(z) for z in zps]))


def _defined_variance(values):
    values = [v for v in values if v is not None]
    return zone_variance(values) if values else None


def evaluate_zones(evaluator: ZoneEvaluator, zones: Sequence[Zone], threads: int | None = None) -> list[ZoneMetrics]:
    zones = list(zones)
    if threads is not None and threads <= 1:
        return [evaluator.evaluate(z) for z in zones]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(evaluator.evaluate, zones))


def zone_evaluation(ds: DetectionDataset, dets: DetectionSet, n: int = 5, iou_set: Sequence[float] = COCO_IOUS,
                    max_dets: int = 100, threads: int | None = None) -> ZoneReport:
    zones = annular_zones(n)
    evaluator = ZoneEvaluator(ds, dets, iou_set, max_dets)
    *metrics, traditional = evaluate_zones(evaluator, [*zones, FULL_IMAGE], threads)
    areas = [z.normalized_area for z in zones]
    return ZoneReport(
        zones=metrics,
        sp=spatial_equilibrium_precision([m.zp for m in metrics], areas),
        sp75=spatial_equilibrium_precision([m.zp75 for m in metrics], areas),
        variance={
            "zp": _defined_variance([m.zp for m in metrics]),
            "zp75": _defined_variance([m.zp75 for m in metrics]),
        },
        traditional=traditional,
    )


def range_sweep(ds: DetectionDataset, dets: DetectionSet, sweep: Sequence[tuple[float, float]],
                iou_set: Sequence[float] = COCO_IOUS, max_dets: int = 100,
                threads: int | None = None) -> list[tuple[tuple[float, float], ZoneMetrics]]:
    bands = [RangeBand(float(ri), float(rj)) for ri, rj in sweep]
    evaluator = ZoneEvaluator(ds, dets, iou_set, max_dets)
    metrics = evaluate_zones(evaluator, bands, threads)
    return [((b.r_i, b.r_j), m) for b, m in zip(bands, metrics)]


def hollow_sweep(steps: int = 10) -> list[tuple[float, float]]:
    """``(0, 0.05 j)`` for ``j = 1..steps``: central rectangles progressively excluded."""
    return [(0.0, round(j * 0.5 / steps, 10)) for j in range(1, steps + 1)]


def core_sweep(steps: int = 10) -> list[tuple[float, float]]:
    """``(0.05 i, 0.5)`` for ``i = 0..steps-1``: progressively smaller central regions."""
    return [(round(i * 0.5 / steps, 10), 0.5) for i in range(steps)]


def grid_evaluation(ds: DetectionDataset, dets: DetectionSet, rows: int, cols: int,
                    iou_set: Sequence[float] = COCO_IOUS, max_dets: int = 100,
                    threads: int | None = None) -> list[list[ZoneMetrics]]:
    cells = grid_zones(rows, cols)
    evaluator = ZoneEvaluator(ds, dets, iou_set, max_dets)
    flat = evaluate_zones(evaluator, cells, threads)
    return [flat[r * cols:(r + 1) * cols] for r in range(rows)]
