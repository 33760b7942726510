import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zonemetrics.ap_engine import ZoneEvaluator
from zonemetrics.dataset import Category, Detection, DetectionDataset, DetectionSet, GtObject, ImageInfo
from zonemetrics.errors import InputError
from zonemetrics.geometry import BBox, annular_zones
from zonemetrics.synthetic import random_instance, ring_dataset
from zonemetrics.zone_eval import (
    FULL_IMAGE,
    core_sweep,
    evaluate_zones,
    grid_evaluation,
    hollow_sweep,
    range_sweep,
    spatial_equilibrium_precision,
    zone_evaluation,
    zone_variance,
)

AREAS5 = [z.normalized_area for z in annular_zones(5)]
GFOCAL = [30.9, 37.2, 39.1, 38.3, 42.5]
DETR = [29.8, 36.2, 39.8, 39.1, 45.7]


def test_sp_examples():
    assert spatial_equilibrium_precision(GFOCAL, AREAS5) == pytest.approx(35.656, abs=1e-9)
    assert spatial_equilibrium_precision(DETR, AREAS5) == pytest.approx(35.344, abs=1e-9)
    assert spatial_equilibrium_precision([0.3] * 5, AREAS5) == pytest.approx(0.3, abs=1e-15)


def test_variance_examples():
    assert zone_variance(GFOCAL) == pytest.approx(14.36, abs=1e-9)
    assert zone_variance(DETR) == pytest.approx(26.8296, abs=1e-9)
    assert zone_variance([0.4] * 3) == 0.0


def test_sp_errors():
    with pytest.raises(InputError):
        spatial_equilibrium_precision([0.1, 0.2], AREAS5)
    with pytest.raises(InputError):
        spatial_equilibrium_precision([0.1, 0.2], [0.5, 0.4])
    with pytest.raises(InputError):
        zone_variance([])


def test_sp_undefined_zone_redistributes():
    # outer ring undefined: remaining areas .64 rescaled to 1
    sp = spatial_equilibrium_precision([None, 1.0, 1.0, 0.0, 0.0], AREAS5)
    assert sp == pytest.approx(0.48 / 0.64, abs=1e-15)
    assert spatial_equilibrium_precision([None] * 5, AREAS5) is None


@given(st.lists(st.floats(0, 1), min_size=5, max_size=5), st.permutations(range(5)))
def test_sp_convex_and_permutation_invariant(zps, perm):
    sp = spatial_equilibrium_precision(zps, AREAS5)
    assert min(zps) - 1e-12 <= sp <= max(zps) + 1e-12
    permuted = spatial_equilibrium_precision([zps[k] for k in perm], [AREAS5[k] for k in perm])
    assert permuted == pytest.approx(sp, abs=1e-12)


def test_n1_sp_equals_traditional_exactly():
    rng = np.random.default_rng(1)
    for _ in range(25):
        ds, dets = random_instance(rng)
        rep = zone_evaluation(ds, dets, n=1)
        assert rep.sp == rep.traditional.zp
        assert rep.zones[0].mzp == rep.traditional.mzp


def test_all_perfect():
    rep = zone_evaluation(*ring_dataset(5))
    assert [z.zp for z in rep.zones] == [1.0] * 5
    assert rep.sp == pytest.approx(1.0, abs=1e-15)
    assert rep.variance["zp"] == 0.0


def test_inner_ring_only():
    rep = zone_evaluation(*ring_dataset(5, perfect_rings=[4]))
    assert [z.zp for z in rep.zones] == [0.0, 0.0, 0.0, 0.0, 1.0]
    assert rep.sp == pytest.approx(0.04, abs=1e-15)
    assert rep.variance["zp"] == pytest.approx(0.16, abs=1e-15)


def test_range_sweep_full_band_equals_traditional():
    ds, dets = random_instance(np.random.default_rng(4))
    ((rng_, m),) = range_sweep(ds, dets, [(0, 0.5)])
    assert rng_ == (0.0, 0.5)
    assert m.mzp == zone_evaluation(ds, dets, n=1).traditional.mzp


def test_sweep_protocols():
    hollow = hollow_sweep()
    assert len(hollow) == 10 and hollow[0] == (0.0, 0.05) and hollow[-1] == (0.0, 0.5)
    core = core_sweep()
    assert core[0] == (0.0, 0.5) and core[-1] == (0.45, 0.5)
    ds, dets = ring_dataset(5)
    assert len(range_sweep(ds, dets, hollow)) == 10


def test_center_object_outside_outer_band():
    box = BBox(48, 48, 4, 4)
    ds = DetectionDataset([ImageInfo(1, 100, 100)], [Category(1, "a")], [GtObject(1, 1, 1, box)])
    dets = DetectionSet([Detection(1, 1, box, 0.9, 0)])
    ((_, m),) = range_sweep(ds, dets, [(0, 0.25)])
    assert m.zp is None and m.n_gt == 0


def test_range_sweep_invalid_pair():
    ds, dets = ring_dataset(2)
    with pytest.raises(InputError):
        range_sweep(ds, dets, [(0.3, 0.2)])


def test_grid_1x1_equals_traditional():
    ds, dets = random_instance(np.random.default_rng(8))
    ((cell,),) = grid_evaluation(ds, dets, 1, 1)
    assert cell.mzp == zone_evaluation(ds, dets, n=1).traditional.mzp


def _uniform_grid_fixture(rows=11, cols=11, cell=100.0):
    # every cell: one gt, its exact detection, and a higher-scored stray FP
    W, H = cols * cell, rows * cell
    anns, dets = [], []
    for r, c in itertools.product(range(rows), range(cols)):
        x0, y0 = c * cell, r * cell
        box = BBox(x0 + 40, y0 + 40, 20, 20)
        anns.append(GtObject(len(anns) + 1, 1, 1, box))
        dets.append(Detection(1, 1, box, 0.5, len(dets)))
        dets.append(Detection(1, 1, BBox(x0 + 5, y0 + 5, 10, 10), 0.6, len(dets)))
    return DetectionDataset([ImageInfo(1, W, H)], [Category(1, "a")], anns), DetectionSet(dets)


def test_grid_uniform_cells_equal():
    grid = grid_evaluation(*_uniform_grid_fixture(), 11, 11)
    values = [m.zp for row in grid for m in row]
    assert len(values) == 121
    assert all(v == pytest.approx(0.5, abs=1e-9) for v in values)


def test_grid_empty_cell_undefined():
    ds, dets = ring_dataset(1)
    grid = grid_evaluation(ds, dets, 4, 4)
    assert sum(m.zp is None for row in grid for m in row) == 15


def test_thread_count_does_not_change_results():
    ds, dets = random_instance(np.random.default_rng(21), max_detections=10)
    ev = ZoneEvaluator(ds, dets)
    zones = [*annular_zones(5), FULL_IMAGE]
    serial = [m.to_dict() for m in evaluate_zones(ev, zones, threads=1)]
    parallel = [m.to_dict() for m in evaluate_zones(ev, zones, threads=4)]
    assert serial == parallel


def test_report_to_dict_shape():
    rep = zone_evaluation(*ring_dataset(3), n=3)
    d = rep.to_dict()
    assert len(d["zones"]) == 3 and d["sp"] == pytest.approx(1.0)
    assert set(d["variance"]) == {"zp", "zp75"}
