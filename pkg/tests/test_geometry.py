import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zonemetrics.errors import InputError
from zonemetrics.geometry import (
    Annular,
    BBox,
    GridCell,
    Point,
    RangeBand,
    annular_zones,
    check_partition,
    grid_zones,
    iou,
    iou_matrix,
    spatial_weight,
    zone_contains,
    zone_mask,
)

W, H = 200.0, 100.0

coord = st.floats(0.1, 500, allow_nan=False)
size = st.floats(0.1, 200, allow_nan=False)
boxes = st.builds(BBox, coord, coord, size, size)


def test_bbox_rejects_degenerate():
    with pytest.raises(InputError):
        BBox(0, 0, 0, 1)
    with pytest.raises(InputError):
        BBox(0, 0, 1, math.nan)
    assert BBox(1, 2, 4, 6).center() == (3.0, 5.0)


def test_point_rejects_negative():
    with pytest.raises(InputError):
        Point(-1, 0)


def test_iou_examples():
    b = BBox(3, 4, 5, 6)
    assert iou(b, b) == 1.0
    assert iou(BBox(0, 0, 1, 1), BBox(5, 5, 1, 1)) == 0.0
    assert iou(BBox(0, 0, 2, 2), BBox(1, 1, 2, 2)) == pytest.approx(1 / 7, abs=1e-15)


@given(boxes, boxes)
def test_iou_symmetric_and_bounded(a, b):
    assert iou(a, b) == iou(b, a)
    assert 0.0 <= iou(a, b) <= 1.0


@given(st.lists(boxes, min_size=1, max_size=5), st.lists(boxes, min_size=1, max_size=5))
def test_iou_matrix_matches_scalar(xs, ys):
    m = iou_matrix([b.as_list() for b in xs], [b.as_list() for b in ys])
    for i, a in enumerate(xs):
        for j, b in enumerate(ys):
            assert m[i, j] == pytest.approx(iou(a, b), abs=1e-12)


def test_iou_matrix_crowd_uses_detection_area():
    det = [0, 0, 2, 2]
    crowd_region = [0, 0, 10, 10]
    assert iou_matrix([det], [crowd_region], [True])[0, 0] == 1.0
    assert iou_matrix([det], [crowd_region], [False])[0, 0] == pytest.approx(0.04)


@pytest.mark.parametrize(
    "p, expected",
    [(Point(W / 2, H / 2), 0.0), (Point(0, 0), 1.0), (Point(W / 4, H / 2), 0.5), (Point(W, H / 2), 1.0)],
)
def test_spatial_weight_examples(p, expected):
    assert spatial_weight(p, W, H) == expected


def test_spatial_weight_outside_image():
    with pytest.raises(InputError):
        spatial_weight(Point(W + 1, 0), W, H)


@given(st.floats(0, 1), st.floats(0, 1))
def test_spatial_weight_symmetry_and_bounds(fx, fy):
    x, y = fx * W, fy * H
    a = spatial_weight(Point(x, y), W, H)
    assert 0.0 <= a <= 1.0
    assert a == pytest.approx(spatial_weight(Point(W - x, y), W, H), abs=1e-12)
    assert a == pytest.approx(spatial_weight(Point(x, H - y), W, H), abs=1e-12)


def test_annular_areas():
    assert [z.normalized_area for z in annular_zones(1)] == [1.0]
    assert [z.normalized_area for z in annular_zones(2)] == [0.75, 0.25]
    assert [z.normalized_area for z in annular_zones(5)] == pytest.approx([0.36, 0.28, 0.20, 0.12, 0.04], abs=1e-15)


def test_annular_zero_rejected():
    with pytest.raises(InputError):
        annular_zones(0)


def _owners(zones, p, w=W, h=H):
    return [k for k, z in enumerate(zones) if zone_contains(z, p, w, h)]


def test_zone_contains_examples():
    zones = annular_zones(5)
    assert _owners(zones, Point(W / 2, H / 2)) == [4]
    assert _owners(zones, Point(0.05 * W, 0.5 * H)) == [0]
    # 0.1 * W lies exactly on R_1's left edge; closed R_1 puts it in the inner ring
    assert _owners(zones, Point(20.0, 50.0)) == [1]


def test_range_band_full_image_contains_everything():
    full = RangeBand(0, 0.5)
    for p in [Point(0, 0), Point(W, H), Point(W / 2, H / 2), Point(W, 0)]:
        assert zone_contains(full, p, W, H)


def test_grid_zones_examples():
    (only,) = grid_zones(1, 1)
    assert only.normalized_area == 1.0
    cells = grid_zones(11, 11)
    assert len(cells) == 121
    assert all(c.normalized_area == 1 / 121 for c in cells)
    cells = grid_zones(2, 2)
    owners = [c for c in cells if zone_contains(c, Point(0.3 * W, 0.7 * H), W, H)]
    assert owners == [GridCell(1, 0, 2, 2)]


def test_grid_far_edges_closed():
    cells = grid_zones(3, 4)
    assert [c for c in cells if zone_contains(c, Point(W, H), W, H)] == [GridCell(2, 3, 3, 4)]


def test_grid_rejects_zero():
    with pytest.raises(InputError):
        grid_zones(0, 3)


def test_zone_validation():
    with pytest.raises(InputError):
        RangeBand(0.3, 0.2)
    with pytest.raises(InputError):
        RangeBand(0.0, 0.6)
    with pytest.raises(InputError):
        Annular(2, 2, 5)


@pytest.mark.parametrize("n", range(1, 51))
def test_area_conservation_annular(n):
    assert abs(math.fsum(z.normalized_area for z in annular_zones(n)) - 1.0) <= 1e-12


@pytest.mark.parametrize("rows, cols", [(1, 1), (3, 7), (11, 11), (20, 20), (13, 2)])
def test_area_conservation_grid(rows, cols):
    assert abs(math.fsum(z.normalized_area for z in grid_zones(rows, cols)) - 1.0) <= 1e-12


@given(st.integers(1, 12), st.floats(0, 1), st.floats(0, 1), st.sampled_from([(640, 480), (100, 100), (333, 77)]))
def test_annular_partition(n, fx, fy, size):
    w, h = size
    assert len(_owners(annular_zones(n), Point(fx * w, fy * h), w, h)) == 1


@given(st.integers(1, 12), st.integers(1, 12), st.floats(0, 1), st.floats(0, 1))
def test_grid_partition(rows, cols, fx, fy):
    assert len(_owners(grid_zones(rows, cols), Point(fx * W, fy * H))) == 1


def test_zone_mask_agrees_with_scalar():
    rng = np.random.default_rng(0)
    xs, ys = rng.uniform(0, W, 300), rng.uniform(0, H, 300)
    # include exact ring boundaries
    xs[:10] = np.arange(10) * W / 10
    for z in [*annular_zones(5), *grid_zones(3, 3), RangeBand(0.1, 0.35)]:
        mask = zone_mask(z, xs, ys, W, H)
        assert list(mask) == [zone_contains(z, Point(x, y), W, H) for x, y in zip(xs, ys)]


def test_check_partition():
    check_partition(annular_zones(4))
    check_partition(grid_zones(2, 3))
    check_partition([RangeBand(0, 0.2), RangeBand(0.2, 0.5)])
    with pytest.raises(InputError):
        check_partition(annular_zones(4)[:-1])
    with pytest.raises(InputError):
        check_partition(grid_zones(2, 2)[:3])
    with pytest.raises(InputError):
        check_partition([RangeBand(0, 0.2), RangeBand(0.25, 0.5)])
    with pytest.raises(InputError):
        check_partition([])
