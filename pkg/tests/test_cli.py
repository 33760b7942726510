import json
from pathlib import Path

import numpy as np
import pytest

from zonemetrics import cli
from zonemetrics.dataset import object_distribution, parse_ground_truth
from zonemetrics.geometry import grid_zones
from zonemetrics.report import emit_heatmap_data

FIX = Path(__file__).parent / "fixtures"
GT = str(FIX / "ring_gt.json")
DET = str(FIX / "ring_det.json")
SCENE = str(FIX / "scene.json")


def run(*argv):
    return cli.main([str(a) for a in argv])


def load(path):
    return json.loads(Path(path).read_text())


def test_eval_matches_hand_computed_sp(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run("eval", "--gt", GT, "--det", DET, "--out", out) == 0
    doc = load(out)
    res = doc["results"]
    # rings 0, 2, 4 detected perfectly: 0.36 + 0.20 + 0.04
    assert res["sp"] == pytest.approx(0.60, abs=1e-12)
    assert res["variance"]["zp"] == pytest.approx(0.24, abs=1e-12)
    assert [z["zp"] for z in res["zones"]] == [1.0, 0.0, 1.0, 0.0, 1.0]
    printed = capsys.readouterr().out
    assert "SP" in printed and "60.0" in printed and "ZP^{4,5}" in printed


def test_eval_n1_printed_sp_equals_ap(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run("eval", "--gt", GT, "--det", DET, "--zones", 1, "--out", out) == 0
    ap_row = next(line for line in capsys.readouterr().out.splitlines() if line.startswith("AP "))
    sp, trad = ap_row.split()[1:3]
    assert sp == trad
    res = load(out)["results"]
    assert res["sp"] == res["traditional"]["zp"]


def test_missing_detection_file_exit_1(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert run("eval", "--gt", GT, "--det", missing, "--out", tmp_path / "r.json") == 1
    assert str(missing) in capsys.readouterr().err
    assert not (tmp_path / "r.json").exists()


def test_malformed_json_exit_1_names_offset(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('[{"image_id": 1,, }]')
    assert run("eval", "--gt", GT, "--det", bad, "--out", tmp_path / "r.json") == 1
    assert "byte 16" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["eval", "--gt", GT],
    ["eval", "--gt", GT, "--det", DET, "--zones", "0"],
    ["eval", "--gt", GT, "--det", DET, "--iou", "0.5:0.05"],
    ["grid", "--gt", GT, "--det", DET, "--grid", "11by11"],
    ["sweep", "--gt", GT, "--det", DET, "--sweep", "0.3:0.2"],
    ["assign"],
    ["assign", "--scene", SCENE, "--zone-filter", "top:discard"],
    ["assign", "--scene", SCENE, "--assigner", "maxiou", "--pos-thr", "0.3", "--neg-thr", "0.5"],
])
def test_config_errors_exit_2(argv, tmp_path, capsys):
    assert run(*argv, "--out", tmp_path / "r.json") == 2
    assert capsys.readouterr().err.startswith("error:")


def test_schema_error_exit_2(tmp_path):
    gt = tmp_path / "gt.json"
    gt.write_text(json.dumps({"images": [], "annotations": []}))
    assert run("eval", "--gt", gt, "--det", DET, "--out", tmp_path / "r.json") == 2


def test_config_file_and_override(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text(f"# eval settings\nmode = eval\ngt = {GT}\ndet = {DET}\nzones = 2\niou = 0.5\n")
    out = tmp_path / "r.json"
    assert run("--config", conf, "--out", out) == 0
    doc = load(out)
    assert doc["config"]["zones"] == 2 and doc["config"]["iou"] == [0.5]
    assert run("--config", conf, "--zones", 3, "--out", out) == 0
    assert load(out)["config"]["zones"] == 3 and len(load(out)["results"]["zones"]) == 3


def test_report_provenance_and_nulls(tmp_path):
    # keep only the innermost object so outer rings have no ground truth
    doc = load(GT)
    doc["annotations"] = [a for a in doc["annotations"] if a["id"] == 5]
    path = tmp_path / "gt.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "r.json"
    assert run("eval", "--gt", path, "--det", DET, "--out", out) == 0
    rep = load(out)
    assert rep["schema_version"] == 1
    assert rep["tool"]["version"]
    assert rep["config"]["gt"] == str(path) and rep["config"]["mode"] == "eval"
    assert "threads" not in rep["config"]
    zps = [z["zp"] for z in rep["results"]["zones"]]
    assert zps[:4] == [None] * 4 and zps[4] == 1.0
    assert "NaN" not in out.read_text()


def test_byte_identical_across_threads(tmp_path):
    out = tmp_path / "r.json"
    for mode in ("eval", "grid", "sweep"):
        assert run(mode, "--gt", GT, "--det", DET, "--threads", 1, "--out", out) == 0
        first = out.read_bytes()
        assert run(mode, "--gt", GT, "--det", DET, "--threads", 4, "--out", out) == 0
        assert out.read_bytes() == first


def test_csv_output_has_empty_cells_for_undefined(tmp_path):
    out = tmp_path / "r.json"
    assert run("sweep", "--gt", GT, "--det", DET, "--sweep", "0:0.05,0.1:0.15", "--format", "both",
               "--out", out) == 0
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0].startswith("label,kind,r_i,r_j")
    # ring 1's object sits on the closed r = 0.15 edge, so (0.1, 0.15) is empty
    assert ",,," in lines[2]


def test_heatmap_examples():
    doc = {"images": [{"id": 1, "width": 110, "height": 110}], "categories": [{"id": 1, "name": "a"}],
           "annotations": [{"id": 1, "image_id": 1, "category_id": 1, "bbox": [52, 52, 6, 6]}]}
    counts = object_distribution(parse_ground_truth(doc), grid_zones(11, 11)).reshape(11, 11)
    rows = [r.split(",") for r in emit_heatmap_data(counts).splitlines()]
    assert len(rows) == 11 and all(len(r) == 11 for r in rows)
    assert sum(int(v) for r in rows for v in r) == 1 and rows[5][5] == "1"

    doc["annotations"] = []
    empty = object_distribution(parse_ground_truth(doc), grid_zones(11, 11)).reshape(11, 11)
    assert emit_heatmap_data(empty) == ("0," * 10 + "0\n") * 11

    doc["annotations"] = [
        {"id": k + 1, "image_id": 1, "category_id": 1, "bbox": [cx - 2, cy - 2, 4, 4]}
        for k, (cx, cy) in enumerate([(27.5, 27.5), (82.5, 27.5), (27.5, 82.5), (82.5, 82.5)])
    ]
    ones = object_distribution(parse_ground_truth(doc), grid_zones(2, 2)).reshape(2, 2)
    assert emit_heatmap_data(ones) == "1,1\n1,1\n"


def test_grid_mode_writes_heatmaps(tmp_path):
    out = tmp_path / "g.json"
    assert run("grid", "--gt", GT, "--det", DET, "--grid", "5x5", "--format", "csv", "--out", out) == 0
    counts = np.loadtxt(tmp_path / "g_counts.csv", delimiter=",")
    assert counts.shape == (5, 5) and counts.sum() == 5
    assert load(out)["results"]["rows"] == 5


def test_corr_mode(tmp_path):
    out = tmp_path / "c.json"
    assert run("corr", "--gt", GT, "--det", DET, "--grid", "3x3", "--iou", "0.5,0.75", "--format", "both",
               "--out", out) == 0
    curve = load(out)["results"]["correlation"]
    assert curve["iou_thresholds"] == [0.5, 0.75]
    assert all(-1 <= v <= 1 for v in curve["pcc"] if v is not None)
    assert (tmp_path / "c.csv").read_text().startswith("iou,pcc,scc,n_points")


@pytest.mark.parametrize("assigner", ["maxiou", "atss", "sela", "sela-cost"])
def test_assign_mode_scene(assigner, tmp_path):
    out = tmp_path / "a.json"
    assert run("assign", "--scene", SCENE, "--assigner", assigner, "--gamma", 0.2, "--out", out) == 0
    res = load(out)["results"]
    assert sum(z["n_gt"] for z in res["zones"]) == 7
    assert res["images"][0]["num_positive"] > 0


def test_assign_sela_samples_more_border_positives(tmp_path):
    a, s = tmp_path / "a.json", tmp_path / "s.json"
    assert run("assign", "--scene", SCENE, "--assigner", "atss", "--out", a) == 0
    assert run("assign", "--scene", SCENE, "--assigner", "sela", "--gamma", 0.3, "--out", s) == 0
    outer = lambda p: load(p)["results"]["zones"][0]["mean_positives"]
    assert outer(s) > outer(a)


def test_assign_from_gt_with_filter(tmp_path):
    out = tmp_path / "a.json"
    # every ring object sits in the left half of the image
    assert run("assign", "--gt", GT, "--zone-filter", "left:discard", "--out", out) == 0
    res = load(out)["results"]
    assert res["images"][0]["discarded"] == [True] * 5
    assert sum(z["positives"] for z in res["zones"]) == 0
    assert run("assign", "--gt", GT, "--zone-filter", "right:keep1", "--out", out) == 0
    assert load(out)["results"]["images"][0]["discarded"] == [False] * 5


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        run("--version")
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("zonemetrics ")
