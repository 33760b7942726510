"""Command-line front end.

    zonemetrics eval   --gt gt.json --det dets.json --zones 5
    zonemetrics sweep  --gt gt.json --det dets.json --sweep hollow
    zonemetrics grid   --gt gt.json --det dets.json --grid 11x11
    zonemetrics corr   --gt gt.json --det dets.json --grid 11x11 --iou 0.5:0.05:0.95
    zonemetrics assign --scene scene.json --assigner sela --gamma 0.2

Options can also come from a flat ``key = value`` file given with
``--config``; command-line flags win. Exit status: 0 on success, 1 on I/O or
JSON parse failures, 2 on validation or configuration errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__, report
from .ap_engine import COCO_IOUS, iou_grid
from .assigners import (
    ATSS,
    AnchorGrid,
    AssignConfig,
    AssignmentResult,
    MaxIoU,
    Scene,
    SelaCost,
    SelaFreq,
    ZoneFilter,
    ZoneSampling,
    assign,
    assignment_zone_stats,
    load_scene,
    region_from_name,
)
from .dataset import load_detections, load_ground_truth, object_distribution
from .errors import ConfigError, ParseError, ZoneMetricsError
from .geometry import annular_zones, grid_zones
from .stats import zone_metric_correlation
from .zone_eval import core_sweep, grid_evaluation, hollow_sweep, range_sweep, zone_evaluation

log = logging.getLogger("zonemetrics")

MODES = ("eval", "sweep", "grid", "corr", "assign")


@dataclass
class RunConfig:
    mode: str
    gt: str | None = None
    det: str | None = None
    scene: str | None = None
    zones: int = 5
    grid: tuple[int, int] = (11, 11)
    iou: tuple[float, ...] = COCO_IOUS
    sweep: tuple[tuple[float, float], ...] = field(default_factory=lambda: tuple(hollow_sweep()))
    max_dets: int = 100
    assigner: str = "atss"
    gamma: float = 0.2
    top_k: int = 9
    pos_thr: float = 0.5
    neg_thr: float = 0.4
    zone_filter: str | None = None
    out: str = "report.json"
    format: str = "json"
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("threads")  # the report must not depend on the machine it ran on
        return d


def parse_iou(text: str) -> tuple[float, ...]:
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"--iou range must be start:step:stop, got {text!r}")
        start, step, stop = map(float, parts)
        if step <= 0 or stop < start:
            raise ConfigError(f"--iou range {text!r} is empty")
        return iou_grid(start, step, stop)
    values = tuple(float(v) for v in text.split(",") if v.strip())
    if not values:
        raise ConfigError("--iou needs at least one threshold")
    return values


def parse_grid(text: str) -> tuple[int, int]:
    try:
        rows, cols = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise ConfigError(f"--grid must look like RxC, got {text!r}") from None
    if rows < 1 or cols < 1:
        raise ConfigError(f"--grid needs positive sizes, got {text!r}")
    return rows, cols


def parse_sweep(text: str) -> tuple[tuple[float, float], ...]:
    text = text.strip()
    if text == "hollow":
        return tuple(hollow_sweep())
    if text == "core":
        return tuple(core_sweep())
    pairs = []
    for item in text.split(","):
        try:
            ri, rj = (float(v) for v in item.split(":"))
        except ValueError:
            raise ConfigError(f"--sweep entries must be ri:rj, got {item!r}") from None
        if not (0 <= ri < rj <= 0.5):
            raise ConfigError(f"--sweep pair {item!r} needs 0 <= ri < rj <= 0.5")
        pairs.append((ri, rj))
    return tuple(pairs)


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


_CONVERTERS = {
    "zones": int,
    "grid": parse_grid,
    "iou": parse_iou,
    "sweep": parse_sweep,
    "max_dets": int,
    "gamma": float,
    "top_k": int,
    "pos_thr": float,
    "neg_thr": float,
    "threads": int,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zonemetrics", description="Zone-restricted detection evaluation.")
    p.add_argument("mode", nargs="?", choices=MODES, help="what to run (may also come from --config)")
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--gt", help="COCO ground-truth JSON")
    p.add_argument("--det", help="COCO results JSON")
    p.add_argument("--scene", help="assigner scene JSON (assign mode)")
    p.add_argument("--zones", help="number of annular zones n (default 5)")
    p.add_argument("--grid", help="grid size RxC (default 11x11)")
    p.add_argument("--iou", help="IoU thresholds: start:step:stop or a comma list (default 0.5:0.05:0.95)")
    p.add_argument("--sweep", help="ri:rj,... or 'hollow' / 'core' (default hollow)")
    p.add_argument("--max-dets", dest="max_dets", help="detections kept per image and category (default 100)")
    p.add_argument("--assigner", choices=("maxiou", "atss", "sela", "sela-cost"))
    p.add_argument("--gamma", help="spatial relaxation strength (default 0.2)")
    p.add_argument("--top-k", dest="top_k", help="ATSS candidates per level (default 9)")
    p.add_argument("--pos-thr", dest="pos_thr")
    p.add_argument("--neg-thr", dest="neg_thr")
    p.add_argument("--zone-filter", dest="zone_filter", help="REGION:MODE, e.g. left:discard or right:keep1")
    p.add_argument("--out", help="JSON report path (default report.json)")
    p.add_argument("--format", choices=("json", "csv", "both"))
    p.add_argument("--threads", help="worker threads (default: CPU count)")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    raw: dict[str, str] = {}
    if args.config:
        raw.update(read_config_file(args.config))
    for f in dataclasses.fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            raw[f.name] = value
    unknown = set(raw) - {f.name for f in dataclasses.fields(RunConfig)}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    mode = raw.pop("mode", None)
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    kwargs = {}
    for key, value in raw.items():
        conv = _CONVERTERS.get(key)
        try:
            kwargs[key] = conv(value) if conv and isinstance(value, str) else value
        except ValueError:
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    cfg = RunConfig(mode=mode, **kwargs)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.assigner not in ("maxiou", "atss", "sela", "sela-cost"):
        raise ConfigError(f"unknown assigner {cfg.assigner!r}")
    if cfg.format not in ("json", "csv", "both"):
        raise ConfigError(f"format must be json, csv or both, got {cfg.format!r}")
    if cfg.zones < 1:
        raise ConfigError(f"zones must be >= 1, got {cfg.zones}")
    if cfg.threads < 1:
        raise ConfigError(f"threads must be >= 1, got {cfg.threads}")
    if any(not (0 < t < 1) for t in cfg.iou):
        raise ConfigError(f"IoU thresholds must lie in (0, 1), got {cfg.iou}")
    if cfg.mode == "assign":
        if not (cfg.scene or cfg.gt):
            raise ConfigError("assign mode needs --scene or --gt")
        if cfg.zone_filter:
            _zone_filter(cfg.zone_filter)
    else:
        for key in ("gt", "det"):
            if not getattr(cfg, key):
                raise ConfigError(f"{cfg.mode} mode needs --{key}")


def _check_readable(cfg: RunConfig) -> None:
    for key in ("gt", "det", "scene"):
        path = getattr(cfg, key)
        if path is None:
            continue
        with open(path, "rb"):
            pass


def _zone_filter(text: str) -> ZoneFilter:
    region, _, mode = text.partition(":")
    return ZoneFilter(region_from_name(region), mode or "discard")


def _strategy(cfg: RunConfig):
    return {
        "maxiou": lambda: MaxIoU(cfg.pos_thr, cfg.neg_thr),
        "atss": lambda: ATSS(cfg.top_k),
        "sela": lambda: SelaFreq(cfg.top_k, cfg.gamma),
        "sela-cost": lambda: SelaCost(cfg.top_k, cfg.gamma),
    }[cfg.assigner]()


def _csv_path(out: str, suffix: str = "") -> Path:
    p = Path(out)
    return p.with_name(p.stem + suffix + ".csv")


def run_eval(cfg: RunConfig, ds, dets) -> tuple[dict, str]:
    rep = zone_evaluation(ds, dets, cfg.zones, cfg.iou, cfg.max_dets, cfg.threads)
    if cfg.format in ("csv", "both"):
        rows = [report.zone_row(m) for m in rep.zones] + [report.zone_row(rep.traditional)]
        report.write_rows(_csv_path(cfg.out), report.ZONE_COLUMNS, rows)
    return rep.to_dict(), report.summary_table(rep)


def run_sweep(cfg: RunConfig, ds, dets) -> tuple[dict, str]:
    results = range_sweep(ds, dets, cfg.sweep, cfg.iou, cfg.max_dets, cfg.threads)
    if cfg.format in ("csv", "both"):
        report.write_rows(_csv_path(cfg.out), report.ZONE_COLUMNS, [report.zone_row(m) for _, m in results])
    lines = [f"{'range':>12}  {'ZP':>6}  {'ZP75':>6}"]
    lines += [f"{f'({a:g}, {b:g})':>12}  {report._pct(m.zp):>6}  {report._pct(m.zp75):>6}" for (a, b), m in results]
    return {"sweep": [{"range": list(r), **m.to_dict()} for r, m in results]}, "\n".join(lines)


def _grid_and_counts(cfg: RunConfig, ds, dets):
    rows, cols = cfg.grid
    metrics = grid_evaluation(ds, dets, rows, cols, cfg.iou, cfg.max_dets, cfg.threads)
    counts = object_distribution(ds, grid_zones(rows, cols)).reshape(rows, cols)
    return metrics, counts


def run_grid(cfg: RunConfig, ds, dets) -> tuple[dict, str]:
    metrics, counts = _grid_and_counts(cfg, ds, dets)
    zp = [[m.zp for m in row] for row in metrics]
    if cfg.format in ("csv", "both"):
        report.emit_heatmap_data(counts, _csv_path(cfg.out, "_counts"))
        report.emit_heatmap_data(zp, _csv_path(cfg.out, "_zp"))
    results = {"rows": cfg.grid[0], "cols": cfg.grid[1], "counts": counts, "zp": zp,
               "cells": [m.to_dict() for row in metrics for m in row]}
    defined = sum(v is not None for row in zp for v in row)
    return results, f"{cfg.grid[0]}x{cfg.grid[1]} grid: {defined} cells with ground truth, {int(counts.sum())} objects"


def run_corr(cfg: RunConfig, ds, dets) -> tuple[dict, str]:
    metrics, counts = _grid_and_counts(cfg, ds, dets)
    curve = zone_metric_correlation(metrics, counts, cfg.iou)
    if cfg.format in ("csv", "both"):
        report.write_rows(_csv_path(cfg.out), ["iou", "pcc", "scc", "n_points"],
                          zip(curve.iou_thresholds, curve.pcc, curve.scc, curve.n_points))
        report.emit_heatmap_data(counts, _csv_path(cfg.out, "_counts"))
    lines = [f"{'IoU':>5}  {'PCC':>7}  {'SCC':>7}  cells"]
    for t, p, s, n in zip(curve.iou_thresholds, curve.pcc, curve.scc, curve.n_points):
        fmt = lambda v: "-" if v is None else f"{v:+.3f}"
        lines.append(f"{t:>5.2f}  {fmt(p):>7}  {fmt(s):>7}  {n}")
    return {"correlation": curve.to_dict(), "counts": counts}, "\n".join(lines)


def run_assign(cfg: RunConfig) -> tuple[dict, str]:
    config = AssignConfig(_strategy(cfg), _zone_filter(cfg.zone_filter) if cfg.zone_filter else None)
    zones = annular_zones(cfg.zones)
    stats = [ZoneSampling(z) for z in zones]
    per_image = []
    if cfg.scene:
        scenes = [(None, load_scene(cfg.scene))]
    else:
        ds = load_ground_truth(cfg.gt)
        scenes = []
        for image_id in ds.image_ids:
            im = ds.image(image_id)
            gts = [a.bbox for a in ds.annotations if a.image_id == image_id and not a.is_crowd]
            scenes.append((image_id, Scene(im.width, im.height, gts, AnchorGrid.build(im.width, im.height))))
    for image_id, scene in scenes:
        result: AssignmentResult = assign(scene.grid, scene.gts, config)
        assignment_zone_stats(result, scene.gts, zones, into=stats)
        per_image.append({
            "image_id": image_id,
            "num_anchors": len(result.labels),
            "num_positive": result.num_positive,
            "pos_count": result.pos_count,
            "thresholds": result.thresholds,
            "discarded": result.discarded,
            "positive_weight_sum": float(result.loss_weights[result.labels >= 0].sum()),
        })
    if cfg.format in ("csv", "both"):
        report.write_rows(_csv_path(cfg.out), ["label", "n_gt", "positives", "mean_positives"],
                          [[s.zone.label, s.n_gt, s.positives, s.mean_positives] for s in stats])
    lines = [f"{'zone':>6}  {'GTs':>5}  {'pos':>6}  {'pos/GT':>7}"]
    for s in stats:
        mean = "-" if s.mean_positives is None else f"{s.mean_positives:.2f}"
        lines.append(f"{s.zone.label:>6}  {s.n_gt:>5}  {s.positives:>6}  {mean:>7}")
    return {"zones": [s.to_dict() for s in stats], "images": per_image}, "\n".join(lines)


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    _check_readable(cfg)
    if cfg.mode == "assign":
        results, summary = run_assign(cfg)
    else:
        ds = load_ground_truth(cfg.gt)
        dets = load_detections(cfg.det, ds)
        handler = {"eval": run_eval, "sweep": run_sweep, "grid": run_grid, "corr": run_corr}[cfg.mode]
        results, summary = handler(cfg, ds, dets)
        results["load_stats"] = {"clamped": ds.stats.clamped, "dropped": ds.stats.dropped}
    report.write_json(report.document(cfg.mode, cfg.to_dict(), results), cfg.out)
    print(summary, file=stdout)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return run(cfg)
    except (OSError, ParseError) as e:
        target = getattr(e, "filename", None)
        print(f"error: {e}" if target is None or str(target) in str(e) else f"error: {target}: {e}", file=sys.stderr)
        return 1
    except ZoneMetricsError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
