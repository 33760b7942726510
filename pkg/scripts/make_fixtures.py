"""Regenerate the bundled JSON fixtures under tests/fixtures/.

ring_gt.json / ring_det.json: one 1000x1000 image, one object per ring of a
5-zone division, exact detections in rings 0, 2 and 4 only. Expected
per-zone ZP is [1, 0, 1, 0, 1], so SP = 0.36 + 0.20 + 0.04 = 0.60 and the
zone variance is 0.24.

scene.json: the anchor-grid scene used by the SELA checks.
"""

import argparse
import json
from pathlib import Path

from zonemetrics.assigners import scene_to_dict
from zonemetrics.synthetic import ring_dataset, sela_scene

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    ds, dets = ring_dataset(5, perfect_rings=[0, 2, 4])
    ds.save(args.out / "ring_gt.json")
    (args.out / "ring_det.json").write_text(json.dumps(dets.to_coco_list(), indent=1) + "\n")
    (args.out / "scene.json").write_text(json.dumps(scene_to_dict(sela_scene()), indent=1) + "\n")
    print(f"wrote fixtures to {args.out}")


if __name__ == "__main__":
    main()
