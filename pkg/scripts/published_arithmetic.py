"""Recompute SP and zone variance from published per-ring ZP columns.

Reads tests/fixtures/published_zone_scores.csv (five ring ZPs per detector,
x100) and prints the recomputed values next to the printed ones.
"""

import argparse
import csv
from pathlib import Path

from zonemetrics.geometry import annular_zones
from zonemetrics.zone_eval import spatial_equilibrium_precision, zone_variance

DEFAULT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "published_zone_scores.csv"
RINGS = ("zp01", "zp12", "zp23", "zp34", "zp45")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv", nargs="?", type=Path, default=DEFAULT)
    args = ap.parse_args()

    areas = [z.normalized_area for z in annular_zones(5)]
    print(f"{'detector':<28} {'SP':>6} {'SP*':>8} {'Var':>6} {'Var*':>8}")
    with open(args.csv) as fh:
        for row in csv.DictReader(fh):
            zps = [float(row[k]) for k in RINGS]
            sp = spatial_equilibrium_precision(zps, areas)
            var = zone_variance(zps)
            print(f"{row['detector']:<28} {row['sp']:>6} {sp:>8.3f} {row['variance']:>6} {var:>8.2f}")
    print("* recomputed")


if __name__ == "__main__":
    main()
