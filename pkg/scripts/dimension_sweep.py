"""Bowen-equation dimension estimates against word length for several
triangle separations.

    python3 scripts/dimension_sweep.py --separations 6 8 12 --n-max 10
"""

import argparse
import csv
from dataclasses import dataclass, field
from pathlib import Path

from billiard_lab.geometry import tri_table
from billiard_lab.rigidity import bowen_dimension


@dataclass
class DimensionSweepConfig:
    separations: list = field(default_factory=lambda: [6.0, 8.0, 12.0])
    n_min: int = 2
    n_max: int = 10
    box_depth: int = 0      # >0 adds a box-counting estimate at n_max
    out: str = "out/dimension_sweep"


def run(cfg: DimensionSweepConfig):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "dimension.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["separation", "n", "orbits", "delta_u", "delta_s", "box"])
        for sep in cfg.separations:
            t = tri_table(sep)
            for n in range(cfg.n_min, cfg.n_max + 1):
                box = cfg.box_depth if (cfg.box_depth and n == cfg.n_max) else None
                e = bowen_dimension(t, n, slice_depth=box)
                w.writerow([sep, n, e.orbits, f"{e.delta_u:.12f}", f"{e.delta_s:.12f}",
                            "" if e.box_dimension is None else f"{e.box_dimension:.6f}"])
            print(f"separation {sep:g}: delta({cfg.n_max}) = {e.delta_u:.6f}")


def main():
    ap = argparse.ArgumentParser()
    d = DimensionSweepConfig()
    ap.add_argument("--separations", type=float, nargs="+", default=d.separations)
    ap.add_argument("--n-max", type=int, default=d.n_max)
    ap.add_argument("--box-depth", type=int, default=d.box_depth)
    ap.add_argument("--out", default=d.out)
    ns = ap.parse_args()
    run(DimensionSweepConfig(ns.separations, d.n_min, ns.n_max, ns.box_depth, ns.out))


if __name__ == "__main__":
    main()
