"""Area against temporal displacement for the standard and nested quadrilaterals,
plus the periodic approximants of the standard one.

    python3 scripts/quad_sweep.py --table tables/tri6.json --out out/quad_sweep
"""

import argparse
import csv
from dataclasses import dataclass
from pathlib import Path

from billiard_lab.displacement import approximant_sweep, full_report, nested_quad, standard_quad
from billiard_lab.tablefile import load_table


@dataclass
class QuadSweepConfig:
    table: str = "tables/tri6.json"
    out: str = "out/quad_sweep"
    max_nest: int = 4
    n_max: int = 8
    depth: int = 40


def run(cfg: QuadSweepConfig):
    t = load_table(cfg.table)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    quads = [("standard", standard_quad())] + [(f"nested{d}", nested_quad(depth=d))
                                               for d in range(1, cfg.max_nest + 1)]
    with open(out / "quads.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["quad", "area", "H_holonomy", "H_symmetric", "area_plus_H"])
        for name, q in quads:
            rep = full_report(t, q, depth=cfg.depth)
            w.writerow([name, f"{rep.area:.15e}", f"{rep.H_holonomy:.15e}", f"{rep.H_symmetric:.15e}",
                        f"{rep.area + rep.H:.3e}"])
            print(f"{name:10s} area {rep.area:+.6e}  area+H {rep.area + rep.H:+.1e}")
    q = standard_quad()
    h = full_report(t, q, depth=cfg.depth).H
    with open(out / "approximants.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "bounces", "approximant", "error"])
        for a in approximant_sweep(t, q, cfg.n_max):
            w.writerow([a["n"], a["bounces"], f"{a['approximant']:.15e}", f"{abs(a['approximant'] - h):.3e}"])


def main():
    ap = argparse.ArgumentParser()
    d = QuadSweepConfig()
    ap.add_argument("--table", default=d.table)
    ap.add_argument("--out", default=d.out)
    ap.add_argument("--max-nest", type=int, default=d.max_nest)
    ap.add_argument("--n-max", type=int, default=d.n_max)
    ns = ap.parse_args()
    run(QuadSweepConfig(ns.table, ns.out, ns.max_nest, ns.n_max))


if __name__ == "__main__":
    main()
