"""Length-spectrum response to a boundary bump placed in a cover gap, against
a control bump of the same width on the cover, over a range of amplitudes.

    python3 scripts/gap_experiment.py --amplitudes 1e-5 1e-4 1e-3
"""

import argparse
import csv
from dataclasses import dataclass, field
from pathlib import Path

from billiard_lab.rigidity import gap_perturbation_experiment
from billiard_lab.tablefile import load_table


@dataclass
class GapConfig:
    table: str = "tables/tri6.json"
    obstacle: int = 1
    depth: int = 4
    max_length: int = 8
    amplitudes: list = field(default_factory=lambda: [1e-5, 1e-4, 1e-3])
    gap: str = "widest"
    out: str = "out/gap_experiment"


def run(cfg: GapConfig):
    t = load_table(cfg.table)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    gap = int(cfg.gap) if cfg.gap.isdigit() else cfg.gap
    with open(out / "gap.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["amplitude", "gap_lo", "gap_hi", "max_change_gap", "max_change_control", "worst_control"])
        for a in cfg.amplitudes:
            rep = gap_perturbation_experiment(t, cfg.obstacle, cfg.depth, a, cfg.max_length, gap_choice=gap)
            w.writerow([a, f"{rep.gap[0]:.12f}", f"{rep.gap[1]:.12f}", f"{rep.max_change_gap:.3e}",
                        f"{rep.max_change_control:.3e}", rep.worst_word_control])
            print(f"amplitude {a:.0e}: gap {rep.max_change_gap:.1e}  control {rep.max_change_control:.1e}")


def main():
    ap = argparse.ArgumentParser()
    d = GapConfig()
    ap.add_argument("--table", default=d.table)
    ap.add_argument("--obstacle", type=int, default=d.obstacle)
    ap.add_argument("--depth", type=int, default=d.depth)
    ap.add_argument("--max-len", type=int, default=d.max_length)
    ap.add_argument("--amplitudes", type=float, nargs="+", default=d.amplitudes)
    ap.add_argument("--gap", default=d.gap, help="widest, interior or a rank")
    ap.add_argument("--out", default=d.out)
    ns = ap.parse_args()
    run(GapConfig(ns.table, ns.obstacle, ns.depth, ns.max_len, ns.amplitudes, ns.gap, ns.out))


if __name__ == "__main__":
    main()
