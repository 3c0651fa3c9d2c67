"""Regenerate the table files in tables/.

    python3 scripts/make_tables.py [--out tables]
"""

import argparse
import json
import math
from dataclasses import dataclass
from pathlib import Path

from billiard_lab.geometry import apply_isometry, build_table, table_config, tri_table


@dataclass
class TableRecipe:
    name: str
    separation: float = 6.0
    radius: float = 1.0
    angle: float = 0.0          # rotation, applied about `pivot`
    pivot: tuple = (0.0, 0.0)
    shift: tuple = (0.0, 0.0)   # translation after the rotation
    radius2: float | None = None


RECIPES = [
    TableRecipe("tri6"),
    TableRecipe("tri12", separation=12.0),
    TableRecipe("tri6_moved", angle=0.7, shift=(3.0, -2.0)),
    # rotation by 120 degrees about the centroid: obstacle k lands where k+1 was
    TableRecipe("tri6_rot120", angle=2 * math.pi / 3, pivot=(3.0, math.sqrt(3.0))),
    TableRecipe("tri6_r11", radius2=1.1),
]

MIXED = {
    "name": "mixed",
    "non_eclipse": True,
    "obstacles": [
        {"id": 1, "kind": "ellipse", "center": [0.0, 0.0], "semi_axes": [1.2, 0.8], "angle": 0.3},
        {"id": 2, "kind": "fourier", "center": [6.0, 0.0], "radius": 1.0,
         "fourier": [[2, 0.05, 0.0], [3, 0.0, 0.02]], "angle": 0.0},
        {"id": 3, "kind": "circle", "center": [3.0, 3 * math.sqrt(3.0)], "radius": 0.9, "angle": 0.0},
    ],
}


def make(recipe: TableRecipe):
    t = tri_table(recipe.separation, recipe.radius)
    if recipe.radius2 is not None:
        cfg = table_config(t)
        cfg["obstacles"][1]["radius"] = recipe.radius2
        t = build_table(cfg)
    if recipe.angle or any(recipe.shift):
        ca, sa = math.cos(recipe.angle), math.sin(recipe.angle)
        px, py = recipe.pivot
        tx = px - (ca * px - sa * py) + recipe.shift[0]
        ty = py - (sa * px + ca * py) + recipe.shift[1]
        t = apply_isometry(t, recipe.angle, (tx, ty))
    cfg = table_config(t)
    cfg["name"] = recipe.name
    return cfg


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tables"))
    out = Path(ap.parse_args().out)
    out.mkdir(parents=True, exist_ok=True)
    build_table(MIXED)  # validates shapes and the non-eclipse claim
    for cfg in [make(s) for s in RECIPES] + [MIXED]:
        (out / f"{cfg['name']}.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
        print("wrote", out / f"{cfg['name']}.json")


if __name__ == "__main__":
    main()
