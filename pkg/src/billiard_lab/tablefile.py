"""JSON table files.

Schema::

    {"name": "tri6",
     "non_eclipse": true,                       # optional: verify on load
     "obstacles": [
        {"id": 1, "kind": "circle", "center": [0, 0], "radius": 1},
        {"id": 2, "kind": "ellipse", "center": [6, 0], "semi_axes": [1.2, 0.8], "angle": 0.3},
        {"id": 3, "kind": "fourier", "center": [3, 5], "radius": 1, "fourier": [[2, 0.05, 0.0]]}],
     "bumps": [{"obstacle": 1, "start": 2.0, "end": 2.3, "amplitude": 1e-3, "order": 4}]}
"""

from __future__ import annotations

import json
from pathlib import Path

from .geometry import GeometryError, Table, build_table, table_config


def load_table(path, require_disjoint: bool = True) -> Table:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"table file not found: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise GeometryError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(cfg, dict):
        raise GeometryError(f"{path}: top level must be an object")
    cfg.setdefault("name", path.stem)
    return build_table(cfg, require_disjoint=require_disjoint)


def dump_table(table: Table) -> str:
    return json.dumps(table_config(table), indent=2, sort_keys=True) + "\n"


def save_table(table: Table, path) -> None:
    Path(path).write_text(dump_table(table))
