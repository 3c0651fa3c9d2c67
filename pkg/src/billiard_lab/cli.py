"""Command line runner.

Every subcommand reads table files, writes its artifacts into --out and
prints a short summary.  Exit codes: 0 success, 1 invalid input, 2 numeric
failure, 3 selftest failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import (EscapeError, FlowPoint, TangencyError, billiard_map, check_generating_relations,
                       eigen_moduli, jacobi_perp_propagator)
from .geometry import GeometryError, Table
from .orbits import GRAD_TOL, ConvergenceError, marked_length_spectrum, solve_periodic_orbit
from .symbolic import HeteroclinicCode, SymbolError, Word, enumerate_words
from .tablefile import load_table

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_SELFTEST = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    table: str
    table_b: Optional[str] = None
    max_len: int = 6
    depth: int = 4
    n_max: int = 8
    tol: float = 1e-9
    out: str = "out"
    workers: int = 1
    seed: int = 0
    word: Optional[str] = None
    x0: str = "12"
    x2: str = "13"
    alphabet: Optional[dict] = None
    amplitude: float = 1e-3
    obstacle: int = 1
    gap: str = "widest"
    verbose: bool = False
    extras: dict = field(default_factory=dict)

    def validate(self):
        if not Path(self.table).is_file():
            raise ConfigError(f"table file not found: {self.table}")
        if self.command == "compare":
            if self.table_b is None:
                raise ConfigError("compare needs --table-b")
            if not Path(self.table_b).is_file():
                raise ConfigError(f"table file not found: {self.table_b}")
        if not self.tol > 0:
            raise ConfigError("--tol must be positive")
        if not 2 <= self.max_len <= 16:
            raise ConfigError("--max-len must lie in [2, 16]")
        if not 0 <= self.depth <= 80:
            raise ConfigError("--depth must lie in [0, 80]")
        if not 0 <= self.n_max <= 24:
            raise ConfigError("--n-max must lie in [0, 24]")
        if self.workers < 1:
            raise ConfigError("--workers must be at least 1")
        if not math.isfinite(self.amplitude):
            raise ConfigError("--amplitude must be finite")
        if self.command == "orbit" and not self.word:
            raise ConfigError("orbit needs --word")


def _parse_alphabet(text):
    if text is None:
        return None
    try:
        pairs = [p.split(":") for p in text.split(",")]
        return {int(a): int(b) for a, b in pairs}
    except ValueError:
        raise ConfigError(f"cannot parse alphabet map {text!r}; expected e.g. 1:2,2:3,3:1") from None


def build_parser():
    p = argparse.ArgumentParser(prog="billiard-lab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["mls", "orbit", "quad", "compare", "dimension", "trace",
                                       "gap-experiment", "selftest"])
    p.add_argument("--table", required=True)
    p.add_argument("--table-b")
    p.add_argument("--max-len", type=int, default=6)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", default="out")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--word")
    p.add_argument("--x0", default="12", help="period-2 word of the first quad corner")
    p.add_argument("--x2", default="13", help="period-2 word of the opposite corner")
    p.add_argument("--alphabet", help="obstacle correspondence for compare, e.g. 1:3,2:1,3:2")
    p.add_argument("--amplitude", type=float, default=1e-3)
    p.add_argument("--obstacle", type=int, default=1)
    p.add_argument("--gap", default="widest", help="widest, interior or a rank")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(ns) -> ExperimentConfig:
    gap = ns.gap
    if gap not in ("widest", "interior"):
        try:
            gap = int(gap)
        except ValueError:
            raise ConfigError(f"bad --gap {ns.gap!r}") from None
    return ExperimentConfig(ns.command, ns.table, ns.table_b, ns.max_len, ns.depth, ns.n_max, ns.tol,
                            ns.out, ns.workers, ns.seed, ns.word, ns.x0, ns.x2, _parse_alphabet(ns.alphabet),
                            ns.amplitude, ns.obstacle, gap, ns.verbose)


def _write(out: Path, name: str, text: str):
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (Word, HeteroclinicCode)):
        return str(x)
    raise TypeError(type(x))


# ---------------------------------------------------------------------------
# subcommands


def cmd_mls(cfg, table, out):
    mls = marked_length_spectrum(table, cfg.max_len, workers=cfg.workers)
    _write(out, "mls.csv", mls.to_csv())
    bad = [k for k, e in mls.entries.items() if e.error]
    print(f"mls: {len(mls.entries)} necklaces up to length {cfg.max_len}, solver tol {GRAD_TOL:g}, "
          f"{len(bad)} failures")
    return EXIT_NUMERIC if bad else EXIT_OK


def cmd_orbit(cfg, table, out):
    orb = solve_periodic_orbit(table, cfg.word)
    rec = orb.to_record()
    rec["lyapunov"] = orb.lyapunov
    rec["solver_tol"] = GRAD_TOL
    _write(out, "orbit.json", _dumps(rec))
    print(f"orbit {cfg.word}: length {orb.length!r}, lyapunov {orb.lyapunov!r}, residual {orb.residual:.2e}")
    return EXIT_OK


def cmd_quad(cfg, table, out):
    from .displacement import full_report, standard_quad
    quad = standard_quad(cfg.x0, cfg.x2)
    rep = full_report(table, quad, depth=max(cfg.depth, 30), n_max=cfg.n_max)
    _write(out, "quad.json", rep.to_json() + "\n")
    _write(out, "sweep.csv", rep.sweep_csv())
    print(f"quad: H = {rep.H_holonomy!r} (tail {rep.H_holonomy_tail:.1e}), "
          f"area = {rep.area!r} (tol {rep.area_tolerance:.1e}), |area + H| = {abs(rep.area + rep.H):.2e}")
    return EXIT_OK


def comparison_text(table_a, table_b, pairing, iso, cons, dim_a=None, dim_b=None):
    lines = [f"verdict: {'PASS' if iso.passed else 'FAIL'}", ""]
    lines += ["[pairing]", f"tables: {table_a.name} vs {table_b.name}",
              f"alphabet: {', '.join(f'{a}->{b}' for a, b in sorted(pairing.alphabet_map.items()))}",
              f"max word length: {pairing.max_length}", f"pairs: {len(pairing.entries)}", ""]
    lines += ["[iso-length-spectrality]", f"tolerance: {iso.tolerance:g}", f"max |dL|: {iso.max_diff:.3e}"]
    if iso.no_data:
        lines.append("no data")
    for w, d in iso.worst:
        lines.append(f"mismatch {w}: {d:.6e}")
    for w in iso.failures:
        lines.append(f"solver failure: {w}")
    lines += ["", "[consequences]"]
    if cons.gated:
        lines.append("gated: iso-spectrality failed")
    else:
        lines += [f"bounces: {cons.bounces}", f"max |r_b - r_a|: {cons.max_r_diff:.3e}",
                  f"max |tau_b - tau_a|: {cons.max_tau_diff:.3e}",
                  "max curvature jet diffs: " + ", ".join(f"{x:.3e}" for x in cons.max_jet_diff),
                  f"max |DPsi - I|: {cons.max_dpsi_dist:.3e}"]
        for d in cons.dpsi:
            lines.append(f"DPsi {d['word']} at scale {d['scale']:.2e}: distance {d['distance_to_identity']:.3e}")
        for f in cons.failures:
            lines.append(f"failure: {f}")
    if dim_a is not None:
        lines += ["", "[dimension n=6]", f"{table_a.name}: delta_u {dim_a.delta_u:.10f} delta_s {dim_a.delta_s:.10f}",
                  f"{table_b.name}: delta_u {dim_b.delta_u:.10f} delta_s {dim_b.delta_s:.10f}"]
    return "\n".join(lines) + "\n"


def cmd_compare(cfg, table, out):
    from .rigidity import (bowen_dimension, conjugacy_consequence_report, iso_length_spectral_report,
                           match_periodic_orbits)
    table_b = load_table(cfg.table_b)
    pairing = match_periodic_orbits(table, table_b, cfg.alphabet, cfg.max_len)
    iso = iso_length_spectral_report(pairing, cfg.tol)
    cons = conjugacy_consequence_report(pairing, table, table_b, tolerance=cfg.tol)
    dims = bowen_dimension(table, 6), bowen_dimension(table_b, 6)
    _write(out, "compare.txt", comparison_text(table, table_b, pairing, iso, cons, *dims))
    _write(out, "pairing.csv", pairing.to_csv())
    _write(out, "consequences.json", cons.to_json() + "\n")
    print(f"compare: {'PASS' if iso.passed else 'FAIL'} (max |dL| {iso.max_diff:.2e}, tol {cfg.tol:g})")
    return EXIT_OK


def cmd_dimension(cfg, table, out):
    from .rigidity import bowen_dimension
    n = max(cfg.n_max, 2)
    est = bowen_dimension(table, n, sweep_from=2, slice_depth=cfg.depth if cfg.depth >= 6 else None)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["n", "delta_u", "delta_s", "abs_diff", "bisection_tol"])
    for k in range(2, n + 1):
        e = est if k == n else bowen_dimension(table, k)
        wr.writerow([k, repr(e.delta_u), repr(e.delta_s), f"{abs(e.delta_u - e.delta_s):.3e}", "1e-10"])
    _write(out, "dimension.csv", buf.getvalue())
    _write(out, "dimension.json", _dumps(asdict(est)))
    box = "" if est.box_dimension is None else f", box-counting {est.box_dimension:.6f} (depth {cfg.depth})"
    print(f"dimension: delta_u({n}) = {est.delta_u:.10f}, delta_s({n}) = {est.delta_s:.10f}{box}")
    return EXIT_OK


def cmd_trace(cfg, table, out):
    from .rigidity import trace_cover
    cover = trace_cover(table, max(cfg.depth, 1))
    _write(out, "trace.json", cover.to_json() + "\n")
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["obstacle", "gap_start", "gap_end", "width", "depth"])
    for oid, gaps in cover.gaps.items():
        for a, b in gaps:
            wr.writerow([oid, repr(float(a)), repr(float(b)), f"{b - a:.6e}", cover.depth])
    _write(out, "gaps.csv", buf.getvalue())
    print(f"trace: depth {cover.depth}, measure {cover.measure():.6e}, "
          f"{sum(len(v) for v in cover.intervals.values())} intervals")
    return EXIT_OK


def cmd_gap(cfg, table, out):
    from .rigidity import gap_perturbation_experiment
    rep = gap_perturbation_experiment(table, cfg.obstacle, max(cfg.depth, 1), cfg.amplitude, cfg.max_len, cfg.gap)
    _write(out, "gap.json", _dumps(asdict(rep)))
    print(f"gap-experiment: gap bump max |dL| {rep.max_change_gap:.2e}, control {rep.max_change_control:.2e}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# selftest


def _sample_points(table, rng, count, max_len=6):
    pts = []
    for w in enumerate_words(table.ids, max_len, necklaces=True, primitive=True):
        orb = solve_periodic_orbit(table, w)
        pts.extend(orb.points())
    idx = rng.permutation(len(pts))[:count]
    return [pts[i] for i in sorted(idx)]


def selftest_checks(table: Table, seed: int = 0):
    """(name, passed, detail) for the invariant suites on one table."""
    from .displacement import full_report, standard_quad
    from .rigidity import bowen_dimension
    rng = np.random.default_rng(seed)
    out = []
    pts = _sample_points(table, rng, 200)
    worst_det = worst_gen = worst_inv = 0.0
    twist = True
    for x in pts:
        step = billiard_map(table, x)
        worst_det = max(worst_det, abs(np.linalg.det(step.differential) - 1.0))
        twist &= step.differential[0, 1] < 0
        worst_gen = max(worst_gen, *check_generating_relations(table, x))
        back = billiard_map(table, step.image, "backward").image
        per = table.perimeter(x.obstacle)
        ds = (back.s - x.s + 0.5 * per) % per - 0.5 * per
        worst_inv = max(worst_inv, abs(ds) + abs(back.r - x.r))
    out.append(("symplectic", worst_det < 1e-9 and twist, f"max |det - 1| {worst_det:.1e}, twist {twist}"))
    out.append(("generating", worst_gen < 1e-7, f"max residual {worst_gen:.1e}"))
    out.append(("involution", worst_inv < 1e-9, f"max |F^-1 F x - x| {worst_inv:.1e}"))

    mls = marked_length_spectrum(table, 6)
    rev = max(abs(e.length - mls[e.word.reversed()].length) for e in mls.entries.values())
    out.append(("reversal", rev < 1e-10, f"max |L(w) - L(w reversed)| {rev:.1e}"))

    gaps = []
    for w in list(mls.entries)[:10]:
        orb = solve_periodic_orbit(table, w)
        prop = jacobi_perp_propagator(table, FlowPoint(orb.point(0)), orb.length).matrix
        # every free flight and collision factor is unimodular
        a = np.array(eigen_moduli(prop, det=1.0))
        b = np.array(eigen_moduli(orb.monodromy, det=orb.monodromy_det()))
        gaps.append(float(np.max(np.abs(a - b) / b)))
    out.append(("jacobi", max(gaps) < 1e-6, f"max relative eigenvalue gap {max(gaps):.1e}"))

    dd = max(abs(e.delta_u - e.delta_s) for e in (bowen_dimension(table, n) for n in range(2, 7)))
    out.append(("dimension-symmetry", dd < 1e-9, f"max |delta_u - delta_s| {dd:.1e}"))

    a, b, c = table.ids[:3]
    rep = full_report(table, standard_quad(f"{a}{b}", f"{a}{c}"), depth=40)
    gap = abs(rep.area + rep.H)
    out.append(("area-displacement", gap < max(1e-7, rep.area_tolerance), f"|area + H| {gap:.1e}"))
    hdiff = abs(rep.H_holonomy - rep.H_symmetric)
    out.append(("holonomy-routes", hdiff < 1e-10, f"|H_holonomy - H_symmetric| {hdiff:.1e}"))
    return out


def cmd_selftest(cfg, table, out):
    checks = selftest_checks(table, cfg.seed)
    lines = [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in checks]
    _write(out, "selftest.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_SELFTEST


COMMANDS = {"mls": cmd_mls, "orbit": cmd_orbit, "quad": cmd_quad, "compare": cmd_compare,
            "dimension": cmd_dimension, "trace": cmd_trace, "gap-experiment": cmd_gap,
            "selftest": cmd_selftest}


def _error(kind, msg, code):
    print(json.dumps({"error": kind, "message": msg, "exit_code": code}, sort_keys=True), file=sys.stderr)
    return code


def run(cfg: ExperimentConfig) -> int:
    try:
        cfg.validate()
        table = load_table(cfg.table)
    except (ConfigError, GeometryError, FileNotFoundError) as exc:
        return _error("validation", str(exc), EXIT_INPUT)
    out = Path(cfg.out)
    try:
        return COMMANDS[cfg.command](cfg, table, out)
    except (ConvergenceError, EscapeError, TangencyError, np.linalg.LinAlgError) as exc:
        return _error("numeric", str(exc), EXIT_NUMERIC)
    except (ConfigError, GeometryError, FileNotFoundError, ValueError) as exc:
        return _error("validation", str(exc), EXIT_INPUT)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except ConfigError as exc:
        return _error("validation", str(exc), EXIT_INPUT)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
