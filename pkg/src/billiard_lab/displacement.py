"""Quadrilaterals, holonomies and temporal displacement.

Corners are certified by their codes: two points lie on one stable leaf when
their codes agree from position 0 on, and on one unstable leaf when they agree
up to position 0.  Return times along a coded point are the chord lengths of
its solved segment, so every series below is a sum of chord differences.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .dynamics import PhasePoint
from .geometry import Table
from .orbits import OrbitSegment, cached_orbit, leaf_graph, solve_anchored_segment, solve_periodic_orbit
from .symbolic import HeteroclinicCode, SymbolError, bracket, bridge_word

DEFAULT_DEPTH = 60
MARGIN = 30
_GLX, _GLW = np.polynomial.legendre.leggauss(10)


class LeafError(ValueError):
    """Two points claimed to share a leaf do not share the required half code."""


def segment(table: Table, code: HeteroclinicCode, window: int) -> OrbitSegment:
    cache = table.__dict__.setdefault("_segment_cache", {})
    key = (code, window)
    if key not in cache:
        cache[key] = solve_anchored_segment(table, code, window)
    return cache[key]


def _window_for(depth, *codes):
    need = max(max(c.future_start, -c.past_end) for c in codes)
    return depth + MARGIN + need


# ---------------------------------------------------------------------------
# holonomies


@dataclass
class Holonomy:
    value: float
    depth: int
    tail: float
    terms: np.ndarray = field(repr=False)


def _tail_bound(terms, scale=10.0):
    """Geometric bound on the omitted terms, fitted to the terms above roundoff."""
    a = np.abs(terms)
    floor = 64 * np.finfo(float).eps * scale
    sig = np.nonzero(a > floor)[0]
    if sig.size == 0:
        return 0.0
    k = sig[-1]
    lo = sig[max(0, sig.size - 10)]
    if k == lo:
        return float(a[k])
    q = (a[k] / a[lo]) ** (1.0 / (k - lo))
    if q >= 1:
        return float("inf")
    return float(a[k] * q ** (len(a) - k) / (1 - q))


def _check_agree(a, b, lo, hi, what):
    if a.window(lo, hi) != b.window(lo, hi):
        raise LeafError(f"points do not share a {what} leaf")


def stable_holonomy(table: Table, z0: HeteroclinicCode, z1: HeteroclinicCode,
                    depth: int = DEFAULT_DEPTH) -> Holonomy:
    """sum_{j>=0} tau(F^j z1) - tau(F^j z0) for codes sharing their future."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    _check_agree(z0, z1, 0, depth + MARGIN + max(z0.future_start, z1.future_start), "stable")
    if z0 == z1:
        return Holonomy(0.0, depth, 0.0, np.zeros(depth))
    n = _window_for(depth, z0, z1)
    a, b = segment(table, z0, n), segment(table, z1, n)
    terms = np.array([b.tau(j) - a.tau(j) for j in range(depth)])
    return Holonomy(float(np.sum(terms)), depth, _tail_bound(terms), terms)


def unstable_holonomy(table: Table, z0: HeteroclinicCode, z1: HeteroclinicCode,
                      depth: int = DEFAULT_DEPTH) -> Holonomy:
    """sum_{j<0} tau(F^j z0) - tau(F^j z1) for codes sharing their past."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    _check_agree(z0, z1, -depth - MARGIN - max(-z0.past_end, -z1.past_end), 0, "unstable")
    if z0 == z1:
        return Holonomy(0.0, depth, 0.0, np.zeros(depth))
    n = _window_for(depth, z0, z1)
    a, b = segment(table, z0, n), segment(table, z1, n)
    terms = np.array([a.tau(-j) - b.tau(-j) for j in range(1, depth + 1)])
    return Holonomy(float(np.sum(terms)), depth, _tail_bound(terms), terms)


# ---------------------------------------------------------------------------
# quadrilaterals


@dataclass(frozen=True)
class Quadrilateral:
    """Four coded corners.

    orientation "su": x1 on the stable leaf of x0, x2 on the unstable leaf of
    x1, x3 on the stable leaf of x2, x0 on the unstable leaf of x3.
    orientation "us" swaps the roles of the two laminations.
    """

    corners: tuple
    orientation: str = "su"

    def __post_init__(self):
        if len(self.corners) != 4:
            raise ValueError("a quadrilateral has four corners")
        if self.orientation not in ("su", "us"):
            raise ValueError("orientation must be 'su' or 'us'")
        c = self.corners
        kinds = self.edge_kinds()
        for i, kind in enumerate(kinds):
            a, b = c[i], c[(i + 1) % 4]
            lo, hi = (0, 400) if kind == "s" else (-400, 0)
            if a.window(lo, hi) != b.window(lo, hi):
                raise LeafError(f"edge {i} -> {(i + 1) % 4} is not on a common {kind}-leaf")
        if len({x.symbol(0) for x in c}) != 1:
            raise ValueError("corners must lie on one obstacle")

    def edge_kinds(self):
        return ("s", "u", "s", "u") if self.orientation == "su" else ("u", "s", "u", "s")

    @classmethod
    def from_codes(cls, x0: HeteroclinicCode, x2: HeteroclinicCode) -> "Quadrilateral":
        """x1 = [x0, x2] (future of x0, past of x2) and x3 = [x2, x0]."""
        return cls((x0, bracket(x0, x2), x2, bracket(x2, x0)), "su")

    def reversed(self) -> "Quadrilateral":
        """Same corners traversed the other way round (x0, x3, x2, x1)."""
        c = self.corners
        return Quadrilateral((c[0], c[3], c[2], c[1]), "us" if self.orientation == "su" else "su")

    def reflected(self) -> "Quadrilateral":
        """Image under the time-reversal involution (s, r) -> (s, -r)."""
        return Quadrilateral(tuple(c.reversed() for c in self.corners),
                             "us" if self.orientation == "su" else "su")

    @property
    def obstacle(self):
        return self.corners[0].symbol(0)

    def points(self, table: Table, window: int = 40):
        n = max(window, _window_for(0, *self.corners))
        return [segment(table, c, n).center for c in self.corners]


def standard_quad(x0_word="12", x2_word="13", index=0) -> Quadrilateral:
    """Quadrilateral spanned by two period-2 orbits through a common obstacle."""
    x0 = HeteroclinicCode.periodic(x0_word, index)
    x2 = HeteroclinicCode.periodic(x2_word, index)
    return Quadrilateral.from_codes(x0, x2)


def nested_quad(base_word="12", other_word="13", depth=2) -> Quadrilateral:
    """Quad between the periodic point of base_word and a point that follows
    the same orbit on positions -depth..depth and other_word outside.

    Its size shrinks roughly by the expansion rate per unit of depth.
    """
    x0 = HeteroclinicCode.periodic(base_word, 0)
    blk = x0.window(-depth, depth)
    past = _flank(other_word, blk[0], before=True)
    fut = _flank(other_word, blk[-1], before=False)
    x2 = HeteroclinicCode(past, blk, depth, fut)
    return Quadrilateral.from_codes(x0, x2)


def _flank(word, edge, before):
    from .symbolic import Word
    w = Word.parse(word)
    for k in range(len(w)):
        cand = w.rotated(k)
        if before and cand[-1] != edge:
            return cand
        if not before and cand[0] != edge:
            return cand
    raise SymbolError("no admissible flank")


# ---------------------------------------------------------------------------
# temporal displacement


@dataclass
class DisplacementReport:
    corners: list
    orientation: str
    H_holonomy: float
    H_holonomy_tail: float
    H_symmetric: float
    H_symmetric_window: int
    holonomies: list
    depth: int
    area: Optional[float] = None
    area_tolerance: Optional[float] = None
    arc_integrals: Optional[list] = None
    approximants: list = field(default_factory=list)

    @property
    def H(self):
        return self.H_holonomy

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def sweep_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n", "bounces", "orbit_length", "approximant", "error_vs_H", "residual"])
        for a in self.approximants:
            wr.writerow([a["n"], a["bounces"], repr(a["orbit_length"]), repr(a["approximant"]),
                         f"{a['approximant'] - self.H_holonomy:.3e}", f"{a['residual']:.3e}"])
        return buf.getvalue()


def _edge_holonomy(table, kind, a, b, depth):
    return stable_holonomy(table, a, b, depth) if kind == "s" else unstable_holonomy(table, a, b, depth)


def symmetric_sum(table: Table, quad: Quadrilateral, n: int) -> float:
    """-tau^n(x0) + tau^n(x1) - tau^n(x2) + tau^n(x3), tau^n = sum_{-n<=j<n} tau(F^j x)."""
    c = quad.corners
    w = _window_for(n, *c) + 5
    sums = []
    for code in c:
        seg = segment(table, code, w)
        sums.append(sum(seg.tau(j) for j in range(-n, n)))
    sign = 1.0 if quad.orientation == "su" else -1.0
    return sign * (-sums[0] + sums[1] - sums[2] + sums[3])


def temporal_displacement(table: Table, quad: Quadrilateral, depth: int = DEFAULT_DEPTH,
                          symmetric_window: Optional[int] = None) -> DisplacementReport:
    c = quad.corners
    hol = [_edge_holonomy(table, k, c[i], c[(i + 1) % 4], depth)
           for i, k in enumerate(quad.edge_kinds())]
    h = float(sum(x.value for x in hol))
    tail = float(sum(x.tail for x in hol))
    sw = symmetric_window or depth + 10
    hs = symmetric_sum(table, quad, sw)
    pts = quad.points(table)
    return DisplacementReport(
        corners=[{"code": str(code), "obstacle": p.obstacle, "s": p.s, "r": p.r} for code, p in zip(c, pts)],
        orientation=quad.orientation, H_holonomy=h, H_holonomy_tail=tail, H_symmetric=hs,
        H_symmetric_window=sw, holonomies=[x.value for x in hol], depth=depth)


# ---------------------------------------------------------------------------
# periodic approximation


def periodic_approx_displacement(table: Table, quad: Quadrilateral, n: int):
    """Approximant of H from the bridge orbit with 2 + 8n bounces.

    Needs period-2 anchors x0, x2.  With tau0, tau2 their chord lengths the
    approximant is T(orbit) - (4n+1)(tau0 + tau2) - (tau2 - tau0); the last
    term accounts for the second corner block being shifted by one bounce.
    Returns (approximant, orbit).
    """
    x0, x1, x2, x3 = quad.corners
    if quad.orientation != "su":
        raise ValueError("periodic approximation is defined for 'su' quadrilaterals")
    w0, w2 = _period2_word(x0), _period2_word(x2)
    word = bridge_word(x1, x3, n)
    orb = solve_periodic_orbit(table, word)
    tau0 = cached_orbit(table, w0).length / 2.0
    tau2 = cached_orbit(table, w2).length / 2.0
    approx = orb.length - (4 * n + 1) * (tau0 + tau2) - (tau2 - tau0)
    return approx, orb


def _period2_word(code: HeteroclinicCode):
    w = code.window(0, 1)
    if code.window(-40, 40) != tuple(w[j % 2] for j in range(-40, 41)):
        raise ValueError("periodic approximation needs period-2 corner orbits x0 and x2")
    return "".join(str(x) for x in w)


def approximant_sweep(table: Table, quad: Quadrilateral, n_max: int, report: Optional[DisplacementReport] = None):
    out = []
    for n in range(1, n_max + 1):
        a, orb = periodic_approx_displacement(table, quad, n)
        out.append({"n": n, "bounces": orb.period, "orbit_length": orb.length,
                    "approximant": a, "residual": orb.residual})
    if report is not None:
        report.approximants = out
    return out


# ---------------------------------------------------------------------------
# area


def _unwrap(s, ref, per):
    return ref + ((s - ref + 0.5 * per) % per - 0.5 * per)


def _gl_panels(f, a, b, panels):
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * _GLX[None, :]).ravel()
    fx = f(x).reshape(panels, -1)
    return float(np.sum(half * (fx @ _GLW)))


@dataclass
class AreaResult:
    area: float
    tolerance: float
    arc_integrals: list


def quadrilateral_area(table: Table, quad: Quadrilateral, panels: int = 4, depth: int = 40) -> AreaResult:
    """Circulation of -r ds around the four leaf arcs."""
    c = quad.corners
    pts = quad.points(table)
    per = table.perimeter(quad.obstacle)
    s_ref = pts[0].s
    ss = [_unwrap(p.s, s_ref, per) for p in pts]
    r_ref = pts[0].r
    total = 0.0
    err = 0.0
    arcs = []
    for i, kind in enumerate(quad.edge_kinds()):
        a, b = ss[i], ss[(i + 1) % 4]
        if a == b:
            arcs.append(0.0)
            continue
        leaf = leaf_graph(table, c[i], kind, depth)
        shift = leaf.base_s - _unwrap(leaf.base_s, s_ref, per)

        def integrand(x, leaf=leaf, shift=shift):
            # the constant r_ref integrates to zero around the loop
            return -(leaf.r(x + shift) - r_ref)

        coarse = _gl_panels(integrand, a, b, panels)
        fine = _gl_panels(integrand, a, b, 2 * panels)
        arcs.append(fine)
        total += fine
        err += abs(fine - coarse)
    return AreaResult(total, err + 1e-14, arcs)


def full_report(table: Table, quad: Quadrilateral, depth: int = DEFAULT_DEPTH, n_max: int = 0,
                panels: int = 4) -> DisplacementReport:
    rep = temporal_displacement(table, quad, depth)
    ar = quadrilateral_area(table, quad, panels)
    rep.area, rep.area_tolerance, rep.arc_integrals = ar.area, ar.tolerance, ar.arc_integrals
    if n_max:
        approximant_sweep(table, quad, n_max, rep)
    return rep


# ---------------------------------------------------------------------------
# small quadrilaterals


@dataclass
class SmallQuadReport:
    depths: list
    side_s: list
    side_u: list
    area_a: list
    area_b: list
    side_ratio: list
    area_ratio: list
    ratio_error: list
    normalized_area: list
    holonomy_derivative: list

    def to_json(self):
        return json.dumps(asdict(self), indent=2)


def _two_flank(first, alphabet, avoid):
    """2-periodic flank whose symbol adjacent to the block is `first`."""
    other = next(a for a in alphabet if a != first and a not in avoid)
    return other, first


def stable_mate(x0: HeteroclinicCode, depth: int, alphabet, variant: int = 0) -> HeteroclinicCode:
    """Code agreeing with x0 exactly on [-depth, oo)."""
    from .symbolic import Word
    keep = x0.window(-depth, x0.future_start + len(x0.future) - 1)
    choices = [a for a in alphabet if a != keep[0] and a != x0.symbol(-depth - 1)]
    if not choices:
        raise SymbolError("no symbol to diverge with")
    d = choices[variant % len(choices)]
    e, d = _two_flank(d, alphabet, ())
    past = Word((e, d))
    return HeteroclinicCode(past, keep, depth, x0.future)


def unstable_mate(x0: HeteroclinicCode, depth: int, alphabet, variant: int = 0) -> HeteroclinicCode:
    """Code agreeing with x0 exactly on (-oo, depth]."""
    from .symbolic import Word
    lo = x0.past_end - len(x0.past) + 1
    keep = x0.window(lo, depth)
    choices = [a for a in alphabet if a != keep[-1] and a != x0.symbol(depth + 1)]
    if not choices:
        raise SymbolError("no symbol to diverge with")
    d = choices[variant % len(choices)]
    e, d = _two_flank(d, alphabet, ())
    fut = Word((d, e))
    past = x0.past.rotated(lo + x0.center)
    return HeteroclinicCode(past, keep, -lo, fut)


def small_quad_asymptotics(table: Table, x0: HeteroclinicCode, depths, panels: int = 4) -> SmallQuadReport:
    """Area ratio law for nested small quadrilaterals at x0.

    At depth m the two stable-side corners x_a, x_b and the unstable-side
    corner y0 agree with x0 on [-m, m]; their distances shrink by about the
    expansion rate per unit of m.
    """
    rep = SmallQuadReport([], [], [], [], [], [], [], [], [], [])
    per_obstacle = None
    for m in depths:
        xa = stable_mate(x0, m, table.ids)
        xb = stable_mate(x0, m + 1, table.ids)
        y0 = unstable_mate(x0, m, table.ids)
        pts = {}
        for name, code in (("x0", x0), ("xa", xa), ("xb", xb), ("y0", y0)):
            pts[name] = segment(table, code, _window_for(0, code) + 40).center
        if per_obstacle is None:
            per_obstacle = table.perimeter(pts["x0"].obstacle)
        s0 = pts["x0"].s
        ds = {k: _unwrap(p.s, s0, per_obstacle) - s0 for k, p in pts.items()}
        qa = Quadrilateral((x0, xa, bracket(y0, xa), y0))
        qb = Quadrilateral((x0, xb, bracket(y0, xb), y0))
        area_a = quadrilateral_area(table, qa, panels).area
        area_b = quadrilateral_area(table, qb, panels).area
        side_ratio = ds["xb"] / ds["xa"]
        area_ratio = area_b / area_a
        rep.depths.append(m)
        rep.side_s.append(ds["xa"])
        rep.side_u.append(ds["y0"])
        rep.area_a.append(area_a)
        rep.area_b.append(area_b)
        rep.side_ratio.append(side_ratio)
        rep.area_ratio.append(area_ratio)
        rep.ratio_error.append(abs(area_ratio - side_ratio) / abs(side_ratio))
        # ds ^ dr of the two sides: the area density in (s, r)
        cross = ds["xa"] * (pts["y0"].r - pts["x0"].r) - ds["y0"] * (pts["xa"].r - pts["x0"].r)
        rep.normalized_area.append(abs(area_a / cross))
        rep.holonomy_derivative.append(holonomy_derivative(table, x0, y0, xa))
    return rep


def holonomy_derivative(table: Table, x0: HeteroclinicCode, y0: HeteroclinicCode, x1: HeteroclinicCode,
                        depth: int = 40) -> float:
    """Ratio of the gaps between the stable leaves of y0 and x0, at s(x1) over s(x0)."""
    ly = leaf_graph(table, y0, "s", depth)
    lx = leaf_graph(table, x0, "s", depth)
    per = table.perimeter(x0.symbol(0))
    p0 = segment(table, x0, _window_for(0, x0) + 40).center
    p1 = segment(table, x1, _window_for(0, x1) + 40).center
    s1 = _unwrap(p1.s, p0.s, per)

    def gap(s):
        sy = _unwrap(s, ly.base_s, per)
        sx = _unwrap(s, lx.base_s, per)
        return float(ly.r(sy)[0] - lx.r(sx)[0])

    return gap(s1) / gap(p0.s)
