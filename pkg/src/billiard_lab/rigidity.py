"""Two-table comparisons and thermodynamic estimates.

Covers length-spectrum matching, the geometric consequences of a length
preserving conjugacy, Bowen dimension from periodic orbits, covers of the
projected trapped set and the gap perturbation experiment.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .dynamics import coordinate_jacobian, differential_matrix
from .geometry import BumpPerturbation, Table, curvature_jet, perturb_boundary
from .orbits import (ConvergenceError, PeriodicOrbit, cached_orbit, log_multiplier,
                     marked_length_spectrum, solve_codes, solve_periodic_orbit)
from .displacement import segment, stable_mate, unstable_mate, _window_for
from .symbolic import HeteroclinicCode, SymbolError, Word, enumerate_words


# ---------------------------------------------------------------------------
# pairing and iso-length-spectrality


@dataclass
class PairEntry:
    word: str
    word_b: str
    length_a: float
    length_b: float
    orbit_a: Optional[PeriodicOrbit] = field(default=None, repr=False)
    orbit_b: Optional[PeriodicOrbit] = field(default=None, repr=False)
    error: Optional[str] = None

    @property
    def diff(self):
        return abs(self.length_a - self.length_b)


@dataclass
class OrbitPairing:
    entries: list
    alphabet_map: dict
    max_length: int

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["word_a", "word_b", "length_a", "length_b", "abs_diff", "error"])
        for e in self.entries:
            wr.writerow([e.word, e.word_b, repr(e.length_a), repr(e.length_b), f"{e.diff:.3e}", e.error or ""])
        return buf.getvalue()


def match_centers(table_a: Table, table_b: Table) -> dict:
    """Alphabet map pairing obstacles of two congruent tables by position."""
    ca = {o.id: o.curve.center for o in table_a.obstacles}
    cb = {o.id: o.curve.center for o in table_b.obstacles}
    return {i: min(cb, key=lambda j: float(np.hypot(*(cb[j] - ca[i])))) for i in ca}


def match_periodic_orbits(table_a: Table, table_b: Table, alphabet_map: Optional[dict] = None,
                          max_length: int = 6) -> OrbitPairing:
    if len(table_a.obstacles) != len(table_b.obstacles):
        raise ValueError("tables must have the same number of obstacles")
    amap = dict(alphabet_map or {i: i for i in table_a.ids})
    if sorted(amap) != sorted(table_a.ids) or sorted(amap.values()) != sorted(table_b.ids):
        raise ValueError("alphabet map must be a bijection between obstacle ids")
    entries = []
    for w in enumerate_words(table_a.ids, max_length, periodic=True, necklaces=True, primitive=True):
        wb = w.relabeled(amap)
        oa = ob = None
        err = None
        try:
            oa = solve_periodic_orbit(table_a, w)
            ob = solve_periodic_orbit(table_b, wb)
        except (ConvergenceError, ValueError) as exc:
            err = str(exc)
        entries.append(PairEntry(str(w), str(wb), oa.length if oa else float("nan"),
                                 ob.length if ob else float("nan"), oa, ob, err))
    return OrbitPairing(entries, amap, max_length)


@dataclass
class IsoReport:
    passed: bool
    max_diff: float
    tolerance: float
    worst: list
    no_data: bool = False
    failures: list = field(default_factory=list)


def iso_length_spectral_report(pairing: OrbitPairing, tolerance: float = 1e-9) -> IsoReport:
    good = [e for e in pairing.entries if e.error is None]
    if not good:
        return IsoReport(False, float("nan"), tolerance, [], no_data=True)
    ranked = sorted(good, key=lambda e: -e.diff)
    mx = ranked[0].diff
    worst = [(e.word, e.diff) for e in ranked[:10]] if mx > tolerance else []
    fails = [e.word for e in pairing.entries if e.error is not None]
    return IsoReport(mx <= tolerance and not fails, mx, tolerance, worst, failures=fails)


# ---------------------------------------------------------------------------
# conjugacy consequences


@dataclass
class ConjugacyReport:
    gated: bool
    bounces: int = 0
    max_r_diff: float = float("nan")
    max_tau_diff: float = float("nan")
    max_jet_diff: list = field(default_factory=list)
    dpsi: list = field(default_factory=list)
    max_dpsi_dist: float = float("nan")
    boundary_map: list = field(default_factory=list)
    a_estimates: list = field(default_factory=list)
    b_estimates: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _neighbor_codes(code: HeteroclinicCode, depth: int, alphabet):
    out = []
    for m in (depth, depth + 1):
        for v in (0, 1):
            try:
                out.append(stable_mate(code, m, alphabet, v))
            except SymbolError:
                pass
            try:
                out.append(unstable_mate(code, m, alphabet, v))
            except SymbolError:
                pass
    return list(dict.fromkeys(out))


def _unwrap(d, per):
    return (d + 0.5 * per) % per - 0.5 * per


def whitney_derivative(table_a: Table, table_b: Table, code: HeteroclinicCode, amap: dict,
                       depth: int, window: int = 60):
    """Least-squares DPsi from matched Cantor neighbours of a coded point.

    Returns (matrix, scale) where scale is the largest neighbour distance.
    """
    nbrs = _neighbor_codes(code, depth, table_a.ids)
    codes_a = [code] + nbrs
    codes_b = [c.relabeled(amap) for c in codes_a]
    w = max(window, _window_for(0, *codes_a) + 30)
    sa, ra, _ = solve_codes(table_a, codes_a, w)
    sb, rb, _ = solve_codes(table_b, codes_b, w)
    pa = table_a.perimeter(code.symbol(0))
    pb = table_b.perimeter(amap[code.symbol(0)])
    da = np.stack([_unwrap(sa[1:] - sa[0], pa), ra[1:] - ra[0]], axis=1)
    db = np.stack([_unwrap(sb[1:] - sb[0], pb), rb[1:] - rb[0]], axis=1)
    # db ~ da @ M^T
    mt, *_ = np.linalg.lstsq(da, db, rcond=None)
    scale = float(np.max(np.hypot(da[:, 0], da[:, 1])))
    return mt.T, scale


def conjugacy_consequence_report(pairing: OrbitPairing, table_a: Table, table_b: Table,
                                 jet_order: int = 1, dpsi_depth: int = 4, dpsi_words: int = 6,
                                 tolerance: float = 1e-9) -> ConjugacyReport:
    iso = iso_length_spectral_report(pairing, tolerance)
    if not iso.passed:
        return ConjugacyReport(gated=True)
    rep = ConjugacyReport(gated=False)
    rdiff = tdiff = 0.0
    jets = np.zeros(jet_order + 1)
    amap = pairing.alphabet_map
    for e in pairing.entries:
        oa, ob = e.orbit_a, e.orbit_b
        rdiff = max(rdiff, float(np.max(np.abs(oa.r - ob.r))))
        tdiff = max(tdiff, float(np.max(np.abs(oa.taus - ob.taus))))
        for j in range(oa.period):
            ka = curvature_jet(table_a.obstacle(oa.obstacles[j]), oa.s[j], jet_order)
            kb = curvature_jet(table_b.obstacle(ob.obstacles[j]), ob.s[j], jet_order)
            jets = np.maximum(jets, np.abs(ka - kb))
            rep.bounces += 1
            if len(rep.boundary_map) < 200:
                rep.boundary_map.append([int(oa.obstacles[j]), float(oa.s[j]), int(ob.obstacles[j]), float(ob.s[j])])
            if abs(oa.r[j]) > 1e-8:
                rep.a_estimates.append(float(oa.r[j] / ob.r[j]))
    rep.max_r_diff, rep.max_tau_diff, rep.max_jet_diff = rdiff, tdiff, [float(x) for x in jets]
    worst = 0.0
    for e in pairing.entries[:dpsi_words]:
        code = HeteroclinicCode.periodic(e.word, 0)
        try:
            m, scale = whitney_derivative(table_a, table_b, code, amap, dpsi_depth)
        except (ConvergenceError, SymbolError) as exc:
            rep.failures.append(f"{e.word}: {exc}")
            continue
        dist = float(np.max(np.abs(m - np.eye(2))))
        worst = max(worst, dist)
        rep.b_estimates.append(float(m[1, 0]))
        rep.dpsi.append({"word": e.word, "matrix": m.tolist(), "scale": scale, "distance_to_identity": dist})
    rep.max_dpsi_dist = worst if rep.dpsi else float("nan")
    return rep


# ---------------------------------------------------------------------------
# Bowen dimension


@dataclass
class DimensionEstimate:
    n: int
    delta_u: float
    delta_s: float
    orbits: int
    sweep: dict = field(default_factory=dict)
    box_dimension: Optional[float] = None


def _inverse_log_expansion(orbit: PeriodicOrbit) -> float:
    """log spectral radius of the inverse monodromy, built from inverted steps."""
    m = np.eye(2)
    logc = 0.0
    for j in range(orbit.period):
        d = orbit.differential(j)
        m = m @ np.linalg.inv(d)
        c = float(np.max(np.abs(m)))
        m /= c
        logc += math.log(c)
    tr = abs(float(np.trace(m)))
    det = float(np.linalg.det(m))
    return logc + math.log(0.5 * (tr + math.sqrt(max(tr * tr - 4.0 * det, 0.0))))


def _necklace_data(table: Table, n: int, reverse: bool):
    """(multiplicity, log expansion) per periodic necklace of length exactly n."""
    rows = []
    for w in enumerate_words(table.ids, n, periodic=True, necklaces=True, min_length=n):
        root, k = w.primitive_root()
        if reverse:
            loglam = _inverse_log_expansion(cached_orbit(table, root.reversed()))
        else:
            loglam = log_multiplier(cached_orbit(table, root))
        rows.append((len(root), k * loglam))
    return rows


def _bowen_root(rows, tol=1e-10):
    mult = np.array([r[0] for r in rows], dtype=float)
    logl = np.array([r[1] for r in rows])
    logm = np.log(mult)

    def f(d):
        x = logm - d * logl
        mx = np.max(x)
        return mx + math.log(np.sum(np.exp(x - mx)))

    lo, hi = 0.0, 1.0
    while f(hi) > 0:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bowen_dimension(table: Table, n: int, sweep_from: Optional[int] = None,
                    slice_depth: Optional[int] = None) -> DimensionEstimate:
    """Root of sum over period-n words of Lambda^-delta = 1, on both time directions."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rows_u = _necklace_data(table, n, False)
    if len(rows_u) < 2:
        raise ValueError("too few periodic orbits at this depth")
    rows_s = _necklace_data(table, n, True)
    est = DimensionEstimate(n, _bowen_root(rows_u), _bowen_root(rows_s), len(rows_u))
    if sweep_from is not None:
        for k in range(sweep_from, n + 1):
            est.sweep[k] = _bowen_root(_necklace_data(table, k, False))
    if slice_depth is not None:
        base = HeteroclinicCode.periodic(Word(table.ids[:2]), 0)
        est.box_dimension = box_counting_dimension(stable_slice_points(table, base, slice_depth))[0]
    return est


def stable_slice_points(table: Table, base: HeteroclinicCode, depth: int, window: int = 30, batch: int = 1024):
    """s-values of trapped points on the local stable leaf of `base`.

    One point per admissible past of length `depth`; the future is that of
    `base`.  The leaf is a graph over s, so s serves as its parameter.
    """
    keep = base.window(0, base.future_start + len(base.future) - 1)
    codes = []
    for w in enumerate_words(table.ids, depth, periodic=False, min_length=depth):
        if w[-1] == keep[0]:
            continue
        e = next(a for a in table.ids if a != w[0])
        f = next(a for a in table.ids if a != e)
        codes.append(HeteroclinicCode(Word((f, e)), w.symbols + keep, depth, base.future))
    out = [solve_codes(table, codes[i:i + batch], window + depth)[0] for i in range(0, len(codes), batch)]
    return np.concatenate(out)


def box_counting_dimension(points, scales=None):
    """Slope of log N(eps) vs log(1/eps) over dyadic boxes."""
    pts = np.sort(np.asarray(points, dtype=float))
    pts = pts - pts[0]
    if scales is None:
        span = pts[-1]
        gaps = np.diff(pts)
        finest = max(np.median(gaps) * 4, span * 1e-12)
        kmax = int(math.floor(math.log2(span / finest)))
        scales = span * 2.0 ** -np.arange(2, kmax + 1)
    counts = np.array([np.unique(np.floor(pts / e)).size for e in scales])
    slope, _ = np.polyfit(np.log(1.0 / scales), np.log(counts), 1)
    return float(slope), np.asarray(scales), counts


# ---------------------------------------------------------------------------
# trace covers and gaps


@dataclass
class TraceCover:
    depth: int
    intervals: dict
    gaps: dict
    contraction: float
    failures: list = field(default_factory=list)

    def measure(self, oid=None):
        ids = [oid] if oid is not None else list(self.intervals)
        return float(sum(b - a for i in ids for a, b in self.intervals[i]))

    def contains(self, oid, s, per):
        for a, b in self.intervals[oid]:
            if a <= s <= b or a <= s + per <= b or a <= s - per <= b:
                return True
        return False

    def to_json(self):
        return json.dumps({"depth": self.depth, "contraction": self.contraction,
                           "intervals": {str(k): v for k, v in self.intervals.items()},
                           "gaps": {str(k): v for k, v in self.gaps.items()}}, indent=2)


def _variants(word, alphabet):
    """Codes realizing `word`, extended on each side by every admissible 2-periodic tail.

    The s-extremes of a cylinder sit at such alternating extensions; the
    hull over them is inflated afterwards for what lies deeper.
    """
    m = len(word) // 2
    pasts = [Word((c, b)) for b in alphabet if b != word[0] for c in alphabet if c != b]
    futures = [Word((a, c)) for a in alphabet if a != word[-1] for c in alphabet if c != a]
    return [HeteroclinicCode(p, tuple(word), m, f) for p in pasts for f in futures]


def trace_cover(table: Table, depth: int, window: int = 30) -> TraceCover:
    """Cover of the projection of the trapped set by depth-(2m+1) cylinders."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    ids = table.ids
    lam_min = min(cached_orbit(table, w).lyapunov
                  for w in enumerate_words(ids, 3, necklaces=True, primitive=True))
    theta = math.exp(-lam_min)
    words = [w.symbols for w in enumerate_words(ids, 2 * depth + 1, periodic=False, min_length=2 * depth + 1)]
    codes, owner = [], []
    for k, w in enumerate(words):
        for c in _variants(w, ids):
            codes.append(c)
            owner.append(k)
    s_all, _, _ = solve_codes(table, codes, window + depth)
    owner = np.array(owner)
    hulls = {i: [] for i in ids}
    for k, w in enumerate(words):
        oid = w[depth]
        per = table.perimeter(oid)
        vals = s_all[owner == k]
        ref = vals[0]
        v = ref + _unwrap(vals - ref, per)
        lo, hi = float(v.min()), float(v.max())
        pad = (hi - lo) * theta / (1 - theta) + 1e-12
        hulls[oid].append([lo - pad, hi + pad])
    intervals, gaps = {}, {}
    for oid in ids:
        per = table.perimeter(oid)
        merged = []
        for a, b in sorted(hulls[oid]):
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        intervals[oid] = merged
        g = []
        for (a0, b0), (a1, b1) in zip(merged, merged[1:] + [[merged[0][0] + per, 0]]):
            if a1 > b0:
                g.append([b0, a1])
        gaps[oid] = g
    return TraceCover(depth, intervals, gaps, theta)


def choose_gap(cover: TraceCover, oid: int, which="widest"):
    """A gap of the cover on one obstacle.

    "widest" is the gap facing away from the rest of the table, "interior"
    the widest of the others; an integer picks by rank in decreasing width.
    """
    gaps = sorted(cover.gaps[oid], key=lambda g: g[1] - g[0], reverse=True)
    rank = {"widest": 0, "interior": 1}.get(which, which)
    if not isinstance(rank, int) or rank >= len(gaps):
        raise ValueError(f"no gap {which!r} at this depth")
    return gaps[rank]


@dataclass
class GapReport:
    obstacle: int
    depth: int
    gap: list
    support: list
    control_support: list
    amplitude: float
    max_length: int
    max_change_gap: float
    max_change_control: float
    worst_word_gap: str
    worst_word_control: str
    bounces_in_support: int

    def to_json(self):
        return json.dumps(asdict(self), indent=2)


def gap_perturbation_experiment(table: Table, oid: int = 1, depth: int = 4, amplitude: float = 1e-3,
                                max_length: int = 8, gap_choice="widest",
                                support_fraction: float = 1.0 / 3.0) -> GapReport:
    """Bump the boundary inside a cover gap and, as a control, on the cover itself."""
    if not 0 < support_fraction <= 1.0 / 3.0:
        raise ValueError("support must be at most a third of the gap")
    cover = trace_cover(table, depth)
    per = table.perimeter(oid)
    gap = choose_gap(cover, oid, gap_choice)
    half = 0.5 * (gap[1] - gap[0]) * support_fraction
    if not half > 1e-9:
        raise ValueError("gap too small for the requested support")
    mid = 0.5 * (gap[0] + gap[1])
    support = [mid - half, mid + half]
    iv = max(cover.intervals[oid], key=lambda v: v[1] - v[0])
    cmid = 0.5 * (iv[0] + iv[1])
    control = [cmid - half, cmid + half]
    words = [w for w in enumerate_words(table.ids, max_length, necklaces=True, primitive=True)]
    base = {str(w): cached_orbit(table, w) for w in words}
    inside = 0
    for o in base.values():
        for j in range(o.period):
            if int(o.obstacles[j]) == oid and (o.s[j] - support[0]) % per <= support[1] - support[0]:
                inside += 1

    def run(sup):
        start = sup[0] % per
        pert = perturb_boundary(table, BumpPerturbation(oid, start, start + (sup[1] - sup[0]), amplitude))
        new = marked_length_spectrum(pert, max_length).lengths()
        diffs = {k: abs(new[k] - base[k].length) for k in base}
        k = max(diffs, key=diffs.get)
        return diffs[k], k

    dg, wg = run(support)
    dc, wc = run(control)
    return GapReport(oid, depth, gap, support, control, amplitude, max_length, dg, dc, wg, wc, inside)


# ---------------------------------------------------------------------------
# unstable density ratio


def unstable_expansions(table: Table, code: HeteroclinicCode, depth: int, window: Optional[int] = None):
    """Expansion factors along E^u for the steps ending at positions -depth+1 .. 0.

    Entry k (k = 1..depth) is |DF v| for the unit unstable vector v at
    position -k, i.e. the reciprocal of |DF^{-1}| on E^u at position -k+1.
    """
    n = window or _window_for(depth, code) + 10
    seg = segment(table, code, n)
    syms, s, r = seg.obstacles, seg.s, seg.r
    k = table.frames(syms, s)[3]
    nu = np.sqrt(1.0 - r * r)
    # seed with the periodic unstable direction at the far end
    orb = cached_orbit(table, code.past)
    idx = (code.center - n) % orb.period
    jac = coordinate_jacobian(orb.monodromy_at(idx))
    vals, vecs = np.linalg.eig(jac)
    v = np.real(vecs[:, int(np.argmax(np.abs(vals)))])
    v /= np.hypot(*v)
    out = {}
    for i in range(0, n):
        d = coordinate_jacobian(differential_matrix(seg.taus[i], k[i], k[i + 1], nu[i], nu[i + 1]))
        w = d @ v
        g = float(np.hypot(*w))
        pos = i - n
        if -depth <= pos <= -1:
            out[-pos] = g
        v = w / g
    return np.array([out[j] for j in range(1, depth + 1)])


@dataclass
class DensityRatio:
    value: float
    depth: int
    tail: float
    log_terms: np.ndarray = field(repr=False)


def unstable_density_ratio(table: Table, x: HeteroclinicCode, y: HeteroclinicCode, delta: float,
                           depth: int = 40) -> DensityRatio:
    """prod_{k>=1} (|DF^-1|E^u at F^-k y| / |DF^-1|E^u at F^-k x|)^delta."""
    if x.window(-depth - 30, 0) != y.window(-depth - 30, 0):
        raise SymbolError("points do not share their past")
    if x == y:
        return DensityRatio(1.0, depth, 0.0, np.zeros(depth))
    ex = unstable_expansions(table, x, depth + 1)
    ey = unstable_expansions(table, y, depth + 1)
    # |DF^-1 on E^u at F^-k z| = 1 / expansion of the step F^-k-1 z -> F^-k z
    terms = delta * (np.log(ex[1:]) - np.log(ey[1:]))
    a = np.abs(terms)
    tail = float(a[-1] / (1 - min(0.9, a[-1] / a[-2]))) if a[-2] > 0 else 0.0
    return DensityRatio(float(math.exp(np.sum(terms))), depth, tail, terms)


def one_step_factor(table: Table, x: HeteroclinicCode, y: HeteroclinicCode, delta: float) -> float:
    """(|DF^-1|E^u at F^-1 y| / |DF^-1|E^u at F^-1 x|)^delta."""
    ex = unstable_expansions(table, x, 2)
    ey = unstable_expansions(table, y, 2)
    return float((ex[1] / ey[1]) ** delta)
