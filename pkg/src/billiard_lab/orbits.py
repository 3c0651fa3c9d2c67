"""Variational orbit solvers.

Periodic orbits and heteroclinic segments are critical points of the total
chord length sum_j h(s_j, s_{j+1}); the Hessian is (cyclic) tridiagonal so
every Newton step is linear in the word length.  Stable and unstable leaves
are graphs r(s) obtained by clamping one end of a chain at the base point
and the other on the limiting periodic orbit.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .dynamics import (EscapeError, PhasePoint, billiard_map, coordinate_jacobian,
                       differential_matrix)
from .geometry import Table
from .symbolic import HeteroclinicCode, SymbolError, Word, enumerate_words, require_admissible

GRAD_TOL = 1e-12
MAX_NEWTON = 60
DENSE_LIMIT = 400


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (best residual {residual:.3e})")
        self.residual = residual


# ---------------------------------------------------------------------------
# chord derivatives


@dataclass
class Links:
    """Chord length and its first and second partials for a batch of links."""
    h: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d11: np.ndarray
    d22: np.ndarray
    d12: np.ndarray
    k1: np.ndarray
    k2: np.ndarray


def _dot(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]


def link_data(table: Table, oa, sa, ob, sb) -> Links:
    p, t, n, k = table.frames(oa, sa)
    q, t2, n2, k2 = table.frames(ob, sb)
    d = q - p
    h = np.hypot(d[..., 0], d[..., 1])
    u = d / h[..., None]
    ut, ut2 = _dot(u, t), _dot(u, t2)
    return Links(
        h=h,
        d1=-ut,
        d2=ut2,
        d11=(1.0 - ut * ut) / h + k * _dot(u, n),
        d22=(1.0 - ut2 * ut2) / h - k2 * _dot(u, n2),
        d12=-(_dot(t, t2) - ut * ut2) / h,
        k1=k,
        k2=k2,
    )


# ---------------------------------------------------------------------------
# initialization


def _boundary_grid(table: Table, n=720):
    grid = table.__dict__.get("_boundary_grid")
    if grid is None:
        grid = {}
        for ob in table.obstacles:
            s = np.linspace(0.0, ob.perimeter, n, endpoint=False)
            grid[ob.id] = (s, ob.curve.frames(s)[0])
        table.__dict__["_boundary_grid"] = grid
    return grid


def _seg_dist(pts, a, b):
    ab = b - a
    den = float(ab @ ab)
    if den == 0.0:
        return np.hypot(*(pts - a).T)
    lam = np.clip((pts - a) @ ab / den, 0.0, 1.0)
    foot = a + lam[:, None] * ab
    return np.hypot(*(pts - foot).T)


def initial_sites(table: Table, symbols, cyclic=True):
    """Boundary point of each obstacle nearest to the segment between its
    neighbours' centers."""
    grid = _boundary_grid(table)
    n = len(symbols)
    out = np.empty(n)
    for j, o in enumerate(symbols):
        if cyclic:
            prev, nxt = symbols[j - 1], symbols[(j + 1) % n]
        else:
            prev = symbols[j - 1] if j > 0 else symbols[j + 1]
            nxt = symbols[j + 1] if j + 1 < n else symbols[j - 1]
        out[j] = _triple_site(table, grid, prev, o, nxt)
    return out


def _triple_site(table, grid, prev, o, nxt):
    cache = table.__dict__.setdefault("_triple_sites", {})
    key = (prev, o, nxt)
    if key not in cache:
        a = table.obstacle(prev).curve.center
        b = table.obstacle(nxt).curve.center
        s, pts = grid[o]
        cache[key] = s[int(np.argmin(_seg_dist(pts, a, b)))]
    return cache[key]


# ---------------------------------------------------------------------------
# linear algebra


def _cyclic_solve(diag, off, rhs):
    """Solve the symmetric cyclic tridiagonal system.

    off[j] couples j and j+1 (mod p).
    """
    p = diag.size
    if p == 2:
        a = np.array([[diag[0], off[0] + off[1]], [off[0] + off[1], diag[1]]])
        return np.linalg.solve(a, rhs)
    if p <= DENSE_LIMIT:
        a = np.diag(diag) + np.diag(off[:-1], 1) + np.diag(off[:-1], -1)
        a[0, -1] += off[-1]
        a[-1, 0] += off[-1]
        return np.linalg.solve(a, rhs)
    # Sherman-Morrison on the corner coupling
    gamma = -diag[0]
    c = off[-1]
    bd = diag.copy()
    bd[0] -= gamma
    bd[-1] -= c * c / gamma
    ab = np.zeros((3, p))
    ab[0, 1:] = off[:-1]
    ab[1] = bd
    ab[2, :-1] = off[:-1]
    u = np.zeros(p)
    u[0], u[-1] = gamma, c
    y = solve_banded((1, 1), ab, rhs)
    z = solve_banded((1, 1), ab, u)
    vy = y[0] + c / gamma * y[-1]
    vz = z[0] + c / gamma * z[-1]
    return y - vy / (1.0 + vz) * z


def _thomas(diag, off, rhs):
    """Batched symmetric tridiagonal solve; arrays shaped (B, m), off (B, m-1)."""
    m = diag.shape[1]
    c = np.empty_like(off)
    d = np.empty_like(rhs)
    beta = diag[:, 0].copy()
    d[:, 0] = rhs[:, 0] / beta
    for j in range(1, m):
        c[:, j - 1] = off[:, j - 1] / beta
        beta = diag[:, j] - off[:, j - 1] * c[:, j - 1]
        d[:, j] = (rhs[:, j] - off[:, j - 1] * d[:, j - 1]) / beta
    x = np.empty_like(rhs)
    x[:, -1] = d[:, -1]
    for j in range(m - 2, -1, -1):
        x[:, j] = d[:, j] - c[:, j] * x[:, j + 1]
    return x


# ---------------------------------------------------------------------------
# periodic orbits


@dataclass
class PeriodicOrbit:
    code: Word
    obstacles: tuple
    s: np.ndarray
    r: np.ndarray
    taus: np.ndarray
    monodromy: np.ndarray
    residual: float
    iterations: int

    @property
    def period(self):
        return len(self.obstacles)

    @property
    def length(self):
        return float(np.sum(self.taus))

    @property
    def key(self) -> Word:
        return self.code.necklace()

    def point(self, j) -> PhasePoint:
        j %= self.period
        return PhasePoint(self.obstacles[j], float(self.s[j]), float(self.r[j]))

    def points(self):
        return [self.point(j) for j in range(self.period)]

    def monodromy_at(self, j):
        """Product of the differentials around the orbit starting at bounce j."""
        m, logc = self.scaled_monodromy_at(j)
        with np.errstate(over="ignore"):
            return m * math.exp(min(logc, 700.0)) if logc < 700 else m * np.inf

    def scaled_monodromy_at(self, j):
        """(M / c, log c) with the product renormalized at every step."""
        m = np.eye(2)
        logc = 0.0
        for i in range(j, j + self.period):
            m = self.differential(i) @ m
            c = float(np.max(np.abs(m)))
            m /= c
            logc += math.log(c)
        return m, logc

    def monodromy_det(self):
        """Determinant of the monodromy as the product of the step determinants."""
        return float(np.prod([np.linalg.det(self.differential(j)) for j in range(self.period)]))

    def differential(self, j):
        p = self.period
        j %= p
        k1 = self._k[j]
        k2 = self._k[(j + 1) % p]
        nu1 = math.sqrt(1.0 - self.r[j] ** 2)
        nu2 = math.sqrt(1.0 - self.r[(j + 1) % p] ** 2)
        return differential_matrix(self.taus[j], k1, k2, nu1, nu2)

    @property
    def lyapunov(self):
        return lyapunov_exponent(self)

    def to_record(self):
        return {
            "word": str(self.code),
            "length": self.length,
            "sites": [[int(o), float(s)] for o, s in zip(self.obstacles, self.s)],
            "r": [float(x) for x in self.r],
            "monodromy": [[float(x) for x in row] for row in self.monodromy],
            "residual": self.residual,
        }

    _k: np.ndarray = field(default=None, repr=False)


def _periodic_eval(table, syms, s):
    nxt = np.roll(syms, -1)
    lk = link_data(table, syms, s, nxt, np.roll(s, -1))
    grad = lk.d1 + np.roll(lk.d2, 1)
    diag = lk.d11 + np.roll(lk.d22, 1)
    return lk, grad, diag, lk.d12


def _gauss_seidel(table, syms, s, sweeps=3):
    p = len(syms)
    for _ in range(sweeps):
        for j in range(p):
            a, b = (j - 1) % p, (j + 1) % p
            l1 = link_data(table, syms[j], s[j], syms[b], s[b])
            l0 = link_data(table, syms[a], s[a], syms[j], s[j])
            g = float(l1.d1 + l0.d2)
            hh = float(l1.d11 + l0.d22)
            if hh > 0:
                s[j] -= np.clip(g / hh, -0.5, 0.5)
    return s


def solve_periodic_orbit(table: Table, word, tol: float = GRAD_TOL, max_iter: int = MAX_NEWTON,
                         init: Optional[np.ndarray] = None) -> PeriodicOrbit:
    w = Word.parse(word)
    if not w.symbols or len(w) < 2 or not all(o in table.ids for o in w):
        raise SymbolError(f"word {w} is not over the table's obstacle ids")
    require_admissible(w, periodic=True)
    syms = np.array(w.symbols)
    s = initial_sites(table, w.symbols) if init is None else np.array(init, dtype=float)
    best = np.inf
    stalls = 0
    for it in range(1, max_iter + 1):
        lk, grad, diag, off = _periodic_eval(table, syms, s)
        res = float(np.max(np.abs(grad)))
        best = min(best, res)
        if res < tol:
            break
        step = _cyclic_solve(diag, off, grad)
        total = float(np.sum(lk.h))
        lam = 1.0
        accepted = False
        while lam > 1e-6:
            trial = s - lam * step
            lt = link_data(table, syms, trial, np.roll(syms, -1), np.roll(trial, -1))
            if np.all(np.isfinite(lt.h)) and float(np.sum(lt.h)) <= total + 1e-12 * (1 + total):
                accepted = True
                break
            lam *= 0.5
        if accepted and lam == 1.0 or accepted and res > 1e-6:
            s = trial
        elif accepted:
            # near convergence the length test is swamped by roundoff
            s = s - step
        else:
            stalls += 1
            s = _gauss_seidel(table, syms, s)
            if stalls > 5:
                raise ConvergenceError(f"periodic orbit {w} did not converge", best)
    else:
        raise ConvergenceError(f"periodic orbit {w} did not converge", best)
    s = np.array([x % table.perimeter(o) for o, x in zip(w.symbols, s)])
    lk, grad, diag, off = _periodic_eval(table, syms, s)
    r = lk.d1
    orbit = PeriodicOrbit(w, w.symbols, s, r, lk.h, np.eye(2), float(np.max(np.abs(grad))), it)
    orbit._k = lk.k1
    orbit.monodromy = orbit.monodromy_at(0)
    return orbit


def log_multiplier(orbit: PeriodicOrbit) -> float:
    """log of the expanding eigenvalue modulus of the monodromy."""
    m, logc = orbit.scaled_monodromy_at(0)
    tr = abs(float(np.trace(m)))
    det = float(np.linalg.det(m))
    if logc < 300:
        full = tr * math.exp(logc)
        if full <= 2.0:
            raise ValueError(f"orbit {orbit.code} is not hyperbolic (|trace| = {full})")
    # roots of x^2 - tr x + det for the rescaled matrix
    disc = tr * tr - 4.0 * det
    return logc + math.log(0.5 * (tr + math.sqrt(max(disc, 0.0))))


def lyapunov_exponent(orbit: PeriodicOrbit) -> float:
    return log_multiplier(orbit) / orbit.period


def unstable_multiplier(orbit: PeriodicOrbit) -> float:
    return math.exp(log_multiplier(orbit))


# ---------------------------------------------------------------------------
# marked length spectrum


@dataclass
class MLSEntry:
    word: Word
    length: float
    lyapunov: float
    residual: float
    error: Optional[str] = None


@dataclass
class MLSTable:
    entries: dict
    max_length: int

    def __getitem__(self, key):
        return self.entries[str(Word.parse(key).necklace())]

    def lengths(self):
        return {k: e.length for k, e in self.entries.items()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["word", "length", "lyapunov", "residual", "error"])
        for k, e in self.entries.items():
            wr.writerow([k, repr(e.length), repr(e.lyapunov), f"{e.residual:.3e}", e.error or ""])
        return buf.getvalue()


def _mls_job(args):
    table, word = args
    try:
        orb = solve_periodic_orbit(table, word)
        return MLSEntry(word, orb.length, lyapunov_exponent(orb), orb.residual)
    except (ConvergenceError, ValueError, EscapeError) as exc:
        return MLSEntry(word, float("nan"), float("nan"), float("nan"), str(exc))


def marked_length_spectrum(table: Table, max_length: int, workers: int = 1,
                           alphabet=None) -> MLSTable:
    """Lengths of all primitive periodic necklaces up to max_length."""
    alphabet = table.ids if alphabet is None else alphabet
    words = list(enumerate_words(alphabet, max_length, periodic=True, necklaces=True, primitive=True))
    jobs = [(table, w) for w in words]
    if workers > 1 and len(jobs) > 8:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_mls_job, jobs, chunksize=8))
    else:
        results = [_mls_job(j) for j in jobs]
    return MLSTable({str(e.word): e for e in results}, max_length)


# ---------------------------------------------------------------------------
# clamped chains


def solve_chain(table: Table, syms, s_init, tol=GRAD_TOL, max_iter=MAX_NEWTON):
    """Critical points of the open chain length with both end sites clamped.

    syms: (m+1,) obstacle ids, s_init: (B, m+1) initial sites, columns 0 and
    m are kept fixed.  Returns (s, links, residual).
    """
    syms = np.asarray(syms)
    s = np.array(s_init, dtype=float, ndmin=2)
    if syms.shape[-1] < 3:
        lk = link_data(table, syms[..., :-1], s[:, :-1], syms[..., 1:], s[:, 1:])
        return s, lk, 0.0
    best = np.inf
    for _ in range(max_iter):
        lk = link_data(table, syms[..., :-1], s[:, :-1], syms[..., 1:], s[:, 1:])
        grad = lk.d1[:, 1:] + lk.d2[:, :-1]
        res = float(np.max(np.abs(grad)))
        best = min(best, res)
        if res < tol:
            return s, lk, res
        diag = lk.d11[:, 1:] + lk.d22[:, :-1]
        off = lk.d12[:, 1:-1]
        step = _thomas(diag, off, grad)
        # crude damping far from the solution
        scale = np.minimum(1.0, 0.5 / np.maximum(np.max(np.abs(step), axis=1), 1e-300))
        s[:, 1:-1] -= scale[:, None] * step
    lk = link_data(table, syms[..., :-1], s[:, :-1], syms[..., 1:], s[:, 1:])
    res = float(np.max(np.abs(lk.d1[:, 1:] + lk.d2[:, :-1])))
    if res < 1e3 * tol:
        return s, lk, res
    raise ConvergenceError("chain solve did not converge", min(best, res))


_orbit_cache_key = "_periodic_cache"


def cached_orbit(table: Table, word) -> PeriodicOrbit:
    cache = table.__dict__.setdefault(_orbit_cache_key, {})
    key = word.symbols if isinstance(word, Word) else Word.parse(word).symbols
    if key not in cache:
        cache[key] = solve_periodic_orbit(table, word)
    return cache[key]


@dataclass
class OrbitSegment:
    code: HeteroclinicCode
    window: int
    positions: np.ndarray
    obstacles: np.ndarray
    s: np.ndarray
    r: np.ndarray
    taus: np.ndarray
    residual: float
    boundary: str = "clamped-to-periodic-orbit"

    def index(self, j):
        return int(j + self.window)

    def point(self, j=0) -> PhasePoint:
        i = self.index(j)
        return PhasePoint(int(self.obstacles[i]), float(self.s[i]), float(self.r[i]))

    @property
    def center(self) -> PhasePoint:
        return self.point(0)

    def tau(self, j):
        """Chord length from position j to j+1."""
        return float(self.taus[self.index(j)])


def _flank_site(table, code: HeteroclinicCode, j):
    """Site of position j on the limiting periodic orbit of the flank."""
    if j <= code.past_end:
        orb = cached_orbit(table, code.past)
        return orb.s[(code.center + j) % orb.period]
    orb = cached_orbit(table, code.future)
    return orb.s[(code.center + j - len(code.block)) % orb.period]


def _code_init(table, code: HeteroclinicCode, lo, hi):
    syms = code.window(lo, hi)
    init = np.empty(len(syms))
    past = cached_orbit(table, code.past)
    fut = cached_orbit(table, code.future)
    grid = _boundary_grid(table)
    nb = len(code.block)
    for i, j in enumerate(range(lo, hi + 1)):
        if j <= code.past_end:
            init[i] = past.s[(code.center + j) % past.period]
        elif j >= code.future_start:
            init[i] = fut.s[(code.center + j - nb) % fut.period]
        else:
            prev = syms[i - 1] if i > 0 else syms[i + 1]
            nxt = syms[i + 1] if i + 1 < len(syms) else syms[i - 1]
            init[i] = _triple_site(table, grid, prev, syms[i], nxt)
    return np.array(syms), init


def solve_anchored_segment(table: Table, code: HeteroclinicCode, window: int = 40) -> OrbitSegment:
    """Sites at positions -window..window, clamped on the flank orbits at both ends."""
    if -window > code.past_end or window < code.future_start:
        raise SymbolError("anchors fall inside the bridging block; enlarge the window")
    syms, init = _code_init(table, code, -window, window)
    s, lk, res = solve_chain(table, syms, init[None, :])
    s = s[0]
    h = lk.h[0]
    r = np.empty(s.size)
    r[:-1] = lk.d1[0]
    r[-1] = -lk.d2[0, -1]
    per = np.array([table.perimeter(o) for o in syms])
    return OrbitSegment(code, window, np.arange(-window, window + 1), syms, s % per, r, h, res)


def solve_codes(table: Table, codes, window: int):
    """Center points of many anchored segments solved as one batch.

    Returns arrays (s, r) of the centers and the solved site matrix.
    """
    syms, inits = [], []
    for c in codes:
        if -window > c.past_end or window < c.future_start:
            raise SymbolError("anchors fall inside the bridging block; enlarge the window")
        sy, ini = _code_init(table, c, -window, window)
        syms.append(sy)
        inits.append(ini)
    syms = np.array(syms)
    s, lk, res = solve_chain(table, syms, np.array(inits))
    per = np.array([[table.perimeter(o) for o in row[window:window + 1]] for row in syms])[:, 0]
    return s[:, window] % per, lk.d1[:, window], s


def product_point(table: Table, x: HeteroclinicCode, y: HeteroclinicCode, window: int = 40) -> PhasePoint:
    """Point with the future of x and the past of y."""
    from .symbolic import bracket
    return solve_anchored_segment(table, bracket(x, y), window).center


# ---------------------------------------------------------------------------
# leaves as graphs over s


@dataclass
class LeafGraph:
    """r as a function of s along the stable or unstable leaf through a code."""
    table: Table
    code: HeteroclinicCode
    stability: str
    depth: int
    syms: np.ndarray
    base: np.ndarray

    @property
    def obstacle(self):
        return int(self.code.symbol(0))

    def chains(self, s0):
        s0 = np.atleast_1d(np.asarray(s0, dtype=float))
        init = np.repeat(self.base[None, :], s0.size, axis=0)
        init[:, 0 if self.stability == "s" else -1] = s0
        return solve_chain(self.table, self.syms, init)

    def r(self, s0):
        s, lk, _ = self.chains(s0)
        if self.stability == "s":
            return lk.d1[:, 0]
        return -lk.d2[:, -1]

    def taus(self, s0):
        """Chord lengths along the chains, ordered away from the base site."""
        s, lk, _ = self.chains(s0)
        return lk.h if self.stability == "s" else lk.h[:, ::-1]

    @property
    def base_s(self):
        return float(self.base[0] if self.stability == "s" else self.base[-1])


def leaf_graph(table: Table, code: HeteroclinicCode, stability: str, depth: int = 40) -> LeafGraph:
    if stability not in ("s", "u"):
        raise ValueError("stability must be 's' or 'u'")
    if stability == "s":
        lo, hi = 0, max(depth, code.future_start + 8)
    else:
        lo, hi = min(-depth, code.past_end - 8), 0
    syms, init = _code_init(table, code, lo, hi)
    # fix the base site at the solved heteroclinic point itself
    seg = solve_anchored_segment(table, code, max(depth, code.future_start + 8, 8 - code.past_end))
    base_site = seg.s[seg.index(0)]
    if stability == "s":
        init[0] = base_site
    else:
        init[-1] = base_site
    s, _, _ = solve_chain(table, syms, init[None, :])
    return LeafGraph(table, code, stability, depth, syms, s[0])


# ---------------------------------------------------------------------------
# dynamically traced invariant curves


@dataclass
class InvariantCurve:
    base: PhasePoint
    stability: str
    s: np.ndarray
    r: np.ndarray
    direction: np.ndarray
    period: int
    defect: float = float("nan")

    def __call__(self, s):
        if self.s.size < 4:
            return np.full(np.shape(s), self.base.r)
        return CubicSpline(self.s, self.r)(s)


def _iterate(table, x, n, direction):
    for _ in range(n):
        x = billiard_map(table, x, direction).image
    return x


def _unwrap_near(s, ref, per):
    return ref + ((s - ref + 0.5 * per) % per - 0.5 * per)


def trace_invariant_curve(table: Table, orbit: PeriodicOrbit, index: int, stability: str,
                          radius: float, samples: int = 80, seed_scale: float = 1e-7) -> InvariantCurve:
    """Local stable or unstable curve of a periodic point by iterating a seed segment."""
    if stability not in ("s", "u"):
        raise ValueError("stability must be 's' or 'u'")
    base = orbit.point(index)
    p = orbit.period
    jac = coordinate_jacobian(orbit.monodromy_at(index))
    vals, vecs = np.linalg.eig(jac)
    order = np.argsort(np.abs(vals))
    pick = order[-1] if stability == "u" else order[0]
    lam = float(np.real(vals[pick]))
    e = np.real(vecs[:, pick])
    e = e / np.hypot(*e)
    if e[0] < 0:
        e = -e
    if radius <= 0:
        return InvariantCurve(base, stability, np.array([base.s]), np.array([base.r]), e, p, 0.0)
    direction = "forward" if stability == "u" else "backward"
    grow = abs(lam) if stability == "u" else 1.0 / abs(lam)
    per = table.perimeter(base.obstacle)
    if abs(e[0]) * radius > 0.25 * per:
        raise ValueError("requested radius is too large for this obstacle")
    pts = [(base.s, base.r)]
    steps = max(1, int(math.ceil(math.log(radius / seed_scale) / math.log(grow))) + 1)
    frac = np.linspace(0.0, 1.0, samples, endpoint=False)
    for sign in (1.0, -1.0):
        for f in frac:
            eps = sign * seed_scale * grow ** f
            x = PhasePoint(base.obstacle, base.s + eps * e[0], base.r + eps * e[1])
            for _ in range(steps):
                try:
                    x = _iterate(table, x, p, direction)
                except EscapeError:
                    break
                if x.obstacle != base.obstacle:
                    break
                su = _unwrap_near(x.s, base.s, per)
                if abs(su - base.s) > radius * abs(e[0]) * 1.5 + 1e-12:
                    break
                pts.append((su, x.r))
    arr = np.array(sorted(pts))
    keep = np.concatenate([[True], np.diff(arr[:, 0]) > 1e-14])
    arr = arr[keep]
    curve = InvariantCurve(base, stability, arr[:, 0], arr[:, 1], e, p)
    curve.defect = invariance_defect(table, curve)
    return curve


def invariance_defect(table: Table, curve: InvariantCurve, samples: int = 25) -> float:
    """max |r(image) - curve(s(image))| for images under the contracting direction."""
    if curve.s.size < 4:
        return 0.0
    per = table.perimeter(curve.base.obstacle)
    direction = "backward" if curve.stability == "u" else "forward"
    lo, hi = curve.s[0], curve.s[-1]
    worst = 0.0
    for s in np.linspace(lo, hi, samples + 2)[1:-1]:
        x = PhasePoint(curve.base.obstacle, float(s), float(curve(s)))
        y = _iterate(table, x, curve.period, direction)
        sy = _unwrap_near(y.s, curve.base.s, per)
        if lo <= sy <= hi:
            worst = max(worst, abs(y.r - float(curve(sy))))
    return worst
