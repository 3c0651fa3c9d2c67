"""Billiard tables built from strictly convex smooth obstacles.

Every boundary is parametrized counterclockwise by arclength.  Shapes are
described in a native parameter u (an angle for trigonometric shapes, the
old arclength for bumped shapes) and converted to arclength s by inverting
the cumulative arclength integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from numpy.polynomial import Polynomial, legendre

from . import _series as ser

_GL_X, _GL_W = legendre.leggauss(20)
ANALYTIC = 64            # smoothness reported for analytic shapes
MAX_JET = 10             # series order cap for jets
INVERT_TOL = 1e-13


class GeometryError(ValueError):
    """Invalid table or shape."""


def _rot_normal(v):
    # outward normal = tangent rotated by -pi/2
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


# ---------------------------------------------------------------------------
# native curves


class TrigCurve:
    """z(u) = sum_k c_k exp(i k u) on u in [0, 2 pi)."""

    smoothness = ANALYTIC

    def __init__(self, modes, coeffs):
        self.modes = np.asarray(modes, dtype=int)
        self.coeffs = np.asarray(coeffs, dtype=complex)
        self.period = 2.0 * math.pi
        self.breakpoints = ()
        self.center = np.array([self.c0.real, self.c0.imag])

    @property
    def c0(self):
        sel = self.modes == 0
        return complex(self.coeffs[sel].sum()) if sel.any() else 0j

    def circle_data(self):
        nz = [(m, c) for m, c in zip(self.modes, self.coeffs) if m != 0 and abs(c) > 0]
        if len(nz) == 1 and nz[0][0] == 1:
            c1 = nz[0][1]
            return self.center.copy(), abs(c1), math.atan2(c1.imag, c1.real)
        return None

    def taylor(self, u, order):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        e = np.exp(1j * np.outer(u, self.modes))
        out = np.empty((order + 1, u.size, 2))
        fact = 1.0
        ik = 1j * self.modes
        for k in range(order + 1):
            if k:
                fact *= k
            z = e @ (self.coeffs * ik ** k) / fact
            out[k, :, 0] = z.real
            out[k, :, 1] = z.imag
        return out

    def transformed(self, angle, shift):
        rot = complex(math.cos(angle), math.sin(angle))
        coeffs = self.coeffs * rot
        modes = self.modes
        if not (modes == 0).any():
            modes = np.append(modes, 0)
            coeffs = np.append(coeffs, 0j)
        coeffs = coeffs.copy()
        coeffs[modes == 0] += complex(shift[0], shift[1])
        return TrigCurve(modes, coeffs)


def _bump_poly(order):
    return Polynomial([1.0, 0.0, -1.0]) ** (order + 1)


class BumpedCurve:
    """Base boundary pushed along its outward normal by amplitude * bump(u)."""

    def __init__(self, base: "BoundaryCurve", start, end, amplitude, order):
        length = end - start
        if not length > 0:
            raise GeometryError("bump support interval must have positive length")
        if length >= base.perimeter:
            raise GeometryError("bump support wraps more than the full perimeter")
        self.base = base
        self.start = float(start) % base.perimeter
        self.length = float(length)
        self.amplitude = float(amplitude)
        self.order = int(order)
        self.period = base.perimeter
        end_mod = (self.start + self.length) % base.perimeter
        self.breakpoints = (self.start, end_mod)
        self.smoothness = min(base.native.smoothness, self.order)
        self.center = base.native.center
        self._poly = [_bump_poly(self.order)]
        for _ in range(self.order + 2 * MAX_JET):
            self._poly.append(self._poly[-1].deriv())

    def circle_data(self):
        if self.amplitude == 0.0:
            return self.base.native.circle_data()
        return None

    def bump_taylor(self, u, order):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        rel = (u - self.start) % self.period
        inside = rel <= self.length
        w = 2.0 * rel / self.length - 1.0
        out = np.zeros((order + 1, u.size))
        scale = 2.0 / self.length
        fact = 1.0
        for k in range(order + 1):
            if k:
                fact *= k
            if k < len(self._poly):
                out[k] = np.where(inside, self._poly[k](w) * scale ** k / fact, 0.0)
        return out

    def taylor(self, u, order):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        y = self.base.arclength_taylor(u, order + 1)
        tser = np.stack([(k + 1) * y[k + 1] for k in range(order + 1)])
        nser = _rot_normal(tser)
        beta = self.bump_taylor(u, order)
        return y[: order + 1] + self.amplitude * ser.mul(nser, beta)

    def transformed(self, angle, shift):
        base = self.base.transformed(angle, shift)
        return BumpedCurve(base, self.start, self.start + self.length, self.amplitude, self.order)


# ---------------------------------------------------------------------------
# arclength layer


class BoundaryCurve:
    """Counterclockwise arclength parametrization of a convex closed curve."""

    def __init__(self, native, kind: str, params: dict | None = None, panels: int = 256):
        self.native = native
        self.kind = kind
        self.params = dict(params or {})
        self.smoothness = native.smoothness
        self.center = np.asarray(native.center, dtype=float)
        self._circle = native.circle_data()
        if self._circle is not None:
            self.perimeter = 2.0 * math.pi * self._circle[1]
            self._nodes = None
        else:
            nodes = np.linspace(0.0, native.period, panels + 1)
            if native.breakpoints:
                nodes = np.unique(np.concatenate([nodes, np.asarray(native.breakpoints)]))
            self._nodes = nodes
            a, b = nodes[:-1], nodes[1:]
            seg = self._gl_integral(a, b)
            self._cum = np.concatenate([[0.0], np.cumsum(seg)])
            self.perimeter = float(self._cum[-1])
        pts = self.native_points(np.linspace(0.0, native.period, 2048, endpoint=False))
        self.bounding_radius = float(np.max(np.hypot(*(pts - self.center).T)))

    # native helpers
    def native_points(self, u):
        return self.native.taylor(u, 0)[0]

    def native_speed(self, u):
        d = self.native.taylor(u, 1)[1]
        return np.hypot(d[..., 0], d[..., 1])

    def native_curvature(self, u):
        t = self.native.taylor(u, 2)
        d1, d2 = t[1], 2.0 * t[2]
        sp = np.hypot(d1[..., 0], d1[..., 1])
        return _cross(d1, d2) / sp ** 3

    def _gl_integral(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        pts = mid[:, None] + half[:, None] * _GL_X[None, :]
        sp = self.native_speed(pts.ravel()).reshape(pts.shape)
        return half * (sp @ _GL_W)

    def native_to_arclength(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self._circle is not None:
            return (u % (2.0 * math.pi)) * self._circle[1]
        u = u % self.native.period
        i = np.clip(np.searchsorted(self._nodes, u, side="right") - 1, 0, len(self._nodes) - 2)
        return self._cum[i] + self._gl_integral(self._nodes[i], u)

    def arclength_to_native(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float)) % self.perimeter
        if self._circle is not None:
            return s / self._circle[1]
        i = np.clip(np.searchsorted(self._cum, s, side="right") - 1, 0, len(self._nodes) - 2)
        lo, hi = self._nodes[i], self._nodes[i + 1]
        c0, c1 = self._cum[i], self._cum[i + 1]
        u = lo + (s - c0) / (c1 - c0) * (hi - lo)
        for _ in range(30):
            f = c0 + self._gl_integral(lo, u) - s
            du = f / self.native_speed(u)
            u = np.clip(u - du, lo, hi)
            if np.max(np.abs(f)) < INVERT_TOL * max(1.0, self.perimeter):
                break
        return u

    # arclength quantities
    def arclength_taylor(self, s, order):
        """Taylor coefficients of Upsilon(s + eps) in eps, shape (order+1, n, 2)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self._circle is not None:
            c, rad, ph = self._circle
            ang = ph + s / rad
            z = rad * np.exp(1j * ang)
            out = np.empty((order + 1, s.size, 2))
            fact = 1.0
            for k in range(order + 1):
                if k:
                    fact *= k
                w = z * (1j / rad) ** k / fact
                out[k, :, 0] = w.real
                out[k, :, 1] = w.imag
            out[0, :, 0] += c[0]
            out[0, :, 1] += c[1]
            return out
        u = self.arclength_to_native(s)
        cn = self.native.taylor(u, order)
        d1 = ser.deriv(cn)
        speed = ser.sqrt(ser.mul(d1[..., 0], d1[..., 0]) + ser.mul(d1[..., 1], d1[..., 1]))
        delta = np.zeros((order + 1, s.size))
        for _ in range(order):
            g = ser.compose(speed, delta[:-1])
            delta = ser.integrate(ser.recip(g), order + 1)
        return ser.compose(cn, delta)

    def frames(self, s):
        """Points, unit tangents, outward normals and curvatures at s."""
        t = self.arclength_taylor(s, 2)
        p, tan = t[0], t[1]
        k = _cross(tan, 2.0 * t[2])
        return p, tan, _rot_normal(tan), k

    def curvature(self, s):
        return self.frames(s)[3]

    def max_jet_order(self):
        return min(self.smoothness, MAX_JET + 2) - 2

    def curvature_jet(self, s, order):
        if order > self.max_jet_order():
            raise GeometryError(
                f"requested jet order {order} exceeds available smoothness "
                f"(max {self.max_jet_order()})")
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self._circle is not None:
            out = np.zeros((order + 1, s.size))
            out[0] = 1.0 / self._circle[1]
            return out
        y = self.arclength_taylor(s, order + 2)
        a = np.stack([(k + 1) * y[k + 1] for k in range(order + 1)])
        b = np.stack([(k + 1) * (k + 2) * y[k + 2] for k in range(order + 1)])
        kser = ser.mul(a[..., 0], b[..., 1]) - ser.mul(a[..., 1], b[..., 0])
        fact = np.array([math.factorial(k) for k in range(order + 1)], dtype=float)
        return kser * fact[:, None]

    def transformed(self, angle, shift):
        return BoundaryCurve(self.native.transformed(angle, shift), self.kind,
                             _moved_params(self.params, angle, shift))

    def sample_native(self, n=4096):
        u = np.linspace(0.0, self.native.period, n, endpoint=False)
        if isinstance(self.native, BumpedCurve):
            nat = self.native
            extra = nat.start + np.linspace(0.0, nat.length, n // 2)
            u = np.sort(np.concatenate([u, extra % nat.period]))
        return u


# ---------------------------------------------------------------------------
# shapes


def circle_curve(center, radius, angle=0.0):
    if not radius > 0:
        raise GeometryError("radius must be positive")
    c = complex(center[0], center[1])
    native = TrigCurve([0, 1], [c, radius * complex(math.cos(angle), math.sin(angle))])
    return BoundaryCurve(native, "circle", {"center": list(map(float, center)), "radius": float(radius), "angle": float(angle)})


def ellipse_curve(center, semi_axes, angle=0.0):
    a, b = map(float, semi_axes)
    if not (a > 0 and b > 0):
        raise GeometryError("semi-axes must be positive")
    rot = complex(math.cos(angle), math.sin(angle))
    c = complex(center[0], center[1])
    native = TrigCurve([0, 1, -1], [c, rot * (a + b) / 2, rot * (a - b) / 2])
    return BoundaryCurve(native, "ellipse", {"center": list(map(float, center)), "semi_axes": [a, b], "angle": float(angle)})


def fourier_curve(center, radius, fourier: Iterable[Sequence[float]], angle=0.0):
    """r(theta) = radius * (1 + sum a_m cos(m theta) + b_m sin(m theta))."""
    rho = {0: 1.0 + 0j}
    terms = []
    for m, a, b in fourier:
        m = int(m)
        if m < 1:
            raise GeometryError("Fourier modes start at 1")
        rho[m] = rho.get(m, 0j) + complex(a, -b) / 2
        rho[-m] = rho.get(-m, 0j) + complex(a, b) / 2
        terms.append([m, float(a), float(b)])
    rot = complex(math.cos(angle), math.sin(angle))
    modes = [k + 1 for k in rho] + [0]
    coeffs = [radius * rot * v for v in rho.values()] + [complex(center[0], center[1])]
    # merge duplicate mode 0 (from k = -1)
    merged = {}
    for m, c in zip(modes, coeffs):
        merged[m] = merged.get(m, 0j) + c
    native = TrigCurve(list(merged), list(merged.values()))
    return BoundaryCurve(native, "fourier", {"center": list(map(float, center)), "radius": float(radius),
                                             "fourier": terms, "angle": float(angle)})


def check_convex(curve: BoundaryCurve, message="non-convex shape"):
    k = curve.native_curvature(curve.sample_native())
    if not np.all(k > 0):
        raise GeometryError(message)
    return float(k.min()), float(k.max())


# ---------------------------------------------------------------------------
# obstacles and tables


@dataclass(frozen=True)
class Obstacle:
    id: int
    curve: BoundaryCurve

    @property
    def perimeter(self):
        return self.curve.perimeter


@dataclass(frozen=True)
class BumpPerturbation:
    obstacle: int
    start: float
    end: float
    amplitude: float
    order: int = 4


@dataclass(frozen=True)
class NonEclipseReport:
    passed: bool
    offending: tuple | None
    margin: float

    def __bool__(self):
        return self.passed


@dataclass
class Table:
    obstacles: tuple
    name: str = "table"
    non_eclipse: bool | None = None
    bumps: tuple = ()
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.obstacles = tuple(self.obstacles)
        self._index = {ob.id: i for i, ob in enumerate(self.obstacles)}
        if len(self._index) != len(self.obstacles):
            raise GeometryError("obstacle ids must be distinct")

    @property
    def ids(self):
        return tuple(ob.id for ob in self.obstacles)

    @property
    def total_perimeter(self):
        return sum(ob.perimeter for ob in self.obstacles)

    def index(self, oid):
        try:
            return self._index[oid]
        except KeyError:
            raise GeometryError(f"unknown obstacle id {oid}") from None

    def obstacle(self, oid) -> Obstacle:
        return self.obstacles[self.index(oid)]

    def perimeter(self, oid):
        return self.obstacle(oid).perimeter

    def frames(self, oids, s):
        """Vectorized frames for arrays of obstacle ids and arclengths."""
        oids = np.asarray(oids)
        s = np.asarray(s, dtype=float)
        shape = s.shape
        oids = np.broadcast_to(oids, shape).ravel()
        sf = s.ravel()
        p = np.empty((sf.size, 2))
        t = np.empty((sf.size, 2))
        k = np.empty(sf.size)
        for ob in self.obstacles:
            sel = oids == ob.id
            if sel.any():
                pp, tt, _, kk = ob.curve.frames(sf[sel])
                p[sel], t[sel], k[sel] = pp, tt, kk
        return p.reshape(shape + (2,)), t.reshape(shape + (2,)), _rot_normal(t).reshape(shape + (2,)), k.reshape(shape)


def boundary_frame(obstacle: Obstacle, s):
    """(point, unit tangent, outward unit normal) at arclength s."""
    s = float(s) % obstacle.perimeter
    p, t, n, _ = obstacle.curve.frames(s)
    return p[0], t[0], n[0]


def curvature_jet(obstacle: Obstacle, s, order):
    """(K(s), K'(s), ..., K^(order)(s)) along arclength."""
    return obstacle.curve.curvature_jet(float(s) % obstacle.perimeter, order)[:, 0]


def _curve_from_config(ob: Mapping):
    kind = ob.get("kind", "circle")
    center = ob.get("center", (0.0, 0.0))
    angle = float(ob.get("angle", 0.0))
    vals = list(center) + [ob.get("radius", 1.0), angle]
    if "semi_axes" in ob:
        vals += list(ob["semi_axes"])
    for m in ob.get("fourier", []):
        vals += list(m)
    if not all(math.isfinite(float(v)) for v in vals):
        raise GeometryError("shape parameters must be finite")
    if kind == "circle":
        return circle_curve(center, float(ob.get("radius", 1.0)), angle)
    if kind == "ellipse":
        return ellipse_curve(center, ob["semi_axes"], angle)
    if kind == "fourier":
        return fourier_curve(center, float(ob.get("radius", 1.0)), ob.get("fourier", []), angle)
    raise GeometryError(f"unknown obstacle kind {kind!r}")


def build_table(config: Mapping, require_disjoint: bool = True) -> Table:
    """Build a table from a description mapping (see tablefile for the schema)."""
    obs_cfg = list(config.get("obstacles", []))
    if len(obs_cfg) < 3:
        raise GeometryError("fewer than 3 obstacles")
    obstacles = []
    for i, ob in enumerate(obs_cfg):
        curve = _curve_from_config(ob)
        check_convex(curve)
        obstacles.append(Obstacle(int(ob.get("id", i + 1)), curve))
    table = Table(tuple(obstacles), name=str(config.get("name", "table")),
                  non_eclipse=config.get("non_eclipse"))
    if require_disjoint:
        _check_disjoint(table)
    for b in config.get("bumps", []):
        table = perturb_boundary(table, BumpPerturbation(int(b["obstacle"]), float(b["start"]), float(b["end"]),
                                                        float(b["amplitude"]), int(b.get("order", 4))))
    if config.get("non_eclipse"):
        rep = check_non_eclipse(table)
        if not rep.passed:
            raise GeometryError(f"non-eclipse condition fails for triple {rep.offending}")
    return table


def tri_table(separation=6.0, radius=1.0, name=None) -> Table:
    """Three equal discs on an equilateral triangle; separation 6 gives tri6."""
    h = separation * math.sqrt(3.0) / 2.0
    centers = [(0.0, 0.0), (separation, 0.0), (separation / 2.0, h)]
    cfg = {"name": name or f"tri{separation:g}",
           "obstacles": [{"id": i + 1, "kind": "circle", "center": c, "radius": radius}
                         for i, c in enumerate(centers)]}
    return build_table(cfg)


def table_config(table: Table) -> dict:
    obs = []
    for ob in table.obstacles:
        curve = ob.curve
        while isinstance(curve.native, BumpedCurve):
            curve = curve.native.base
        obs.append({"id": ob.id, "kind": curve.kind, **curve.params})
    cfg = {"name": table.name, "obstacles": obs}
    if table.non_eclipse is not None:
        cfg["non_eclipse"] = table.non_eclipse
    if table.bumps:
        cfg["bumps"] = [dict(obstacle=b.obstacle, start=b.start, end=b.end, amplitude=b.amplitude, order=b.order)
                        for b in table.bumps]
    return cfg


# ---------------------------------------------------------------------------
# separation tests via support functions


def _support_data(table: Table, ndirs=2048):
    ang = 2.0 * math.pi * np.arange(ndirs) / ndirs
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    sup, margin = [], []
    for ob in table.obstacles:
        c = ob.curve
        u = c.sample_native(2048)
        pts = c.native_points(u)
        sup.append((pts @ dirs.T).max(axis=0))
        chord = np.hypot(*(np.roll(pts, -1, axis=0) - pts).T).max()
        kmax = c.native_curvature(u).max()
        margin.append(kmax * chord ** 2 / 8.0 + 1e-12)
    return np.array(sup), np.array(margin)


def _check_disjoint(table: Table):
    sup, margin = _support_data(table)
    n = sup.shape[1]
    opp = (np.arange(n) + n // 2) % n
    ids = table.ids
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            sep = np.max(-sup[i] - sup[j][opp]) - margin[i] - margin[j]
            if not sep > 0:
                raise GeometryError(f"overlapping obstacles {ids[i]} and {ids[j]}")


def check_non_eclipse(table: Table) -> NonEclipseReport:
    """Certify that the hull of any two obstacles misses every third one.

    The offending triple is reported as (i, k, j): obstacle k blocks the
    hull of obstacles i and j.
    """
    sup, margin = _support_data(table)
    n = sup.shape[1]
    opp = (np.arange(n) + n // 2) % n
    ids = table.ids
    worst = math.inf
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            hull = np.maximum(sup[i] + margin[i], sup[j] + margin[j])
            for k in range(len(ids)):
                if k in (i, j):
                    continue
                sep = float(np.max(-hull - sup[k][opp])) - margin[k]
                worst = min(worst, sep)
                if not sep > 0:
                    return NonEclipseReport(False, (ids[i], ids[k], ids[j]), sep)
    return NonEclipseReport(True, None, worst)


# ---------------------------------------------------------------------------
# isometries and perturbations


def apply_isometry(table: Table, angle: float, translation=(0.0, 0.0)) -> Table:
    """Rotate by angle about the origin, then translate.  s is preserved pointwise."""
    obs = tuple(Obstacle(ob.id, ob.curve.transformed(angle, translation)) for ob in table.obstacles)
    return Table(tuple(obs), name=table.name, non_eclipse=table.non_eclipse, bumps=table.bumps)


def _moved_params(params, angle, translation):
    p = dict(params)
    if "center" in p:
        x, y = p["center"]
        ca, sa = math.cos(angle), math.sin(angle)
        p["center"] = [ca * x - sa * y + translation[0], sa * x + ca * y + translation[1]]
    p["angle"] = float(p.get("angle", 0.0)) + angle
    return p


def perturb_boundary(table: Table, bump: BumpPerturbation) -> Table:
    """Push one obstacle's boundary outward by a compactly supported bump."""
    ob = table.obstacle(bump.obstacle)
    if bump.amplitude == 0.0:
        return Table(table.obstacles, name=table.name, non_eclipse=table.non_eclipse,
                     bumps=table.bumps + (bump,))
    native = BumpedCurve(ob.curve, bump.start, bump.end, bump.amplitude, bump.order)
    curve = BoundaryCurve(native, ob.curve.kind, ob.curve.params)
    check_convex(curve, "convexity lost")
    obs = tuple(Obstacle(o.id, curve) if o.id == bump.obstacle else o for o in table.obstacles)
    return Table(obs, name=table.name, non_eclipse=table.non_eclipse, bumps=table.bumps + (bump,))


def bump_arclength_map(table: Table, obstacle_id: int, old_s):
    """New arclength of the point that had arclength old_s before bumping."""
    curve = table.obstacle(obstacle_id).curve
    if isinstance(curve.native, BumpedCurve):
        return curve.native_to_arclength(old_s)
    return np.atleast_1d(np.asarray(old_s, dtype=float))
