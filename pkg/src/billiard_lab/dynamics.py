"""Billiard map, its differential, and perpendicular (Jacobi) propagators.

Conventions: r = sin(phi) with phi the oriented angle from the outward
normal n to the outgoing velocity v, measured so that v = nu * n - r * t.
With this orientation the chord length h(s, s') generates the map:
r = dh/ds and r' = -dh/ds'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .geometry import Table, _cross

TANGENCY = 1.0 - 1e-8


class EscapeError(RuntimeError):
    """The outgoing ray hits no obstacle: the point is not trapped."""


class TangencyError(RuntimeError):
    """A tangential collision was met where it is not allowed."""


@dataclass(frozen=True)
class PhasePoint:
    obstacle: int
    s: float
    r: float

    @property
    def nu(self):
        return math.sqrt(max(0.0, 1.0 - self.r * self.r))

    def flipped(self):
        """Image under the involution (s, r) -> (s, -r)."""
        return PhasePoint(self.obstacle, self.s, -self.r)


@dataclass(frozen=True)
class FlowPoint:
    base: PhasePoint
    t: float = 0.0


@dataclass(frozen=True)
class MapStep:
    image: PhasePoint
    tau: float
    differential: np.ndarray
    start_point: np.ndarray
    end_point: np.ndarray
    unreliable: bool = False


@dataclass(frozen=True)
class PerpPropagator:
    matrix: np.ndarray
    elapsed: float
    collisions: int


def _frame(table: Table, oid, s):
    p, t, n, k = table.obstacle(oid).curve.frames(float(s) % table.perimeter(oid))
    return p[0], t[0], n[0], float(k[0])


def chord_length(table: Table, site_a, site_b):
    """Euclidean length between two boundary sites (obstacle, s).

    Returns (h, same_obstacle_flag).
    """
    pa = _frame(table, *site_a)[0]
    pb = _frame(table, *site_b)[0]
    return float(np.hypot(*(pb - pa))), site_a[0] == site_b[0]


def differential_matrix(h, k, k_next, nu, nu_next):
    """-[[ (hK+nu)/nu', h/(nu nu') ], [hKK'+K nu'+K' nu, (hK'+nu')/nu ]]."""
    return -np.array([
        [(h * k + nu) / nu_next, h / (nu * nu_next)],
        [h * k * k_next + k * nu_next + k_next * nu, (h * k_next + nu_next) / nu],
    ])


# ---------------------------------------------------------------------------
# ray tracing


def _hit_circle(p, v, center, radius):
    d = p - center
    b = float(v @ d)
    q = float(d @ d) - radius * radius
    disc = b * b - q
    if disc < 0.0 or b >= 0.0 and q > 0.0:
        return None
    sq = math.sqrt(disc)
    t = q / (-b + sq) if -b + sq > 0 else -b - sq
    return t if t > 1e-12 else None


def _hit_general(curve, p, v, nsamp=128):
    u = np.linspace(0.0, curve.native.period, nsamp + 1)
    pts = curve.native_points(u)
    f = _cross(np.broadcast_to(v, pts.shape), pts - p)

    def fun(x):
        q = curve.native_points(x)[0]
        return float(v[0] * (q[1] - p[1]) - v[1] * (q[0] - p[0]))

    roots = []
    for i in range(nsamp):
        if f[i] == 0.0:
            roots.append(u[i])
        elif f[i] * f[i + 1] < 0:
            roots.append(brentq(fun, u[i], u[i + 1], xtol=1e-15, rtol=1e-15))
    if not roots:
        # a near-grazing line can cross between two samples
        for idx, sign in ((int(np.argmin(f)), 1.0), (int(np.argmax(f)), -1.0)):
            lo, hi = u[max(idx - 1, 0)], u[min(idx + 1, nsamp)]
            res = minimize_scalar(lambda x: sign * fun(x), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-14})
            if sign * res.fun < 0:
                roots.append(brentq(fun, lo, res.x, xtol=1e-15) if fun(lo) * fun(res.x) < 0 else res.x)
    best = None
    for x in roots:
        q = curve.native_points(x)[0]
        t = float((q - p) @ v)
        if t > 1e-12 and (best is None or t < best[0]):
            best = (t, x)
    if best is None:
        return None
    return best


def trace_ray(table: Table, oid, p, v):
    """First obstacle (other than oid) hit by the ray p + t v."""
    best = None
    for ob in table.obstacles:
        if ob.id == oid:
            continue
        c = ob.curve
        d = c.center - p
        along = float(d @ v)
        perp = abs(float(v[0] * d[1] - v[1] * d[0]))
        if perp > c.bounding_radius + 1e-9 or along < -c.bounding_radius:
            continue
        if c._circle is not None:
            t = _hit_circle(p, v, c._circle[0], c._circle[1])
            if t is None:
                continue
            q = p + t * v
            ang = math.atan2(q[1] - c._circle[0][1], q[0] - c._circle[0][0]) - c._circle[2]
            s = (ang % (2.0 * math.pi)) * c._circle[1]
        else:
            hit = _hit_general(c, p, v)
            if hit is None:
                continue
            t, u = hit
            s = float(c.native_to_arclength(u)[0])
        if best is None or t < best[0]:
            best = (t, ob.id, s)
    return best


def billiard_map(table: Table, x: PhasePoint, direction: str = "forward") -> MapStep:
    """One collision-to-collision step; backward steps use the involution."""
    if direction == "backward":
        step = billiard_map(table, x.flipped(), "forward")
        img = step.image.flipped()
        # D(I F I) = J DF J with J = diag(1, -1)
        return MapStep(img, step.tau, coordinate_jacobian(step.differential), step.start_point, step.end_point, step.unreliable)
    if direction != "forward":
        raise ValueError("direction must be 'forward' or 'backward'")
    if not abs(x.r) < 1.0:
        raise TangencyError("|r| must be < 1")
    p, t, n, k = _frame(table, x.obstacle, x.s)
    nu = x.nu
    v = nu * n - x.r * t
    hit = trace_ray(table, x.obstacle, p, v)
    if hit is None:
        raise EscapeError(f"ray from {x} escapes")
    _, oid2, s2 = hit
    q, t2, n2, k2 = _frame(table, oid2, s2)
    h = float(np.hypot(*(q - p)))
    u = (q - p) / h
    r2 = -float(u @ t2)
    nu2 = math.sqrt(max(0.0, 1.0 - r2 * r2))
    unreliable = abs(r2) > TANGENCY
    df = differential_matrix(h, k, k2, nu, nu2) if nu2 > 0 else np.full((2, 2), np.nan)
    return MapStep(PhasePoint(oid2, s2, r2), h, df, p, q, unreliable)


def billiard_map_differential(table: Table, x: PhasePoint) -> np.ndarray:
    return billiard_map(table, x).differential


_FLIP = np.diag([1.0, -1.0])


def coordinate_jacobian(differential):
    """Jacobian of the map in the (s, r) chart used by PhasePoint.

    The closed-form differential is written for the angle measured the other
    way round (upper-right entry -h/(nu nu') < 0); in (s, r) itself, where
    r = dh/ds, the off-diagonal entries change sign.
    """
    return _FLIP @ differential @ _FLIP


def fd_step(x):
    return 1e-6 * (1.0 + abs(x))


def _wrap(ds, per):
    return (ds + 0.5 * per) % per - 0.5 * per


def fd_jacobian(table: Table, x: PhasePoint) -> np.ndarray:
    """Central-difference Jacobian of the billiard map in (s, r)."""
    base = billiard_map(table, x).image
    per = table.perimeter(base.obstacle)
    jac = np.empty((2, 2))
    for col, (ds, dr) in enumerate(((fd_step(x.s), 0.0), (0.0, fd_step(x.r)))):
        a = billiard_map(table, PhasePoint(x.obstacle, x.s + ds, x.r + dr)).image
        b = billiard_map(table, PhasePoint(x.obstacle, x.s - ds, x.r - dr)).image
        step = 2.0 * (ds + dr)
        jac[0, col] = _wrap(a.s - b.s, per) / step
        jac[1, col] = (a.r - b.r) / step
    return jac


def check_generating_relations(table: Table, x: PhasePoint):
    """(|r - dh/ds|, |r' + dh/ds'|) with central differences of chord_length."""
    step = billiard_map(table, x)
    y = step.image
    hs = fd_step(x.s)
    hy = fd_step(y.s)
    dh_ds = (chord_length(table, (x.obstacle, x.s + hs), (y.obstacle, y.s))[0]
             - chord_length(table, (x.obstacle, x.s - hs), (y.obstacle, y.s))[0]) / (2 * hs)
    dh_dsp = (chord_length(table, (x.obstacle, x.s), (y.obstacle, y.s + hy))[0]
              - chord_length(table, (x.obstacle, x.s), (y.obstacle, y.s - hy))[0]) / (2 * hy)
    return abs(x.r - dh_ds), abs(y.r + dh_dsp)


def liouville_defect(table: Table, x: PhasePoint) -> float:
    """max |(F*lambda - lambda - dtau)(e)| over e = d/ds, d/dr, lambda = -r ds."""
    y = billiard_map(table, x).image
    per = table.perimeter(y.obstacle)
    out = 0.0
    for ds, dr in ((fd_step(x.s), 0.0), (0.0, fd_step(x.r))):
        a = billiard_map(table, PhasePoint(x.obstacle, x.s + ds, x.r + dr))
        b = billiard_map(table, PhasePoint(x.obstacle, x.s - ds, x.r - dr))
        step = 2.0 * (ds + dr)
        dsp = _wrap(a.image.s - b.image.s, per) / step
        dtau = (a.tau - b.tau) / step
        pull = -y.r * dsp
        lam = -x.r * (1.0 if ds else 0.0)
        out = max(out, abs(pull - lam - dtau))
    return out


def eigen_moduli(m, det=None) -> tuple:
    """(small, large) eigenvalue moduli of a real hyperbolic 2x2 matrix.

    The large root comes from trace and determinant, the small one as
    |det| / large; eigvals loses the small root to cancellation.  For long
    products pass det computed from the factors, since the entrywise
    determinant cancels catastrophically.
    """
    tr = abs(float(m[0, 0] + m[1, 1]))
    if det is None:
        det = float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    disc = tr * tr - 4.0 * det
    if disc < 0:
        raise ValueError("eigenvalues are not real")
    big = 0.5 * (tr + math.sqrt(disc))
    return abs(det) / big, big


# ---------------------------------------------------------------------------
# Jacobi coordinates


def free_flight(t):
    return np.array([[1.0, t], [0.0, 1.0]])


def collision_factor(k_next, nu_next):
    return -np.array([[1.0, 0.0], [2.0 * k_next / nu_next, 1.0]])


def jacobi_perp_propagator(table: Table, start: FlowPoint, duration: float) -> PerpPropagator:
    """Ordered product of free flights and collision factors over [0, duration].

    A collision landing exactly at the end of the window is included.
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")
    m = np.eye(2)
    x = start.base
    step = billiard_map(table, x)
    remaining = step.tau - start.t
    elapsed = 0.0
    ncoll = 0
    tol = 1e-9 * (1.0 + duration)
    while elapsed + remaining <= duration + tol:
        if step.unreliable:
            raise TangencyError("tangential collision in the propagation window")
        m = free_flight(remaining) @ m
        m = collision_factor(table_curvature(table, step.image), step.image.nu) @ m
        elapsed += remaining
        ncoll += 1
        x = step.image
        if elapsed >= duration - tol:
            return PerpPropagator(m, duration, ncoll)
        step = billiard_map(table, x)
        remaining = step.tau
    m = free_flight(duration - elapsed) @ m
    return PerpPropagator(m, duration, ncoll)


def table_curvature(table: Table, x: PhasePoint) -> float:
    return _frame(table, x.obstacle, x.s)[3]
