import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from billiard_lab.dynamics import billiard_map
from billiard_lab.geometry import apply_isometry, tri_table
from billiard_lab.orbits import (ConvergenceError, lyapunov_exponent, marked_length_spectrum, product_point,
                                 solve_anchored_segment, solve_periodic_orbit, trace_invariant_curve)
from billiard_lab.symbolic import HeteroclinicCode, SymbolError, enumerate_words, is_admissible

SQ3 = math.sqrt(3.0)


def test_two_orbit(tri6):
    orb = solve_periodic_orbit(tri6, "12")
    assert orb.length == pytest.approx(8.0, abs=1e-10)
    np.testing.assert_allclose(orb.r, 0.0, atol=1e-12)
    assert orb.residual < 1e-10


def test_triangle_orbit(tri6):
    for w in ("123", "132"):
        orb = solve_periodic_orbit(tri6, w)
        assert orb.length == pytest.approx(18 - 3 * SQ3, abs=1e-9)
        np.testing.assert_allclose(np.abs(orb.r), 0.5, atol=1e-10)


def test_bad_words(tri6):
    with pytest.raises(SymbolError):
        solve_periodic_orbit(tri6, "11")
    with pytest.raises(SymbolError):
        solve_periodic_orbit(tri6, "14")


def test_monodromy_invariants(tri6):
    for w in enumerate_words(tri6.ids, 6, necklaces=True, primitive=True):
        orb = solve_periodic_orbit(tri6, w)
        assert orb.residual < 1e-10
        assert orb.monodromy_det() == pytest.approx(1.0, abs=1e-8)
        assert abs(np.trace(orb.monodromy)) > 2


def test_mls_small(tri6):
    mls = marked_length_spectrum(tri6, 3)
    assert list(mls.entries) == ["12", "13", "23", "123", "132"]
    for w in ("12", "13", "23"):
        assert mls[w].length == pytest.approx(8.0, abs=1e-10)
    for w in ("123", "321"):
        assert mls[w].length == pytest.approx(18 - 3 * SQ3, abs=1e-9)


def test_mls_isometry_and_reversal(tri6):
    a = marked_length_spectrum(tri6, 6)
    b = marked_length_spectrum(apply_isometry(tri6, 0.7, (1.3, -2.1)), 6)
    for k, e in a.entries.items():
        assert e.error is None
        assert abs(e.length - b.entries[k].length) < 1e-10
        assert abs(e.length - a[e.word.reversed()].length) < 1e-10


def test_mls_parallel_matches_serial(tri6):
    a = marked_length_spectrum(tri6, 5)
    b = marked_length_spectrum(tri6, 5, workers=2)
    assert a.to_csv() == b.to_csv()


def test_lyapunov_closed_form(tri6):
    orb = solve_periodic_orbit(tri6, "12")
    assert lyapunov_exponent(orb) == pytest.approx(math.log(5 + 2 * math.sqrt(6)), abs=1e-9)
    far = solve_periodic_orbit(tri_table(12.0), "12")
    assert far.length == pytest.approx(20.0, abs=1e-10)
    assert lyapunov_exponent(far) == pytest.approx(math.log(11 + 2 * math.sqrt(30)), abs=1e-9)


def test_lyapunov_reversal(tri6):
    for w in ("1213", "12123", "121323"):
        a = solve_periodic_orbit(tri6, w)
        b = solve_periodic_orbit(tri6, w[::-1])
        assert a.lyapunov == pytest.approx(b.lyapunov, abs=1e-10)


def test_transport_consistency(tri6):
    for w in ("123", "12123", "1213232"):
        orb = solve_periodic_orbit(tri6, w)
        x = orb.point(0)
        for j in range(1, orb.period + 1):
            x = billiard_map(tri6, x).image
            y = orb.point(j)
            assert x.obstacle == y.obstacle
            ds = (x.s - y.s + math.pi) % (2 * math.pi) - math.pi
            assert abs(ds) < 1e-9 and abs(x.r - y.r) < 1e-9
            x = y


def test_perturbed_init_reaches_same_orbit(tri6):
    rng = np.random.default_rng(0)
    for w in ("1213", "12313", "123132"):
        ref = solve_periodic_orbit(tri6, w)
        # sites of a solved orbit are about 1 radian from the nearest neighbours; 10% of that
        init = ref.s + rng.uniform(-0.1, 0.1, ref.s.size)
        again = solve_periodic_orbit(tri6, w, init=init)
        assert again.length == pytest.approx(ref.length, abs=1e-12)
        d = (again.s - ref.s + math.pi) % (2 * math.pi) - math.pi
        np.testing.assert_allclose(d, 0.0, atol=1e-10)


def test_palindromic_centers_perpendicular(tri6):
    orb = solve_periodic_orbit(tri6, "1232")
    # ...1 2 3 2 1 2 3 2... is mirror symmetric about every 1 and every 3
    assert abs(orb.r[0]) < 1e-10 and abs(orb.r[2]) < 1e-10
    assert abs(orb.r[1]) > 1e-3


def test_segment_on_periodic_orbit(tri6):
    code = HeteroclinicCode.periodic("123", 0)
    seg = solve_anchored_segment(tri6, code, 12)
    orb = solve_periodic_orbit(tri6, "123")
    assert seg.center.s == pytest.approx(orb.s[0], abs=1e-12)
    assert seg.center.r == pytest.approx(orb.r[0], abs=1e-12)


def test_segment_self_convergence(tri6):
    code = HeteroclinicCode("13", (2,), 0, "12")
    a = solve_anchored_segment(tri6, code, 20).center
    b = solve_anchored_segment(tri6, code, 40).center
    assert abs(a.s - b.s) < 1e-10 and abs(a.r - b.r) < 1e-10
    with pytest.raises(SymbolError):
        solve_anchored_segment(tri6, HeteroclinicCode("13", (2, 1, 2, 1, 2), 0, "12"), 2)


def test_segment_convergence_rate(tri6):
    code = HeteroclinicCode("13", (2,), 0, "12")
    ref = solve_anchored_segment(tri6, code, 40).center.s
    errs = [abs(solve_anchored_segment(tri6, code, n).center.s - ref) for n in (2, 3, 4, 5)]
    lam = math.log(5 + 2 * math.sqrt(6))
    for e0, e1 in zip(errs, errs[1:]):
        if e1 > 1e-13:
            assert e1 / e0 <= 1.05 * math.exp(-lam)


def test_product_point(tri6):
    x = HeteroclinicCode.periodic("12")
    y = HeteroclinicCode.periodic("13")
    px = product_point(tri6, x, x)
    assert px.s == pytest.approx(solve_periodic_orbit(tri6, "12").s[0], abs=1e-12)
    xy = product_point(tri6, x, y)
    from billiard_lab.symbolic import bracket
    z = bracket(x, y)
    again = product_point(tri6, x, z)
    assert abs(again.s - xy.s) < 1e-12 and abs(again.r - xy.r) < 1e-12
    wide = product_point(tri6, x, y, window=60)
    assert abs(wide.s - xy.s) < 1e-10 and abs(wide.r - xy.r) < 1e-10


def test_invariant_curve_directions(tri6):
    orb = solve_periodic_orbit(tri6, "12")
    u = trace_invariant_curve(tri6, orb, 0, "u", 0.05)
    s = trace_invariant_curve(tri6, orb, 0, "s", 0.05)
    # eigenvectors of J(-[[5,4],[6,5]])J for the expanding and contracting roots
    np.testing.assert_allclose(u.direction, np.array([2, -math.sqrt(6)]) / math.sqrt(10), atol=1e-10)
    np.testing.assert_allclose(s.direction, np.array([2, math.sqrt(6)]) / math.sqrt(10), atol=1e-10)
    assert u.s.size > 20 and s.s.size > 20
    assert u.defect < 1e-8 and s.defect < 1e-8
    grid = np.linspace(-0.03, 0.03, 7)
    np.testing.assert_allclose(s(grid), -u(grid), atol=1e-8)


def test_invariant_curve_degenerate(tri6):
    orb = solve_periodic_orbit(tri6, "12")
    c = trace_invariant_curve(tri6, orb, 0, "u", 0.0)
    assert c.s.size == 1 and c(0.1) == c.base.r
    with pytest.raises(ValueError):
        trace_invariant_curve(tri6, orb, 0, "x", 0.1)


def test_convergence_error_reports_residual(tri6):
    with pytest.raises(ConvergenceError) as info:
        solve_periodic_orbit(tri6, "1213", max_iter=1, tol=1e-300)
    assert info.value.residual > 0


@settings(max_examples=15)
@given(st.lists(st.integers(1, 3), min_size=2, max_size=9).filter(lambda w: is_admissible(w, periodic=True)))
def test_solved_orbits_are_critical(tri6, w):
    orb = solve_periodic_orbit(tri6, w)
    assert orb.residual < 1e-10
    assert np.all(np.abs(orb.r) < 1)
    rev = solve_periodic_orbit(tri6, w[::-1])
    assert rev.length == pytest.approx(orb.length, abs=1e-10)
