import math

import numpy as np
import pytest

from billiard_lab.displacement import (LeafError, Quadrilateral, approximant_sweep, full_report, nested_quad,
                                       periodic_approx_displacement, quadrilateral_area, small_quad_asymptotics,
                                       stable_holonomy, stable_mate, standard_quad, temporal_displacement,
                                       unstable_holonomy, unstable_mate)
from billiard_lab.geometry import build_table, table_config
from billiard_lab.symbolic import HeteroclinicCode, bracket

X12 = HeteroclinicCode.periodic("12")
X13 = HeteroclinicCode.periodic("13")


@pytest.fixture(scope="module")
def standard_report(tri6):
    return full_report(tri6, standard_quad(), depth=40)


def test_holonomy_zero(tri6):
    assert stable_holonomy(tri6, X12, X12).value == 0.0
    assert unstable_holonomy(tri6, X12, X12).value == 0.0


def test_holonomy_depth_convergence_and_antisymmetry(tri6):
    z1 = bracket(X12, X13)      # future of the 12 orbit
    a = stable_holonomy(tri6, X12, z1, 30).value
    b = stable_holonomy(tri6, X12, z1, 60).value
    assert a != 0.0 and abs(a - b) < 1e-10
    assert stable_holonomy(tri6, z1, X12, 60).value == pytest.approx(-b, abs=1e-12)
    z3 = bracket(X13, X12)      # past of the 12 orbit
    c = unstable_holonomy(tri6, X12, z3, 30).value
    d = unstable_holonomy(tri6, X12, z3, 60).value
    assert c != 0.0 and abs(c - d) < 1e-10


def test_holonomy_involution(tri6):
    z1 = bracket(X13, X12)
    u = unstable_holonomy(tri6, X12, z1, 40).value
    s = stable_holonomy(tri6, X12.reversed(), z1.reversed(), 40).value
    assert u == pytest.approx(-s, abs=1e-12)


def test_holonomy_additivity(tri6):
    z1 = stable_mate(X12, 3, tri6.ids)
    z2 = stable_mate(X12, 1, tri6.ids)
    h01 = stable_holonomy(tri6, X12, z1).value
    h12 = stable_holonomy(tri6, z1, z2).value
    h02 = stable_holonomy(tri6, X12, z2).value
    assert h02 == pytest.approx(h01 + h12, abs=1e-11)


def test_holonomy_rejects_wrong_leaf(tri6):
    with pytest.raises(LeafError):
        stable_holonomy(tri6, X12, X13)
    with pytest.raises(LeafError):
        Quadrilateral((X12, X13, X13, X12))


def test_degenerate_quad(tri6):
    x2 = unstable_mate(X12, 2, tri6.ids)
    q = Quadrilateral((X12, X12, x2, x2))
    rep = temporal_displacement(tri6, q, 40)
    assert abs(rep.H) < 1e-10
    assert abs(quadrilateral_area(tri6, q).area) < 1e-10


def test_standard_quad_routes(standard_report):
    rep = standard_report
    assert rep.H != 0.0
    assert abs(rep.H_holonomy - rep.H_symmetric) < 1e-8
    assert abs(rep.area + rep.H) < max(1e-7, rep.area_tolerance)


def test_reversed_and_reflected(tri6, standard_report):
    q = standard_quad()
    rev = temporal_displacement(tri6, q.reversed(), 40)
    assert rev.H == pytest.approx(-standard_report.H, abs=1e-9)
    refl = quadrilateral_area(tri6, q.reflected())
    assert refl.area == pytest.approx(-standard_report.area, abs=1e-9)


def test_relabeling_invariance(tri6, standard_report):
    cfg = table_config(tri6)
    relabel = {1: 2, 2: 3, 3: 1}
    for ob in cfg["obstacles"]:
        ob["id"] = relabel[ob["id"]]
    t2 = build_table(cfg)
    q2 = standard_quad("23", "21")
    assert quadrilateral_area(t2, q2).area == pytest.approx(standard_report.area, abs=1e-12)


def test_nested_quads_shrink(tri6):
    areas = []
    for depth in (1, 2, 3):
        rep = full_report(tri6, nested_quad(depth=depth), depth=40)
        assert abs(rep.area + rep.H) < max(1e-7, rep.area_tolerance)
        areas.append(abs(rep.area))
    assert areas[0] > areas[1] > areas[2] > 0


def test_approximants(tri6, standard_report):
    q = standard_quad()
    sweep = approximant_sweep(tri6, q, 4)
    errs = [abs(a["approximant"] - standard_report.H) for a in sweep]
    assert [a["bounces"] for a in sweep] == [10, 18, 26, 34]
    assert errs[1] < errs[0] and errs[3] < errs[2] < errs[1]


def test_degenerate_approximant(tri6):
    q = standard_quad("12", "12")
    approx, orb = periodic_approx_displacement(tri6, q, 2)
    assert orb.period == 18
    assert abs(approx) < 1e-10


def test_approximant_needs_period_two(tri6):
    q = Quadrilateral.from_codes(HeteroclinicCode.periodic("123"), HeteroclinicCode.periodic("132"))
    with pytest.raises(ValueError):
        periodic_approx_displacement(tri6, q, 1)


def test_small_quad_symmetric_ratio(tri6):
    rep = small_quad_asymptotics(tri6, X12, [3, 4])
    # holonomy derivative tends to 1 as the corners merge
    c = [abs(x - 1) for x in rep.holonomy_derivative]
    assert c[1] < c[0]
    for a, b in zip(rep.side_ratio, rep.area_ratio):
        assert math.isfinite(a) and math.isfinite(b)
    assert all(abs(n - 1) < 0.2 for n in rep.normalized_area)


def test_report_serializes(standard_report):
    import json
    d = json.loads(standard_report.to_json())
    assert d["orientation"] == "su" and len(d["corners"]) == 4
    assert np.isfinite(d["H_holonomy"])
