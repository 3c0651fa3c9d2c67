import math
from pathlib import Path

import numpy as np
import pytest

from billiard_lab.displacement import unstable_mate
from billiard_lab.geometry import tri_table
from billiard_lab.orbits import solve_periodic_orbit
from billiard_lab.rigidity import (OrbitPairing, bowen_dimension, box_counting_dimension, choose_gap,
                                   conjugacy_consequence_report, gap_perturbation_experiment,
                                   iso_length_spectral_report, match_centers, match_periodic_orbits,
                                   one_step_factor, trace_cover, unstable_density_ratio)
from billiard_lab.symbolic import HeteroclinicCode, SymbolError, enumerate_words
from billiard_lab.tablefile import load_table

TABLES = Path(__file__).resolve().parent.parent / "tables"


@pytest.fixture(scope="module")
def moved():
    return load_table(TABLES / "tri6_moved.json")


@pytest.fixture(scope="module")
def r11():
    return load_table(TABLES / "tri6_r11.json")


def test_pairing_with_itself(tri6):
    p = match_periodic_orbits(tri6, tri6, max_length=5)
    assert all(e.diff == 0.0 for e in p.entries)
    keys = [e.word for e in p.entries]
    assert keys == [str(w) for w in enumerate_words(tri6.ids, 5, necklaces=True, primitive=True)]
    assert len(set(keys)) == len(keys)


def test_isometric_pair_passes(tri6, moved):
    p = match_periodic_orbits(tri6, moved, max_length=6)
    rep = iso_length_spectral_report(p, 1e-10)
    assert rep.passed and rep.max_diff < 1e-10 and not rep.worst


def test_perturbed_radius_fails(tri6, r11):
    p = match_periodic_orbits(tri6, r11, max_length=2)
    by_word = {e.word: e for e in p.entries}
    assert by_word["12"].length_b == pytest.approx(7.8, abs=1e-10)
    rep = iso_length_spectral_report(p, 1e-9)
    assert not rep.passed
    assert rep.worst[0][0] in ("12", "23") and rep.worst[0][1] == pytest.approx(0.2, abs=1e-10)
    assert abs(by_word["13"].diff) < 1e-12


def test_empty_pairing():
    rep = iso_length_spectral_report(OrbitPairing([], {}, 2))
    assert not rep.passed and rep.no_data


def test_bad_alphabet_map(tri6):
    with pytest.raises(ValueError):
        match_periodic_orbits(tri6, tri6, {1: 1, 2: 1, 3: 3})


def test_consequences_isometric(tri6, moved):
    p = match_periodic_orbits(tri6, moved, max_length=6)
    rep = conjugacy_consequence_report(p, tri6, moved)
    assert not rep.gated and rep.bounces > 0 and not rep.failures
    assert rep.max_r_diff < 1e-10 and rep.max_tau_diff < 1e-10
    assert max(rep.max_jet_diff) < 1e-8
    assert rep.max_dpsi_dist < 1e-4


def test_consequences_relabeled_symmetry(tri6):
    rot = load_table(TABLES / "tri6_rot120.json")
    amap = match_centers(tri6, rot)
    assert amap == {1: 3, 2: 1, 3: 2}
    p = match_periodic_orbits(tri6, rot, amap, max_length=5)
    assert iso_length_spectral_report(p, 1e-10).passed
    rep = conjugacy_consequence_report(p, tri6, rot)
    assert rep.max_r_diff < 1e-10 and rep.max_dpsi_dist < 1e-4


def test_consequences_gated(tri6, r11):
    p = match_periodic_orbits(tri6, r11, max_length=3)
    assert conjugacy_consequence_report(p, tri6, r11).gated


def test_bowen_symmetry_and_range(tri6):
    for n in range(2, 7):
        est = bowen_dimension(tri6, n)
        assert 0 < est.delta_u < 1
        assert abs(est.delta_u - est.delta_s) < 1e-9


def test_bowen_decreases_with_separation(tri6):
    assert bowen_dimension(tri_table(12.0), 6).delta_u < bowen_dimension(tri6, 6).delta_u


def test_box_counting_on_cantor_set():
    # middle-thirds Cantor set: left endpoints of the level-12 intervals
    pts = np.zeros(1)
    for k in range(1, 13):
        pts = np.concatenate([pts, pts + 2 * 3.0 ** -k])
    slope = box_counting_dimension(pts)[0]
    assert slope == pytest.approx(math.log(2) / math.log(3), rel=0.03)


@pytest.fixture(scope="module")
def covers(tri6):
    return {m: trace_cover(tri6, m) for m in (1, 2)}


def test_cover_depth_one(tri6, covers):
    # four cylinders (a, 1, b); 213 and 312 project onto overlapping arcs around the
    # bounce of the 123 orbit, so three components remain
    iv = covers[1].intervals[1]
    assert len(iv) == 3
    axis = math.pi / 6
    assert 0.5 * (iv[1][0] + iv[1][1]) == pytest.approx(axis, abs=1e-9)
    assert axis - iv[0][1] == pytest.approx(iv[2][0] - axis, abs=1e-9)
    assert axis - iv[0][0] == pytest.approx(iv[2][1] - axis, abs=1e-9)
    # the other obstacles carry rotated copies
    for oid in (2, 3):
        shift = (oid - 1) * 2 * math.pi / 3
        for (a0, b0), (a1, b1) in zip(iv, covers[1].intervals[oid]):
            assert a1 == pytest.approx(a0 + shift, abs=1e-9)
            assert b1 == pytest.approx(b0 + shift, abs=1e-9)


def test_cover_nesting_and_disjointness(covers):
    assert covers[2].measure() <= covers[1].measure()
    for c in covers.values():
        for oid, iv in c.intervals.items():
            for (a0, b0), (a1, b1) in zip(iv, iv[1:]):
                assert b0 < a1
            for a, b in iv:
                assert covers[1].contains(oid, 0.5 * (a + b), 2 * math.pi)


def test_cover_contains_periodic_bounces(tri6, covers):
    for m, c in covers.items():
        for w in enumerate_words(tri6.ids, 2 * m + 1, necklaces=True, primitive=True):
            orb = solve_periodic_orbit(tri6, w)
            for x in orb.points():
                assert c.contains(x.obstacle, x.s, tri6.perimeter(x.obstacle)), (m, str(w), x)


def test_choose_gap(covers):
    g0 = choose_gap(covers[1], 1, "widest")
    g1 = choose_gap(covers[1], 1, "interior")
    assert g0[1] - g0[0] >= g1[1] - g1[0] > 0
    with pytest.raises(ValueError):
        choose_gap(covers[1], 1, 99)


def test_gap_zero_amplitude(tri6):
    rep = gap_perturbation_experiment(tri6, 1, depth=2, amplitude=0.0, max_length=4)
    assert rep.max_change_gap < 1e-12 and rep.max_change_control < 1e-12
    assert rep.bounces_in_support == 0


X = HeteroclinicCode.periodic("12")


def test_density_identity(tri6):
    assert unstable_density_ratio(tri6, X, X, 0.3).value == 1.0
    with pytest.raises(SymbolError):
        unstable_density_ratio(tri6, X, HeteroclinicCode.periodic("13"), 0.3)


def test_density_multiplicative(tri6):
    y = unstable_mate(X, 2, tri6.ids)
    z = unstable_mate(X, 1, tri6.ids, variant=1)
    d = bowen_dimension(tri6, 6).delta_u
    xy = unstable_density_ratio(tri6, X, y, d).value
    yz = unstable_density_ratio(tri6, y, z, d).value
    xz = unstable_density_ratio(tri6, X, z, d).value
    assert xy != 1.0
    assert xy * yz == pytest.approx(xz, abs=1e-8)


def test_density_one_step(tri6):
    y = unstable_mate(X, 1, tri6.ids)
    d = 0.25
    full = unstable_density_ratio(tri6, X, y, d).value
    back = unstable_density_ratio(tri6, X.shifted(-1), y.shifted(-1), d).value
    assert back * one_step_factor(tri6, X, y, d) == pytest.approx(full, abs=1e-8)
