from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from kmcasimir.cartan import cartan_matrix
from kmcasimir.dcp import (BlowupChart, DcpError, associator_property_suite, chamber_points, chart_polynomials,
                           check_chart_polynomials, dcp_associator, dcp_system, equivalent_elementary_pairs,
                           fundamental_solution, residue_operators)
from kmcasimir.diagrams import Diagram, NestedSet, enumerate_mns
from kmcasimir.kacmoody import build_irrep

H = 0.1


def system(name: str, hw, hbar=H):
    return dcp_system(build_irrep(cartan_matrix(name), hw), hbar)


def test_a2_chart_polynomials():
    d = Diagram.from_gcm(cartan_matrix("A2"))
    chart = BlowupChart(NestedSet(d, [{0, 1}, {0}]))
    polys = chart_polynomials(chart, [(1, 0), (0, 1), (1, 1)])
    assert polys[(1, 0)] == {(): 1}
    assert polys[(0, 1)] == {(): 1, (frozenset({0}),): -1}
    assert polys[(1, 1)] == {(): 1}


def test_chart_coordinates_round_trip():
    d = Diagram.from_gcm(cartan_matrix("A3"))
    chart = BlowupChart(NestedSet(d, [{0, 1, 2}, {0, 1}, {0}]))
    z = [Fraction(2), Fraction(3), Fraction(5)]
    assert chart.z_from_u(chart.u(z), 3) == z
    assert chart.u(z)[frozenset({0})] == Fraction(2, 5)


@pytest.mark.parametrize("name", ["A2", "A3", "B2", "G2", "A4"])
def test_chart_polynomials_reproduce_roots(name):
    g = cartan_matrix(name)
    d = Diagram.from_gcm(g)
    sys_roots = dcp_system(build_irrep(g, [0] * g.n), H).roots
    for ns in enumerate_mns(d):
        assert check_chart_polynomials(BlowupChart(ns), sys_roots)


def test_minimal_member_without_children_gives_unit_polynomial():
    d = Diagram.from_gcm(cartan_matrix("A3"))
    chart = BlowupChart(NestedSet(d, [{0, 1, 2}, {1, 2}, {2}]))
    assert chart_polynomials(chart, [(0, 0, 1)])[(0, 0, 1)] == {(): 1}


@pytest.mark.parametrize("name,hw", [("A2", [1, 1]), ("A3", [1, 0, 1]), ("B2", [0, 1])])
def test_residue_operators_commute_and_match(name, hw):
    s = system(name, hw)
    for ns in enumerate_mns(s.diagram):
        res = residue_operators(BlowupChart(ns), s)
        assert res.commuting()
        assert res.residue_identity()


def test_zero_hbar_solution_is_identity():
    s = system("A2", [1, 1], 0.0)
    for ns in enumerate_mns(s.diagram):
        g = fundamental_solution(BlowupChart(ns), s, [1.0, 1.3]).operator
        assert np.allclose(g, np.eye(8), atol=1e-14)


def test_degree_zero_truncation_is_the_corner_power():
    s = system("A2", [1, 0])
    ns = enumerate_mns(s.diagram)[0]
    chart = BlowupChart(ns)
    res = residue_operators(chart, s)
    z = [1.0, 1.3]
    xs = chart.x(z)
    expo = sum(math.log(float(xs[b])) * np.array(res.r[b], dtype=float) for b in chart.members)
    g = fundamental_solution(chart, s, z, order=0).operator
    assert np.allclose(g, expm(H / 2 * expo), atol=1e-14)


@pytest.mark.parametrize("strategy", ["series", "transport"])
def test_sl2_closed_form(strategy):
    s = system("A1", [2])
    chart = BlowupChart(enumerate_mns(s.diagram)[0])
    g = fundamental_solution(chart, s, [1.7], strategy).operator
    assert np.max(np.abs(g - expm(math.log(1.7) * s.residue((1,))))) < 1e-10


def test_a2_strategies_agree():
    s = system("A2", [1, 1])
    for ns in enumerate_mns(s.diagram):
        a = fundamental_solution(BlowupChart(ns), s, [1.0, 1.3], "series").operator
        b = fundamental_solution(BlowupChart(ns), s, [1.0, 1.3], "transport").operator
        assert np.max(np.abs(a - b)) < 1e-7


def test_series_truncation_defect_shrinks_with_hbar():
    ns = enumerate_mns(Diagram.from_gcm(cartan_matrix("A2")))[0]
    defects = []
    for h in (0.2, 0.1):
        s = system("A2", [1, 1], h)
        full = fundamental_solution(BlowupChart(ns), s, [1.0, 1.3]).operator
        cut = fundamental_solution(BlowupChart(ns), s, [1.0, 1.3], order=3).operator
        defects.append(np.max(np.abs(full - cut)))
    assert defects[0] / defects[1] >= 2 ** 4 / 2


def test_point_outside_the_chamber_is_rejected():
    s = system("A2", [1, 0])
    chart = BlowupChart(enumerate_mns(s.diagram)[0])
    with pytest.raises(DcpError):
        fundamental_solution(chart, s, [1.0, -0.5])
    with pytest.raises(ValueError):
        fundamental_solution(chart, s, [1.0, 1.0], strategy="magic")
    with pytest.raises(DcpError):
        dcp_system(build_irrep(cartan_matrix("A1~"), [1, 0], depth=1), H)


def test_self_associator_is_identity():
    s = system("A2", [1, 1])
    f = enumerate_mns(s.diagram)[0]
    assert np.allclose(dcp_associator(f, f, s, [1.0, 1.0]), np.eye(8), atol=1e-13)


def test_a2_property_suite():
    recs = associator_property_suite(system("A2", [1, 1]))
    names = {r.name for r in recs}
    assert {"orientation", "constancy", "central-support", "hbar-order"} <= names
    assert all(r.passed for r in recs)


def test_a3_property_suite():
    recs = associator_property_suite(system("A3", [1, 0, 1]))
    counts = {n: sum(r.name == n for r in recs) for n in ("orientation", "transitivity", "forgetfulness")}
    assert counts == {"orientation": 10, "transitivity": 60, "forgetfulness": 2}
    assert all(r.passed for r in recs)


def test_a1xa1_suite_is_trivial():
    s = system("A1xA1", [1, 1])
    assert len(enumerate_mns(s.diagram)) == 1
    recs = associator_property_suite(s)
    assert all(r.passed for r in recs)


def test_equivalent_elementary_pairs_give_equal_associators():
    g = cartan_matrix("A4")
    s = dcp_system(build_irrep(g, [1, 0, 0, 1]), H)
    assert equivalent_elementary_pairs(Diagram.from_gcm(cartan_matrix("A3"))) == []
    z = chamber_points(s, 1)[0]
    cache: dict = {}

    def sol(ns):
        if ns.members not in cache:
            cache[ns.members] = fundamental_solution(BlowupChart(ns), s, z).operator
        return cache[ns.members]
    groups = equivalent_elementary_pairs(s.diagram)
    assert len(groups) == 12
    for grp in groups[:2]:
        phis = [np.linalg.solve(sol(f), sol(gg)) for f, gg in grp]
        assert np.max(np.abs(phis[0] - np.eye(s.dim))) > 1e-3
        for p in phis[1:]:
            assert np.max(np.abs(p - phis[0])) < 1e-6


@settings(max_examples=5, deadline=None)
@given(st.floats(min_value=0.5, max_value=2.0), st.floats(min_value=0.5, max_value=2.0))
def test_associator_is_point_independent(a, b):
    s = system("A2", [1, 1])
    f, g = enumerate_mns(s.diagram)
    ref = dcp_associator(f, g, s, [1.0, 1.0])
    assert np.max(np.abs(dcp_associator(f, g, s, [a, b]) - ref)) < 1e-7
