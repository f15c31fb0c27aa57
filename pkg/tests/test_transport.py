from __future__ import annotations

import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kmcasimir.cartan import all_positive_roots, cartan_matrix, generate_positive_roots, longest_word
from kmcasimir.kacmoody import build_irrep
from kmcasimir.transport import (ConnectionForm, PathSpec, TransportError, braid_relation_check, casimir_form,
                                 certify_path, cocycle_ledger, default_basepoint, gauge_factor, generator_path,
                                 local_model, monodromy_data, quantum_sl2_module, quantum_weyl_compare,
                                 quantum_weyl_operator, straight_path, string_decomposition, transport,
                                 transport_along_word)

H = 0.1


def sl2(m: int):
    return build_irrep(cartan_matrix("A1"), [m])


def circle(radius: float = 1.0, turns: int = 1) -> PathSpec:
    def piece(t):
        z = radius * cmath.exp(2j * math.pi * turns * t)
        return np.array([z]), np.array([2j * math.pi * turns * z])
    return PathSpec([piece], "circle")


def sorted_eigs(m: np.ndarray) -> np.ndarray:
    e = np.linalg.eigvals(m)
    return e[np.lexsort((np.round(e.imag, 8), np.round(e.real, 8)))]


def _sort(e: np.ndarray) -> np.ndarray:
    return e[np.lexsort((np.round(e.imag, 8), np.round(e.real, 8)))]


def test_scalar_form_around_a_wall():
    c = 0.3 + 0.1j
    form = ConnectionForm([(Fraction(1),)], [np.array([[c]])], 1.0)
    res = transport(form, circle(), tol=1e-11)
    assert abs(res.operator[0, 0] - cmath.exp(2j * math.pi * c)) < 1e-9
    assert res.error_estimate < 1e-8


def test_commuting_constant_form_on_a_contractible_loop():
    form = ConnectionForm([(Fraction(1), Fraction(0))], [np.diag([0.2, -0.7]).astype(complex)], 1.0)

    def piece(t):
        z = np.array([2 + 0.5 * cmath.exp(2j * math.pi * t), 1.0])
        return z, np.array([1j * math.pi * cmath.exp(2j * math.pi * t), 0.0])
    res = transport(form, PathSpec([piece]), tol=1e-11)
    assert np.max(np.abs(res.operator - np.eye(2))) < 1e-9


def test_path_then_reverse_is_identity():
    v = sl2(1)
    form = casimir_form(v, all_positive_roots(v.gcm), H)
    g = generator_path(v.gcm, 0)
    tol = 1e-10
    res = transport(form, g.then(g.reversed()), tol)
    assert np.max(np.abs(res.operator - np.eye(2))) < 2 * tol * 10


def test_composition_order():
    v = build_irrep(cartan_matrix("A2"), [1, 0])
    form = casimir_form(v, all_positive_roots(v.gcm), H)
    x0 = default_basepoint(v.gcm)
    p1 = straight_path(x0, x0 + np.array([0.5, 0.2]))
    p2 = straight_path(x0 + np.array([0.5, 0.2]), x0 + np.array([0.1, 1.0]))
    t12 = transport(form, p1.then(p2)).operator
    t1, t2 = transport(form, p1).operator, transport(form, p2).operator
    assert np.max(np.abs(t12 - t2 @ t1)) < 1e-8


def test_homotopic_paths_agree():
    v = build_irrep(cartan_matrix("A2"), [1, 1])
    form = casimir_form(v, all_positive_roots(v.gcm), H)
    a = transport(form, generator_path(v.gcm, 0, bump=0.5)).operator
    b = transport(form, generator_path(v.gcm, 0, bump=0.8)).operator
    assert np.max(np.abs(a - b)) < 1e-8


def test_path_through_a_wall_is_rejected():
    v = sl2(1)
    form = casimir_form(v, all_positive_roots(v.gcm), H)
    with pytest.raises(TransportError):
        transport(form, straight_path(np.array([1j]), np.array([-1j])))
    with pytest.raises(ValueError):
        transport(form, generator_path(v.gcm, 0), tol=0)


def test_generator_path_is_certified():
    g = cartan_matrix("G2")
    dirs = [r.coeffs for r in all_positive_roots(g).roots]
    for i in range(2):
        p = generator_path(g, i)
        assert certify_path(p, dirs) > 0.1
        assert np.allclose(p.end, [-1j if j == i else p.start[j] - g[i, j] * p.start[i] for j in range(2)])


def test_casimir_form_terms():
    v = sl2(1)
    form = casimir_form(v, all_positive_roots(v.gcm), H)
    assert len(form.directions) == 1
    assert np.allclose(form.residues[0], np.diag([0, 2]) * H / 2)
    assert casimir_form(build_irrep(cartan_matrix("A2"), [1, 1]), all_positive_roots(cartan_matrix("A2")), H).dim == 8


def test_affine_form_merges_imaginary_roots():
    g = cartan_matrix("A1~")
    v = build_irrep(g, [1, 0], depth=3)
    form = casimir_form(v, generate_positive_roots(g, 6), H)
    # real roots of height <= 6: (1,0),(0,1),(2,1),(1,2),(3,2),(2,3); delta, 2 delta, 3 delta share one functional
    assert len(form.directions) == 7
    assert (Fraction(1), Fraction(1)) in form.directions
    with pytest.raises(TransportError):
        casimir_form(v, generate_positive_roots(g, 3), H)


def test_sl2_defining_module_generator_eigenvalues():
    q = cmath.exp(math.pi * 1j * H)
    s = monodromy_data(sl2(1), H).generators()[0]
    expected = _sort(np.array([1j * q ** 0.5, -1j * q ** 0.5]))
    assert np.max(np.abs(sorted_eigs(s) - expected)) < 1e-8


def test_sl2_adjoint_generator_eigenvalues():
    big = math.pi * 1j * H
    s = monodromy_data(sl2(2), H).generators()[0]
    # kappa = (m(m+2) - h^2) / 2 commutes with the Tits operator: weight 0 gives -e^{2 big}, weights +-2 give +-e^{big}
    expected = _sort(np.array([cmath.exp(big), -cmath.exp(big), -cmath.exp(2 * big)]))
    assert np.max(np.abs(sorted_eigs(s) - expected)) < 1e-8


def test_zero_hbar_gives_tits_eigenvalues():
    s = monodromy_data(sl2(1), 0.0).generators()[0]
    assert np.max(np.abs(sorted_eigs(s) - _sort(np.array([1j, -1j])))) < 1e-10


@pytest.mark.parametrize("m", range(5))
@pytest.mark.parametrize("h", [0.1, 0.1 + 0.05j])
def test_corrected_generator_matches_local_model(m, h):
    v = sl2(m)
    s = monodromy_data(v, h).generators()[0]
    assert np.max(np.abs(sorted_eigs(s) - sorted_eigs(local_model(v, 0, h)))) < 1e-8


def test_gauge_scales_sl2_eigenvalues_by_exp_b():
    data = monodromy_data(sl2(1), H)
    base = sorted_eigs(data.generators()[0])
    for a, b in [(0.3, 0.0), (0.0, 0.2), (0.3 + 0.1j, 0.2 - 0.1j)]:
        got = sorted_eigs(data.generators(a, b)[0])
        assert np.max(np.abs(_sort(base * cmath.exp(b)) - got)) < 1e-10
    assert np.allclose(gauge_factor(sl2(1), 0, 0.3, 0.2), np.diag([cmath.exp(0.5), cmath.exp(-0.1)]))


def test_a_equal_b_equal_zero_is_uncorrected_times_abelian_factor():
    data = monodromy_data(sl2(2), H)
    assert np.allclose(data.generators()[0], data.uncorrected[0] @ data.abelian[0])


def test_braid_relations_a2_adjoint():
    v = build_irrep(cartan_matrix("A2"), [1, 1])
    data = monodromy_data(v, H, 1e-10)
    rng = np.random.default_rng(7)
    for _ in range(2):
        a, b = complex(*rng.uniform(-0.5, 0.5, 2)), complex(*rng.uniform(-0.5, 0.5, 2))
        recs = braid_relation_check(data.generators(a, b), v.gcm, 1e-9)
        assert len(recs) == 1 and recs[0].m == 3 and recs[0].passed


def test_braid_relations_commuting_and_right_orientation():
    v = build_irrep(cartan_matrix("A1xA1"), [1, 1])
    data = monodromy_data(v, H)
    recs = braid_relation_check(data.generators(), v.gcm, 1e-8)
    assert recs[0].m == 2 and recs[0].passed
    w = build_irrep(cartan_matrix("A2"), [1, 0])
    assert all(r.passed for r in braid_relation_check(monodromy_data(w, H).generators(orientation="right"),
                                                      w.gcm, 1e-8))


def test_word_evaluation_respects_braid_moves():
    v = build_irrep(cartan_matrix("B2"), [1, 0])
    data = monodromy_data(v, H)
    a = transport_along_word(data, (0, 1, 0, 1), 0.1, 0.2)
    b = transport_along_word(data, (1, 0, 1, 0), 0.1, 0.2)
    assert np.max(np.abs(a - b)) < 1e-7


def test_hbar_to_zero_continuity():
    v = sl2(2)
    limit = monodromy_data(v, 0.0).generators()[0]
    d1 = np.max(np.abs(monodromy_data(v, 1e-2).generators()[0] - limit))
    d2 = np.max(np.abs(monodromy_data(v, 1e-3).generators()[0] - limit))
    assert 5 < d1 / d2 < 20  # linear in hbar


def test_cocycle_ledger_examples():
    a2 = cartan_matrix("A2")
    led = cocycle_ledger(a2, (0,))
    assert len(led.entries) == 1 and led.entries[0][2] == (1, 0)
    empty = cocycle_ledger(a2, ())
    assert empty.entries == [] and np.allclose(empty.evaluate(build_irrep(a2, [1, 0])), np.eye(3))
    g2 = cartan_matrix("G2")
    exps = [e for _, _, e in cocycle_ledger(g2, (0, 1, 0, 1, 0, 1)).entries]
    assert exps == [(1, 0), (3, 1), (2, 1), (3, 2), (1, 1), (0, 1)]


def test_cocycle_ledger_is_commutative_and_diagonal():
    g = cartan_matrix("A2")
    v = build_irrep(g, [1, 1])
    x, y = cocycle_ledger(g, (0, 1)), cocycle_ledger(g, (1,))
    assert x.combine(y).aggregated() == y.combine(x).aggregated()
    m = x.combine(y).evaluate(v)
    assert np.allclose(m, np.diag(np.diag(m)))


@pytest.mark.parametrize("name", ["A2", "B2", "G2", "A3"])
def test_cocycle_ledger_depends_only_on_w0(name):
    from kmcasimir.cartan import reduced_expressions
    g = cartan_matrix(name)
    words = reduced_expressions(g, longest_word(g)).words
    ref = cocycle_ledger(g, words[0])
    for w in words[1:]:
        led = cocycle_ledger(g, w)
        assert led.aggregated() == ref.aggregated()


def test_quantum_sl2_module_relations():
    q = cmath.exp(0.3j)
    e, f = quantum_sl2_module(3, q)
    k = np.diag([q ** (3 - 2 * j) for j in range(4)])
    assert np.allclose(e @ f - f @ e, (k - np.linalg.inv(k)) / (q - 1 / q))


def test_quantum_weyl_operator_is_antidiagonal():
    w = quantum_weyl_operator(3, cmath.exp(0.2j))
    mask = np.fliplr(np.eye(4)).astype(bool)
    assert np.allclose(w[~mask], 0)
    w1 = quantum_weyl_operator(1, 1.0)
    assert np.allclose(w1 @ w1, -np.eye(2))


def test_string_decomposition_sl3_adjoint():
    v = build_irrep(cartan_matrix("A2"), [1, 1])
    assert string_decomposition(v, 0) == [0, 1, 1, 2]


@pytest.mark.parametrize("m", range(5))
def test_quantum_weyl_comparison_sl2(m):
    rep = quantum_weyl_compare(sl2(m), 0, H)
    assert rep.passed and rep.residual < 1e-6


def test_quantum_weyl_comparison_trivial_module():
    rep = quantum_weyl_compare(sl2(0), 0, H)
    assert rep.passed and rep.strings == [0]


def test_quantum_weyl_comparison_sl3_adjoint():
    v = build_irrep(cartan_matrix("A2"), [1, 1])
    data = monodromy_data(v, H)
    for i in range(2):
        rep = quantum_weyl_compare(v, i, H, data=data)
        assert rep.passed and rep.residual < 1e-6


@settings(max_examples=5, deadline=None)
@given(st.floats(min_value=0.02, max_value=0.3), st.floats(min_value=-0.1, max_value=0.1))
def test_sl2_eigenvalues_follow_q_power_law(re, im):
    h = complex(re, im)
    q = cmath.exp(math.pi * 1j * h)
    s = monodromy_data(sl2(1), h).generators()[0]
    expected = _sort(np.array([1j * q ** 0.5, -1j * q ** 0.5]))
    assert np.max(np.abs(sorted_eigs(s) - expected)) < 1e-8


@settings(max_examples=5, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_basis_change_conjugates_transport(seed):
    v = sl2(2)
    form = casimir_form(v, all_positive_roots(v.gcm), H)
    rng = np.random.default_rng(seed)
    p = rng.normal(size=(3, 3)) + np.eye(3) * 3
    pinv = np.linalg.inv(p)
    conj = ConnectionForm(form.directions, [pinv @ r @ p for r in form.residues], H)
    path = generator_path(v.gcm, 0)
    a, b = transport(form, path).operator, transport(conj, path).operator
    assert np.max(np.abs(pinv @ a @ p - b)) < 1e-7
