from __future__ import annotations

from itertools import combinations, permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kmcasimir.cartan import cartan_matrix
from kmcasimir.diagrams import (Diagram, DiagramError, NestedSet, canonical, elementary_pair, enumerate_mns,
                                is_nested_set, mns_on_quotient, mns_union, quotient_diagram, restrict_nested)

A3 = Diagram.from_gcm(cartan_matrix("A3"))  # path 0 - 1 - 2
D = frozenset({0, 1, 2})


def _subsets(s):
    s = sorted(s)
    return [frozenset(c) for r in range(len(s) + 1) for c in combinations(s, r)]


def _graphs_up_to_isomorphism(n: int) -> list[Diagram]:
    pairs = list(combinations(range(n), 2))
    perms = list(permutations(range(n)))
    seen, out = set(), []
    for mask in range(1 << len(pairs)):
        edges = [p for k, p in enumerate(pairs) if mask >> k & 1]
        key = min(tuple(sorted(tuple(sorted((pi[a], pi[b]))) for a, b in edges)) for pi in perms)
        if key not in seen:
            seen.add(key)
            out.append(Diagram.make(range(n), edges))
    return out


def test_nested_set_examples():
    assert is_nested_set(A3, [D, {0, 1}, {0}])
    check = is_nested_set(A3, [D, {0}, {1}])
    assert not check
    assert set(check.witness) == {frozenset({0}), frozenset({1})}
    assert is_nested_set(A3, [D])


def test_disconnected_member_is_malformed():
    with pytest.raises(DiagramError):
        is_nested_set(A3, [D, {0, 2}])


def test_missing_component_is_not_nested():
    d = Diagram.from_gcm(cartan_matrix("A1xA1"))
    assert not is_nested_set(d, [{0}])
    assert is_nested_set(d, d.components())


def test_mns_counts():
    assert len(enumerate_mns(Diagram.from_gcm(cartan_matrix("A2")))) == 2
    assert len(enumerate_mns(Diagram.from_gcm(cartan_matrix("A1xA1")))) == 1
    assert len(enumerate_mns(A3)) == 5
    assert len(enumerate_mns(Diagram.from_gcm(cartan_matrix("A2xA1")))) == 2


def test_mns_of_a3():
    got = {canonical(ns.members) for ns in enumerate_mns(A3)}
    expected = [[D, {0, 1}, {0}], [D, {0, 1}, {1}], [D, {1, 2}, {1}], [D, {1, 2}, {2}], [D, {0}, {2}]]
    assert got == {canonical(e) for e in expected}


def test_mns_bound():
    with pytest.raises(DiagramError):
        enumerate_mns(Diagram.make(range(4), [(0, 1), (1, 2), (2, 3)]), bound=3)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_mns_product_rule(n):
    for d in _graphs_up_to_isomorphism(n):
        comps = d.components()
        count = 1
        for c in comps:
            count *= len(enumerate_mns(d.restrict(c)))
        assert len(enumerate_mns(d)) == count


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_each_member_owns_one_vertex(n):
    for d in _graphs_up_to_isomorphism(n):
        for ns in enumerate_mns(d):
            assert len(ns) == n
            owned = [ns.owned_vertex(m) for m in ns.members]
            assert sorted(owned) == sorted(d.vertices)


def test_quotient_examples():
    q = quotient_diagram(A3, {1})
    assert q.vertices == frozenset({0, 2}) and q.adjacent(0, 2)
    q = quotient_diagram(A3, {2})
    assert q.vertices == frozenset({0, 1}) and q.adjacent(0, 1)
    q = quotient_diagram(Diagram.from_gcm(cartan_matrix("A1xA1")), {1})
    assert q.vertices == frozenset({0}) and not q.edges
    with pytest.raises(DiagramError):
        quotient_diagram(A3, D)


def test_union_embedding_example():
    fs = mns_on_quotient(A3, D, {0, 1})
    g = NestedSet(A3.restrict({0, 1}), canonical([{0, 1}, {0}]))
    assert len(fs) == 1
    u = mns_union(A3, set(), {0, 1}, D, fs[0], g)
    assert set(u.members) == {D, frozenset({0, 1}), frozenset({0})}


def test_union_embedding_is_injective_on_a3():
    fs = mns_on_quotient(A3, D, {1, 2})
    gs = mns_on_quotient(A3, {1, 2}, set())
    unions = {mns_union(A3, set(), {1, 2}, D, f, g).members for f in fs for g in gs}
    assert len(unions) == len(fs) * len(gs)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_union_restriction_property_exhaustive(n):
    for d in _graphs_up_to_isomorphism(n):
        for b2 in _subsets(d.vertices):
            for b1 in _subsets(b2):
                for b in _subsets(b1):
                    if b == b1 or b1 == b2:
                        continue
                    top = quotient_diagram(d.restrict(b2), b) if b else d.restrict(b2)
                    seen = set()
                    for f in mns_on_quotient(d, b2, b1):
                        for g in mns_on_quotient(d, b1, b):
                            u = mns_union(d, b, b1, b2, f, g)
                            assert is_nested_set(top, u.members)
                            assert len(u) == len(b2 - b)
                            assert set(restrict_nested(u, b1 - b).members) == set(g.members)
                            assert u.members not in seen
                            seen.add(u.members)


def test_elementary_pairs_a2():
    f, g = enumerate_mns(Diagram.from_gcm(cartan_matrix("A2")))
    ep = elementary_pair(f, g)
    assert ep.support == frozenset({0, 1}) and ep.zero_support == frozenset()
    assert elementary_pair(f, f) is None


def test_elementary_pair_in_a3_with_smaller_support():
    f = NestedSet(A3, canonical([D, {0, 1}, {0}]))
    g = NestedSet(A3, canonical([D, {0, 1}, {1}]))
    ep = elementary_pair(f, g)
    assert ep.support == frozenset({0, 1})


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=5), st.data())
def test_random_diagrams_mns_are_nested_and_distinct(n, data):
    pairs = list(combinations(range(n), 2))
    edges = data.draw(st.lists(st.sampled_from(pairs), unique=True) if pairs else st.just([]))
    d = Diagram.make(range(n), edges)
    mns = enumerate_mns(d)
    assert len({ns.members for ns in mns}) == len(mns)
    for ns in mns:
        assert is_nested_set(d, ns.members)
