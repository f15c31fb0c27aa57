from __future__ import annotations

from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from kmcasimir.exact import (block_diag, commutator, expm_nilpotent, inverse, is_zero, kron, max_abs, qarray,
                             qeye, qzeros, rank, rref, solve)

small = st.integers(min_value=-5, max_value=5)


def square(n: int):
    return st.lists(st.lists(small, min_size=n, max_size=n), min_size=n, max_size=n)


def test_rref_pivots_of_rank_one_matrix():
    red, piv = rref(qarray([[2, 4], [1, 2]]))
    assert piv == [0]
    assert list(red[0]) == [1, 2]
    assert rank(qarray([[2, 4], [1, 2]])) == 1


def test_inverse_is_exact():
    a = qarray([[2, 1], [1, 1]])
    assert is_zero(a @ inverse(a) - qeye(2))
    assert inverse(a)[0, 0] == Fraction(1)


def test_solve_returns_rational_solution():
    a = qarray([[3, 0], [0, 2]])
    x = solve(a, np.array([Fraction(1), Fraction(1)], dtype=object))
    assert list(x) == [Fraction(1, 3), Fraction(1, 2)]


def test_expm_of_nilpotent_is_a_finite_sum():
    n = qarray([[0, 1], [0, 0]])
    assert is_zero(expm_nilpotent(n) - qarray([[1, 1], [0, 1]]))


def test_block_diag_and_kron_shapes():
    assert block_diag(qeye(1), qeye(2)).shape == (3, 3)
    assert kron(qeye(2), qarray([[0, 1], [0, 0]])).shape == (4, 4)
    assert max_abs(qzeros(2, 2)) == 0


@settings(max_examples=40, deadline=None)
@given(square(3))
def test_rank_plus_nullity_and_inverse(rows):
    a = qarray(rows)
    r = rank(a)
    assert 0 <= r <= 3
    if r == 3:
        assert is_zero(inverse(a) @ a - qeye(3))


@settings(max_examples=40, deadline=None)
@given(square(2), square(2))
def test_commutator_is_antisymmetric(x, y):
    a, b = qarray(x), qarray(y)
    assert is_zero(commutator(a, b) + commutator(b, a))
