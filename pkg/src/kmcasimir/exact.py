"""Exact rational linear algebra on numpy object arrays of Fractions."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

Q = Fraction


def qzeros(rows: int, cols: int) -> np.ndarray:
    return np.full((rows, cols), Q(0), dtype=object)


def qeye(n: int) -> np.ndarray:
    m = qzeros(n, n)
    for i in range(n):
        m[i, i] = Q(1)
    return m


def qarray(rows: Sequence[Sequence]) -> np.ndarray:
    data = [[Q(x) for x in row] for row in rows]
    if not data:
        return qzeros(0, 0)
    return np.array(data, dtype=object).reshape(len(data), len(data[0]))


def is_zero(m: np.ndarray) -> bool:
    return all(x == 0 for x in m.flat)


def max_abs(m: np.ndarray) -> Fraction:
    return max((abs(x) for x in m.flat), default=Q(0))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def rref(m: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns."""
    a = np.array(m, dtype=object, copy=True)
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = next((k for k in range(r, rows) if a[k, c] != 0), None)
        if p is None:
            continue
        if p != r:
            a[[r, p]] = a[[p, r]]
        piv = a[r, c]
        a[r] = [x / piv for x in a[r]]
        for k in range(rows):
            if k != r and a[k, c] != 0:
                f = a[k, c]
                a[k] = [x - f * y for x, y in zip(a[k], a[r])]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(m: np.ndarray) -> int:
    if m.size == 0:
        return 0
    return len(rref(m)[1])


def independent_columns(m: np.ndarray) -> list[int]:
    """Greedy maximal set of linearly independent columns (leftmost first)."""
    if m.size == 0:
        return []
    return rref(m)[1]


def solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ x = b exactly; a must have full column rank and b must lie in its range."""
    rows, cols = a.shape
    bb = b.reshape(rows, -1)
    aug = np.concatenate([a, bb], axis=1)
    red, pivots = rref(aug)
    if any(p >= cols for p in pivots):
        raise ValueError("inconsistent linear system")
    if len(pivots) != cols:
        raise ValueError("system matrix is rank deficient")
    x = red[:cols, cols:]
    return x.reshape((cols,) + b.shape[1:])


def inverse(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix is not square")
    return solve(a, qeye(n))


def expm_nilpotent(x: np.ndarray, max_terms: int | None = None) -> np.ndarray:
    """exp(x) for nilpotent x, exactly."""
    n = x.shape[0]
    limit = n + 1 if max_terms is None else max_terms
    out = qeye(n)
    term = qeye(n)
    for k in range(1, limit + 1):
        term = (term @ x) / k
        if is_zero(term):
            return out
        out = out + term
    raise ValueError("operator is not nilpotent on this space")


def block_diag(*blocks: np.ndarray) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    m = sum(b.shape[1] for b in blocks)
    out = qzeros(n, m)
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b)


def to_complex(m: np.ndarray) -> np.ndarray:
    return np.asarray(m, dtype=object).astype(complex)
