"""Generalized Cartan matrices, truncated positive roots and Weyl group words.

Indices are 0-based. For untwisted affine matrices built by :func:`affine_cartan_matrix`
node 0 is the affine node and nodes 1..n carry the finite part.

Convention: ``a[i][j] = alpha_j(h_i)``, so ``s_i(alpha_j) = alpha_j - a[i][j] alpha_i``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .exact import qarray, rank, rref

Coeffs = tuple[int, ...]
INFINITY = math.inf


class CartanError(ValueError):
    pass


def _components(n: int, adj) -> list[list[int]]:
    seen: set[int] = set()
    comps = []
    for s in range(n):
        if s in seen:
            continue
        comp, stack = [], [s]
        seen.add(s)
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in range(n):
                if u not in seen and adj(v, u):
                    seen.add(u)
                    stack.append(u)
        comps.append(sorted(comp))
    return comps


def _leading_minors_positive(b: list[list[Fraction]], idx: list[int]) -> tuple[bool, Fraction]:
    """Sylvester test on the principal submatrix indexed by idx; returns (all proper minors > 0, det)."""
    sub = [[b[i][j] for j in idx] for i in idx]
    dets = []
    for k in range(1, len(idx) + 1):
        m = qarray([row[:k] for row in sub[:k]])
        dets.append(_det(m))
    return all(d > 0 for d in dets[:-1]), dets[-1]


def _det(m: np.ndarray) -> Fraction:
    a = np.array(m, dtype=object, copy=True)
    n = a.shape[0]
    det = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if a[r, c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            a[[c, p]] = a[[p, c]]
            det = -det
        det *= a[c, c]
        for r in range(c + 1, n):
            if a[r, c] != 0:
                f = a[r, c] / a[c, c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return det


@dataclass(frozen=True)
class GeneralizedCartanMatrix:
    entries: tuple[tuple[int, ...], ...]
    symmetrizers: tuple[Fraction, ...] = ()

    def __post_init__(self) -> None:
        a = tuple(tuple(int(x) for x in row) for row in self.entries)
        n = len(a)
        if n == 0 or any(len(row) != n for row in a):
            raise CartanError("Cartan matrix must be square and nonempty")
        for i in range(n):
            if a[i][i] != 2:
                raise CartanError(f"diagonal entry a[{i}][{i}] must be 2")
            for j in range(n):
                if i != j and a[i][j] > 0:
                    raise CartanError(f"off-diagonal entry a[{i}][{j}] must be <= 0")
                if (a[i][j] == 0) != (a[j][i] == 0):
                    raise CartanError(f"a[{i}][{j}] = 0 must match a[{j}][{i}] = 0")
        object.__setattr__(self, "entries", a)
        d = self._find_symmetrizers() if not self.symmetrizers else tuple(Fraction(x) for x in self.symmetrizers)
        if len(d) != n or any(x <= 0 for x in d):
            raise CartanError("symmetrizers must be n positive rationals")
        for i in range(n):
            for j in range(n):
                if d[i] * a[i][j] != d[j] * a[j][i]:
                    raise CartanError("matrix is not symmetrizable by the given symmetrizers")
        object.__setattr__(self, "symmetrizers", d)

    def _find_symmetrizers(self) -> tuple[Fraction, ...]:
        a = self.entries
        n = len(a)
        d: list[Fraction | None] = [None] * n
        for comp in _components(n, lambda i, j: a[i][j] != 0 and i != j):
            root = comp[0]
            d[root] = Fraction(1)
            queue = deque([root])
            while queue:
                i = queue.popleft()
                for j in comp:
                    if j == i or a[i][j] == 0:
                        continue
                    val = d[i] * a[i][j] / a[j][i]
                    if d[j] is None:
                        d[j] = val
                        queue.append(j)
                    elif d[j] != val:
                        raise CartanError("matrix is not symmetrizable")
            # smallest positive integer representatives on each component
            lcm = math.lcm(*(x.denominator for x in (d[k] for k in comp)))
            ints = [int(d[k] * lcm) for k in comp]
            g = math.gcd(*ints)
            for k, v in zip(comp, ints):
                d[k] = Fraction(v, g)
        return tuple(d)  # type: ignore[arg-type]

    @property
    def n(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        return self.entries[ij[0]][ij[1]]

    @cached_property
    def symmetrized(self) -> tuple[tuple[Fraction, ...], ...]:
        """Matrix (alpha_i, alpha_j) = d_i a_ij."""
        return tuple(tuple(self.symmetrizers[i] * self.entries[i][j] for j in range(self.n)) for i in range(self.n))

    def components(self) -> list[list[int]]:
        a = self.entries
        return _components(self.n, lambda i, j: i != j and a[i][j] != 0)

    def component_kind(self, comp: Sequence[int]) -> str:
        b = [list(r) for r in self.symmetrized]
        proper_pos, det = _leading_minors_positive(b, list(comp))
        if proper_pos and det > 0:
            return "finite"
        if proper_pos and det == 0:
            return "affine"
        return "indefinite"

    @cached_property
    def kind(self) -> str:
        kinds = [self.component_kind(c) for c in self.components()]
        if all(k == "finite" for k in kinds):
            return "finite"
        if "indefinite" not in kinds and kinds.count("affine") == 1:
            return "affine"
        return "indefinite"

    @cached_property
    def null_root(self) -> Coeffs:
        """delta for an indecomposable affine matrix: positive integer kernel vector."""
        if self.kind != "affine" or len(self.components()) != 1:
            raise CartanError("null root is defined for indecomposable affine matrices only")
        red, piv = rref(qarray(self.entries))
        free = [c for c in range(self.n) if c not in piv][0]
        vec = [Fraction(0)] * self.n
        vec[free] = Fraction(1)
        for r, c in enumerate(piv):
            vec[c] = -red[r, free]
        lcm = math.lcm(*(x.denominator for x in vec))
        ints = [int(x * lcm) for x in vec]
        g = math.gcd(*ints)
        ints = [x // g for x in ints]
        if ints[0] < 0:
            ints = [-x for x in ints]
        return tuple(ints)

    def pairing(self, beta: Sequence[int], i: int) -> int:
        """beta(h_i) for beta given in simple-root coordinates."""
        return sum(b * self.entries[i][j] for j, b in enumerate(beta))

    def form(self, beta: Sequence, gamma: Sequence) -> Fraction:
        """Invariant form (beta, gamma) on the root lattice."""
        s = self.symmetrized
        return sum((Fraction(x) * y * s[i][j] for i, x in enumerate(beta) for j, y in enumerate(gamma)), Fraction(0))

    def reflect(self, i: int, beta: Sequence[int]) -> Coeffs:
        c = self.pairing(beta, i)
        out = list(beta)
        out[i] -= c
        return tuple(out)

    def simple_root(self, i: int) -> Coeffs:
        return tuple(1 if k == i else 0 for k in range(self.n))

    def to_json(self) -> dict:
        return {"cartan_matrix": [list(r) for r in self.entries],
                "symmetrizers": [str(x) for x in self.symmetrizers], "kind": self.kind}


def cartan_matrix(name: str) -> GeneralizedCartanMatrix:
    """Named matrices: A<n>, B2, C2 (same as B2), G2, A1xA1, and affine A<n>~.

    B2 and G2 use the ordering in which node 0 is the short simple root.
    Products are written with 'x', e.g. 'A2xA1'.
    """
    name = name.strip()
    if "x" in name:
        parts = [cartan_matrix(p) for p in name.split("x")]
        return direct_sum(*parts)
    if name.endswith("~"):
        return affine_cartan_matrix(cartan_matrix(name[:-1]))
    if name in ("B2", "C2"):
        return GeneralizedCartanMatrix(((2, -2), (-1, 2)))
    if name == "G2":
        return GeneralizedCartanMatrix(((2, -3), (-1, 2)))
    if name.startswith("A") and name[1:].isdigit():
        n = int(name[1:])
        if n < 1:
            raise CartanError("rank must be positive")
        return GeneralizedCartanMatrix(tuple(
            tuple(2 if i == j else (-1 if abs(i - j) == 1 else 0) for j in range(n)) for i in range(n)))
    if name.startswith("D") and name[1:].isdigit() and int(name[1:]) >= 4:
        n = int(name[1:])
        a = [[2 if i == j else 0 for j in range(n)] for i in range(n)]
        for i in range(n - 2):
            a[i][i + 1] = a[i + 1][i] = -1
        a[n - 3][n - 1] = a[n - 1][n - 3] = -1
        return GeneralizedCartanMatrix(tuple(map(tuple, a)))
    raise CartanError(f"unknown Cartan type {name!r}")


def direct_sum(*gcms: GeneralizedCartanMatrix) -> GeneralizedCartanMatrix:
    n = sum(g.n for g in gcms)
    a = [[0] * n for _ in range(n)]
    d: list[Fraction] = []
    off = 0
    for g in gcms:
        for i in range(g.n):
            for j in range(g.n):
                a[off + i][off + j] = g.entries[i][j]
        d.extend(g.symmetrizers)
        off += g.n
    return GeneralizedCartanMatrix(tuple(map(tuple, a)), tuple(d))


def affine_cartan_matrix(finite: GeneralizedCartanMatrix) -> GeneralizedCartanMatrix:
    """Untwisted affinization; the new node 0 is alpha_0 = delta - theta."""
    if finite.kind != "finite" or len(finite.components()) != 1:
        raise CartanError("affinization needs an indecomposable finite matrix")
    theta = highest_root(finite)
    n = finite.n
    # theta coroot pairing: alpha_j(theta^vee) = 2 (theta, alpha_j) / (theta, theta)
    tt = finite.form(theta, theta)
    a = [[0] * (n + 1) for _ in range(n + 1)]
    a[0][0] = 2
    for j in range(n):
        aj = finite.simple_root(j)
        a[0][j + 1] = -int(2 * finite.form(theta, aj) / tt)
        a[j + 1][0] = -finite.pairing(theta, j)
        for k in range(n):
            a[j + 1][k + 1] = finite.entries[j][k]
    return GeneralizedCartanMatrix(tuple(map(tuple, a)))


@dataclass(frozen=True, order=True)
class Root:
    height: int
    coeffs: Coeffs
    kind: str = "real"
    multiplicity: int = 1

    def __post_init__(self) -> None:
        if not (all(c >= 0 for c in self.coeffs) or all(c <= 0 for c in self.coeffs)):
            raise CartanError("root coefficients must share a sign")

    @classmethod
    def make(cls, coeffs: Iterable[int], kind: str = "real", multiplicity: int = 1) -> "Root":
        c = tuple(int(x) for x in coeffs)
        return cls(sum(c), c, kind, multiplicity)

    def label(self) -> str:
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                terms.append(("" if c == 1 else f"{c}") + f"a{i}")
        return "+".join(terms) or "0"


@dataclass(frozen=True)
class RootSlice:
    gcm: GeneralizedCartanMatrix
    cutoff: int
    roots: tuple[Root, ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.roots)

    def __len__(self) -> int:
        return len(self.roots)

    def coeffs(self) -> list[Coeffs]:
        return [r.coeffs for r in self.roots]

    def find(self, coeffs: Sequence[int]) -> Root | None:
        c = tuple(coeffs)
        return next((r for r in self.roots if r.coeffs == c), None)

    def to_json(self) -> list[dict]:
        return [{"coeffs": list(r.coeffs), "height": r.height, "kind": r.kind, "multiplicity": r.multiplicity}
                for r in self.roots]


def _is_positive(c: Sequence[int]) -> bool:
    return all(x >= 0 for x in c) and any(x > 0 for x in c)


def generate_positive_roots(gcm: GeneralizedCartanMatrix, cutoff: int) -> RootSlice:
    """All positive roots of height <= cutoff with multiplicities, ordered by (height, coeffs)."""
    if cutoff < 1:
        raise CartanError("cutoff must be >= 1")
    kind = gcm.kind
    if kind == "indefinite":
        raise CartanError("imaginary root multiplicities are only implemented for finite and affine type")
    real: set[Coeffs] = set()
    queue = deque(gcm.simple_root(i) for i in range(gcm.n))
    real.update(queue)
    while queue:
        beta = queue.popleft()
        for i in range(gcm.n):
            img = gcm.reflect(i, beta)
            if _is_positive(img) and sum(img) <= cutoff and img not in real:
                real.add(img)
                queue.append(img)
    roots = [Root.make(c) for c in real]
    if kind == "affine":
        for comp in gcm.components():
            if gcm.component_kind(comp) != "affine":
                continue
            sub = GeneralizedCartanMatrix(tuple(tuple(gcm.entries[i][j] for j in comp) for i in comp))
            delta_sub = sub.null_root
            delta = [0] * gcm.n
            for k, i in enumerate(comp):
                delta[i] = delta_sub[k]
            mult = len(comp) - 1
            m = 1
            while m * sum(delta) <= cutoff:
                roots.append(Root.make([m * x for x in delta], "imaginary", mult))
                m += 1
    return RootSlice(gcm, cutoff, tuple(sorted(roots)))


def highest_root(gcm: GeneralizedCartanMatrix) -> Coeffs:
    if gcm.kind != "finite":
        raise CartanError("highest root needs finite type")
    roots = generate_positive_roots(gcm, 10 * gcm.n * gcm.n + 10)
    top = max(roots, key=lambda r: r.height)
    return top.coeffs


def all_positive_roots(gcm: GeneralizedCartanMatrix) -> RootSlice:
    """Full positive system for finite type."""
    if gcm.kind != "finite":
        raise CartanError("full root system needs finite type")
    # heights of finite roots never exceed the Coxeter number, which is < 2 * (number of roots) bound below
    bound = 1
    while True:
        s = generate_positive_roots(gcm, bound)
        if max(r.height for r in s) < bound:
            return s
        bound *= 2


def coxeter_label(gcm: GeneralizedCartanMatrix, i: int, j: int) -> float:
    """Order of s_i s_j: 2, 3, 4, 6 or math.inf."""
    if i == j:
        raise CartanError("coxeter_label needs i != j")
    p = gcm.entries[i][j] * gcm.entries[j][i]
    return {0: 2, 1: 3, 2: 4, 3: 6}.get(p, INFINITY)


# Weyl group words

@dataclass(frozen=True)
class WeylWord:
    letters: tuple[int, ...]
    reduced: bool

    def __len__(self) -> int:
        return len(self.letters)


def act(gcm: GeneralizedCartanMatrix, word: Sequence[int], beta: Sequence[int]) -> Coeffs:
    """w(beta) for w = s_{word[0]} ... s_{word[-1]}."""
    out = tuple(beta)
    for i in reversed(word):
        out = gcm.reflect(i, out)
    return out


def is_reduced(gcm: GeneralizedCartanMatrix, word: Sequence[int]) -> bool:
    prefix: list[int] = []
    for i in word:
        if not _is_positive(act(gcm, prefix, gcm.simple_root(i))):
            return False
        prefix.append(i)
    return True


def weyl_word(gcm: GeneralizedCartanMatrix, letters: Sequence[int]) -> WeylWord:
    return WeylWord(tuple(letters), is_reduced(gcm, letters))


def inversion_exponents(gcm: GeneralizedCartanMatrix, word: Sequence[int]) -> list[tuple[Coeffs, Coeffs]]:
    """Pairs (alpha_{i_k}, -w_k(alpha_{i_k})) with w_k = s_{i_1}...s_{i_k}."""
    if not is_reduced(gcm, word):
        raise CartanError(f"word {tuple(word)} is not reduced")
    out = []
    for k, i in enumerate(word):
        w_k = list(word[:k + 1])
        exp = tuple(-x for x in act(gcm, w_k, gcm.simple_root(i)))
        out.append((gcm.simple_root(i), exp))
    return out


def inversion_set(gcm: GeneralizedCartanMatrix, word: Sequence[int]) -> list[Coeffs]:
    """{alpha > 0 : w^{-1} alpha < 0} for w given by a reduced word."""
    inv = list(reversed(word))
    out = []
    for k, i in enumerate(word):
        beta = act(gcm, word[:k], gcm.simple_root(i))
        assert not _is_positive(act(gcm, inv, beta))
        out.append(beta)
    return sorted(out, key=lambda c: (sum(c), c))


def _braid_moves(gcm: GeneralizedCartanMatrix, word: tuple[int, ...]) -> list[tuple[int, ...]]:
    out = []
    n = len(word)
    for start in range(n):
        for length in (2, 3, 4, 6):
            if start + length > n:
                break
            seg = word[start:start + length]
            i, j = seg[0], seg[1] if length > 1 else None
            if i == j:
                continue
            if coxeter_label(gcm, i, j) != length:
                continue
            if all(seg[k] == (i if k % 2 == 0 else j) for k in range(length)):
                new = tuple(j if k % 2 == 0 else i for k in range(length))
                out.append(word[:start] + new + word[start + length:])
    return out


@dataclass
class ReducedWordGraph:
    words: list[tuple[int, ...]]
    edges: list[tuple[int, int]]

    def is_connected(self) -> bool:
        if not self.words:
            return True
        adj: dict[int, set[int]] = {k: set() for k in range(len(self.words))}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        seen, stack = {0}, [0]
        while stack:
            v = stack.pop()
            for u in adj[v] - seen:
                seen.add(u)
                stack.append(u)
        return len(seen) == len(self.words)


def reduced_expressions(gcm: GeneralizedCartanMatrix, word: Sequence[int], max_words: int = 100000) -> ReducedWordGraph:
    """All reduced words of the element given by ``word``, with braid-move edges."""
    start = tuple(word)
    if not is_reduced(gcm, start):
        raise CartanError(f"word {start} is not reduced")
    seen = {start: 0}
    order = [start]
    edges: set[tuple[int, int]] = set()
    queue = deque([start])
    while queue:
        w = queue.popleft()
        for v in _braid_moves(gcm, w):
            if v not in seen:
                if len(seen) >= max_words:
                    raise CartanError("reduced-word enumeration bound exceeded")
                seen[v] = len(order)
                order.append(v)
                queue.append(v)
            a, b = seen[w], seen[v]
            edges.add((min(a, b), max(a, b)))
    idx = sorted(range(len(order)), key=lambda k: order[k])
    remap = {old: new for new, old in enumerate(idx)}
    return ReducedWordGraph([order[k] for k in idx], sorted((remap[a], remap[b]) if remap[a] < remap[b]
                                                            else (remap[b], remap[a]) for a, b in edges))


def longest_word(gcm: GeneralizedCartanMatrix) -> tuple[int, ...]:
    """A reduced word for w_0 (finite type), built greedily by descending through the chamber."""
    if gcm.kind != "finite":
        raise CartanError("longest element needs finite type")
    word: list[int] = []
    while True:
        for i in range(gcm.n):
            if _is_positive(act(gcm, word, gcm.simple_root(i))):
                word.append(i)
                break
        else:
            return tuple(word)


# Rank-2 subsystems

def _plane_key(u: Sequence[int], v: Sequence[int]) -> tuple:
    red, piv = rref(qarray([list(u), list(v)]))
    return tuple(tuple(x for x in row) for row in red[:len(piv)])


def rank2_subsystems(slice_: RootSlice) -> list[tuple[Root, ...]]:
    """Classes U ∩ slice for 2-planes U spanned by slice roots.

    Every pair of non-proportional roots lies in exactly one class. Roots with no
    non-proportional partner form one class together with their proportional roots.
    """
    roots = list(slice_.roots)
    if not roots:
        return []
    planes: dict[tuple, list[Root]] = {}
    for r1, r2 in combinations(roots, 2):
        if rank(qarray([list(r1.coeffs), list(r2.coeffs)])) < 2:
            continue
        key = _plane_key(r1.coeffs, r2.coeffs)
        if key in planes:
            continue
        planes[key] = [r for r in roots
                       if rank(qarray([list(r1.coeffs), list(r2.coeffs), list(r.coeffs)])) == 2]
    classes = [tuple(v) for v in planes.values()]
    covered = {r for c in classes for r in c}
    lonely: dict[tuple, list[Root]] = {}
    for r in roots:
        if r not in covered:
            g = math.gcd(*r.coeffs)
            lonely.setdefault(tuple(x // g for x in r.coeffs), []).append(r)
    classes.extend(tuple(v) for v in lonely.values())
    return sorted(classes, key=lambda c: [(r.height, r.coeffs) for r in c])
