"""Holonomy algebras as free words, the double holonomy algebra with its strand maps,
and their representations on modules."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations, product
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .cartan import Coeffs, RootSlice, rank2_subsystems
from .exact import commutator, inverse, is_zero, max_abs, qarray, qeye, qzeros, rank
from .kacmoody import HighestWeightModule, ModuleOperators, TensorModule


# Free-word algebra shared by both holonomy algebras

class FreeElement:
    """Noncommutative polynomial: mapping word (tuple of letters) -> coefficient."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple, object] | None = None):
        self.terms = {w: c for w, c in (terms or {}).items() if c != 0}

    @classmethod
    def letter(cls, x) -> "FreeElement":
        return cls({(x,): Fraction(1)})

    @classmethod
    def one(cls) -> "FreeElement":
        return cls({(): Fraction(1)})

    def __add__(self, other: "FreeElement") -> "FreeElement":
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return FreeElement(out)

    def __neg__(self) -> "FreeElement":
        return FreeElement({w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "FreeElement") -> "FreeElement":
        return self + (-other)

    def __mul__(self, other) -> "FreeElement":
        if not isinstance(other, FreeElement):
            return FreeElement({w: c * other for w, c in self.terms.items()})
        out: dict = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                out[w1 + w2] = out.get(w1 + w2, 0) + c1 * c2
        return FreeElement(out)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, FreeElement) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        return " + ".join(f"{c}*{'·'.join(map(str, w)) or '1'}" for w, c in sorted(self.terms.items(), key=str)) or "0"

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def homogeneous(self, d: int) -> "FreeElement":
        return FreeElement({w: c for w, c in self.terms.items() if len(w) == d})

    def map_letters(self, f: Callable[[object], "FreeElement"]) -> "FreeElement":
        """Extend a letter map multiplicatively and linearly."""
        out = FreeElement()
        for w, c in self.terms.items():
            acc = FreeElement.one()
            for x in w:
                acc = acc * f(x)
                if acc.is_zero():
                    break
            out = out + acc * c
        return out

    def evaluate(self, image: Callable[[object], np.ndarray], dim: int) -> np.ndarray:
        out = qzeros(dim, dim)
        cache: dict = {}
        for w, c in self.terms.items():
            acc = qeye(dim)
            for x in w:
                if x not in cache:
                    cache[x] = image(x)
                acc = acc @ cache[x]
            out = out + acc * c
        return out


def bracket(a: FreeElement, b: FreeElement) -> FreeElement:
    return a * b - b * a


# Holonomy algebra t_R

@dataclass
class HolonomyAlgebra:
    """Free algebra on K_alpha (alpha in a slice) modulo the rank-two relations, degreewise."""

    slice_: RootSlice
    classes: list = field(init=False)

    def __post_init__(self) -> None:
        self.classes = rank2_subsystems(self.slice_)

    def generator(self, alpha: Sequence[int]) -> FreeElement:
        alpha = tuple(alpha)
        if self.slice_.find(alpha) is None:
            raise ValueError(f"{alpha} is not in the slice")
        return FreeElement.letter(alpha)

    def relations(self) -> list[tuple[tuple, FreeElement]]:
        out = []
        for cls in self.classes:
            total = FreeElement()
            for r in cls:
                total = total + self.generator(r.coeffs)
            for r in cls:
                out.append(((tuple(x.coeffs for x in cls), r.coeffs), bracket(self.generator(r.coeffs), total)))
        return out

    def ideal_basis(self, degree: int) -> list[FreeElement]:
        """Spanning set of the degree-d part of the relation ideal."""
        if degree < 2:
            return []
        letters = [r.coeffs for r in self.slice_.roots]
        out = []
        rels = [r for _, r in self.relations() if not r.is_zero()]
        for left in range(degree - 1):
            right = degree - 2 - left
            for u in product(letters, repeat=left):
                for v in product(letters, repeat=right):
                    uu = FreeElement({u: Fraction(1)})
                    vv = FreeElement({v: Fraction(1)})
                    for r in rels:
                        out.append(uu * r * vv)
        return out

    def in_ideal(self, x: FreeElement) -> bool:
        """Membership of x in the relation ideal, decided degree by degree."""
        for d in sorted({len(w) for w in x.terms}):
            part = x.homogeneous(d)
            basis = self.ideal_basis(d)
            words = sorted({w for b in basis for w in b.terms} | set(part.terms))
            idx = {w: k for k, w in enumerate(words)}
            if not basis:
                return False
            m = qzeros(len(words), len(basis))
            for c, b in enumerate(basis):
                for w, v in b.terms.items():
                    m[idx[w], c] = Fraction(v)
            col = qzeros(len(words), 1)
            for w, v in part.terms.items():
                col[idx[w], 0] = Fraction(v)
            if rank(np.concatenate([m, col], axis=1)) != rank(m):
                return False
        return True


@dataclass
class RelationRecord:
    relation: str
    data: str
    max_entry: float
    passed: bool

    def to_json(self) -> dict:
        return {"relation": self.relation, "class": self.data, "max_abs": self.max_entry, "pass": self.passed}


def casimir_images(module: HighestWeightModule, slice_: RootSlice, hbar=Fraction(1),
                   ops: ModuleOperators | None = None) -> dict[Coeffs, np.ndarray]:
    """xi(K_alpha) = (hbar / 2) K_alpha^+ on the module for every slice root."""
    ops = ops or ModuleOperators(module)
    return {r.coeffs: ops.casimir_truncated(r.coeffs) * (Fraction(hbar) / 2) for r in slice_.roots}


def relation_check_tt(slice_: RootSlice, module: HighestWeightModule, hbar=Fraction(1),
                      ops: ModuleOperators | None = None) -> list[RelationRecord]:
    """[xi K_alpha, sum_{beta in class} xi K_beta] for every rank-two class, exactly."""
    images = casimir_images(module, slice_, hbar, ops)
    out = []
    for cls in rank2_subsystems(slice_):
        total = sum((images[r.coeffs] for r in cls), qzeros(module.dim, module.dim))
        for r in cls:
            c = commutator(images[r.coeffs], total)
            m = max_abs(c)
            out.append(RelationRecord("tt", f"{[x.coeffs for x in cls]} / {r.coeffs}", float(m), m == 0))
    return out


# Double holonomy algebra

@dataclass(frozen=True, order=True)
class Omega:
    """Omega_{ij} (root None) or Omega^root_{ij} with root in R ∪ {0}; 1 <= i < j."""
    i: int
    j: int
    root: Coeffs | None = None


@dataclass(frozen=True, order=True)
class Kblock:
    """K^{(m)}_{alpha, i}: Casimir of alpha on consecutive strands i .. i+m-1."""
    root: Coeffs
    start: int
    size: int


def omega(i: int, j: int, root: Sequence[int] | None = None) -> FreeElement:
    return FreeElement.letter(Omega(i, j, None if root is None else tuple(root)))


def kblock(root: Sequence[int], start: int, size: int) -> FreeElement:
    if size == 0:
        return FreeElement()
    return FreeElement.letter(Kblock(tuple(root), start, size))


def _pull_letter(letter, strand_map: Callable[[int], list[int]]) -> FreeElement:
    """Image of a generator under the map sending strand s to the strands strand_map(s)."""
    if isinstance(letter, Omega):
        out = FreeElement()
        for a in strand_map(letter.i):
            for b in strand_map(letter.j):
                out = out + omega(a, b, letter.root)
        return out
    block = [t for s in range(letter.start, letter.start + letter.size) for t in strand_map(s)]
    if not block:
        return FreeElement()
    return kblock(letter.root, min(block), len(block))


def face_map(n: int, k: int, x: FreeElement) -> FreeElement:
    """d_n^k from n strands to n + 1 strands, 0 <= k <= n + 1.

    k = 0 inserts a strand in front, k = n + 1 appends one, and 1 <= k <= n doubles strand k.
    """
    if not 0 <= k <= n + 1:
        raise IndexError(f"face index {k} out of range for n = {n}")

    def strands(s: int) -> list[int]:
        if not 1 <= s <= n:
            raise IndexError(f"strand {s} out of range for n = {n}")
        if k == 0:
            return [s + 1]
        if k == n + 1:
            return [s]
        if s < k:
            return [s]
        if s == k:
            return [k, k + 1]
        return [s + 1]

    return x.map_letters(lambda letter: _pull_letter(letter, strands))


def degeneracy_map(n: int, k: int, x: FreeElement) -> FreeElement:
    """s_n^k from n strands to n - 1 strands, 1 <= k <= n: strand k becomes the unit object."""
    if not 1 <= k <= n:
        raise IndexError(f"degeneracy index {k} out of range for n = {n}")

    def strands(s: int) -> list[int]:
        if not 1 <= s <= n:
            raise IndexError(f"strand {s} out of range for n = {n}")
        if s == k:
            return []
        return [s] if s < k else [s - 1]

    return x.map_letters(lambda letter: _pull_letter(letter, strands))


def double_generators(n: int, roots: Iterable[Sequence[int]]) -> list[FreeElement]:
    """All generators of the n-strand double holonomy algebra over the given positive roots."""
    roots = [tuple(r) for r in roots]
    zero = tuple(0 for _ in roots[0]) if roots else ()
    out = []
    for i, j in combinations(range(1, n + 1), 2):
        out.append(omega(i, j))
        out.append(omega(i, j, zero))
        for r in roots:
            out.append(omega(i, j, r))
            out.append(omega(i, j, tuple(-x for x in r)))
    for r in roots:
        for start in range(1, n + 1):
            for size in range(1, n - start + 2):
                out.append(kblock(r, start, size))
    return out


def cosimplicial_identity_failures(n_max: int, roots: Iterable[Sequence[int]]) -> list[str]:
    """Check the cosimplicial identities on every generator for 1 <= n <= n_max.

    Written with 0-based codegeneracies sigma^j = s^{j+1}:
    d^j d^i = d^i d^{j-1} (i < j); sigma^j sigma^i = sigma^i sigma^{j+1} (i <= j);
    sigma^j d^i = d^i sigma^{j-1} (i < j), id (i = j, j + 1), d^{i-1} sigma^j (i > j + 1).
    """
    roots = [tuple(r) for r in roots]
    fails = []

    def sigma(n: int, j: int, x: FreeElement) -> FreeElement:
        return degeneracy_map(n, j + 1, x)

    for n in range(1, n_max + 1):
        gens = double_generators(n, roots)
        for x in gens:
            for i in range(n + 2):
                for j in range(i + 1, n + 3):
                    lhs = face_map(n + 1, j, face_map(n, i, x))
                    rhs = face_map(n + 1, i, face_map(n, j - 1, x))
                    if lhs != rhs:
                        fails.append(f"d{j}d{i} n={n} {x}")
            if n >= 2:
                for i in range(n - 1):
                    for j in range(i, n - 1):
                        lhs = sigma(n - 1, j, sigma(n, i, x))
                        rhs = sigma(n - 1, i, sigma(n, j + 1, x))
                        if lhs != rhs:
                            fails.append(f"s{j}s{i} n={n} {x}")
            # sigma^j d^i on an n-strand generator: d^i goes to n + 1, sigma^j back to n
            for i in range(n + 2):
                for j in range(n + 1):
                    lhs = sigma(n + 1, j, face_map(n, i, x))
                    if i < j:
                        rhs = face_map(n - 1, i, sigma(n, j - 1, x)) if n >= 1 else None
                    elif i in (j, j + 1):
                        rhs = x
                    else:
                        rhs = face_map(n - 1, i - 1, sigma(n, j, x))
                    if lhs != rhs:
                        fails.append(f"s{j}d{i} n={n} {x}")
    return fails


class DoubleHolonomyRepresentation:
    """xi on the tensor product of finite-dimensional modules (finite type)."""

    def __init__(self, factors: Sequence[HighestWeightModule], slice_: RootSlice, hbar=Fraction(1)):
        self.tensor = TensorModule(factors)
        self.n = len(factors)
        self.slice_ = slice_
        self.hbar = Fraction(hbar)
        self.gcm = factors[0].gcm
        if self.gcm.kind != "finite":
            raise ValueError("double holonomy representation needs finite type")
        self.ops = [ModuleOperators(m) for m in factors]
        self.zero = tuple(0 for _ in range(self.gcm.n))

    def _root_pair(self, slot_i: int, slot_j: int, root: Coeffs) -> np.ndarray:
        positive = all(x >= 0 for x in root)
        alpha = root if positive else tuple(-x for x in root)
        acc = qzeros(self.tensor.dim, self.tensor.dim)
        rv_i = self.ops[slot_i].root_vectors(alpha)
        rv_j = self.ops[slot_j].root_vectors(alpha)
        for a in range(rv_i.multiplicity):
            if positive:
                left, right = rv_i.raising[a], rv_j.lowering[a]
            else:
                left, right = rv_i.lowering[a], rv_j.raising[a]
            acc = acc + self.tensor.embed_pair(slot_i, slot_j, left, right)
        return acc

    def _cartan_pair(self, slot_i: int, slot_j: int) -> np.ndarray:
        g = self.gcm
        # (h_k, h_l) = a_kl / d_l
        m = qarray([[Fraction(g[k, l]) / g.symmetrizers[l] for l in range(g.n)] for k in range(g.n)])
        minv = inverse(m)
        acc = qzeros(self.tensor.dim, self.tensor.dim)
        for k in range(g.n):
            for l in range(g.n):
                if minv[k, l] != 0:
                    acc = acc + self.tensor.embed_pair(slot_i, slot_j, self.tensor.factors[slot_i].h[k],
                                                       self.tensor.factors[slot_j].h[l]) * minv[k, l]
        return acc

    def _casimir_block(self, root: Coeffs, start: int, size: int) -> np.ndarray:
        slots = range(start - 1, start - 1 + size)
        d = self.tensor.dim
        rvs = [self.ops[s].root_vectors(root) for s in slots]
        acc = qzeros(d, d)
        for a in range(rvs[0].multiplicity):
            up = sum((self.tensor.embed(s, rv.raising[a]) for s, rv in zip(slots, rvs)), qzeros(d, d))
            down = sum((self.tensor.embed(s, rv.lowering[a]) for s, rv in zip(slots, rvs)), qzeros(d, d))
            acc = acc + down @ up
        return acc * self.hbar  # (hbar / 2) * 2 sum x_- x_+

    def image(self, letter) -> np.ndarray:
        if isinstance(letter, Omega):
            i, j = letter.i - 1, letter.j - 1
            if letter.root is None:
                total = self._cartan_pair(i, j)
                for r in self.slice_.roots:
                    total = total + self._root_pair(i, j, r.coeffs) + self._root_pair(i, j, tuple(-x for x in r.coeffs))
                return total * self.hbar
            if letter.root == self.zero:
                return self._cartan_pair(i, j) * self.hbar
            return self._root_pair(i, j, letter.root) * self.hbar
        return self._casimir_block(letter.root, letter.start, letter.size)

    def evaluate(self, x: FreeElement) -> np.ndarray:
        return x.evaluate(self.image, self.tensor.dim)

    def relation_suite(self) -> list[RelationRecord]:
        n = self.n
        roots = [r.coeffs for r in self.slice_.roots]
        all_roots = [self.zero] + roots + [tuple(-x for x in r) for r in roots]
        out: list[RelationRecord] = []

        def record(name: str, data: str, elem: FreeElement) -> None:
            m = max_abs(self.evaluate(elem))
            out.append(RelationRecord(name, data, float(m), m == 0))

        def om(i: int, j: int, root=None) -> FreeElement:
            return omega(min(i, j), max(i, j), root) if root is None else omega(i, j, root)

        for i, j, k in permutations(range(1, n + 1), 3):
            record("Omega", f"[O{i}{j}, O{i}{k}+O{j}{k}]", bracket(om(i, j), om(i, k) + om(j, k)))
        for (i, j), (k, l) in product(combinations(range(1, n + 1), 2), repeat=2):
            if {i, j} & {k, l}:
                continue
            record("Omega", f"[O{i}{j}, O{k}{l}]", bracket(om(i, j), om(k, l)))
            for a, b in product(all_roots, repeat=2):
                record("Omegaalpha", f"[O{i}{j}^{a}, O{k}{l}^{b}]", bracket(omega(i, j, a), omega(k, l, b)))
        for i, j in combinations(range(1, n + 1), 2):
            total = FreeElement()
            for a in all_roots:
                total = total + omega(i, j, a)
            record("Omegaalpha", f"O{i}{j} = sum", om(i, j) - total)
        for (i, j), (k, l) in product(combinations(range(1, n + 1), 2), repeat=2):
            record("Omega0", f"[O{i}{j}^0, O{k}{l}^0]", bracket(omega(i, j, self.zero), omega(k, l, self.zero)))
        for cls in rank2_subsystems(self.slice_):
            total = FreeElement()
            for r in cls:
                total = total + kblock(r.coeffs, 1, n)
            for r in cls:
                record("tt", f"{r.coeffs}", bracket(kblock(r.coeffs, 1, n), total))
        for i, j in combinations(range(1, n + 1), 2):
            for r in roots:
                record("mixed", f"[O{i}{j}, K{r}^(n)]", bracket(om(i, j), kblock(r, 1, n)))
        for i, j in combinations(range(1, n + 1), 2):
            for a in all_roots:
                for r in roots:
                    for k in range(1, n + 1):
                        if k in (i, j):
                            continue
                        record("mixed", f"[O{i}{j}^{a}, K{r},{k}]", bracket(omega(i, j, a), kblock(r, k, 1)))
        for r in roots:
            rhs = FreeElement()
            for i, j in combinations(range(1, n + 1), 2):
                rhs = rhs + omega(i, j, r) + omega(i, j, tuple(-x for x in r))
            for k in range(1, n + 1):
                rhs = rhs + kblock(r, k, 1)
            record("Kdecomp", f"{r}", kblock(r, 1, n) - rhs)
        return out
