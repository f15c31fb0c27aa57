"""Kac-Moody algebras and integrable highest weight modules over the rationals.

The negative nilpotent part and the modules are both built one weight at a time.
A vector below the top is zero exactly when every raising operator kills it, so
each new weight space is the span of the images ``f_i v`` modulo that kernel
(the Shapovalov radical). Root vectors are iterated brackets of Chevalley
generators, paired with the invariant form computed recursively from
``(e_i, f_i) = 1/d_i``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .cartan import Coeffs, GeneralizedCartanMatrix, Root, RootSlice
from .exact import (commutator, expm_nilpotent, independent_columns, inverse, qeye, qzeros, solve)

Word = tuple[int, ...]


class ModuleError(ValueError):
    pass


def _add(beta: Sequence[int], i: int, s: int = 1) -> Coeffs:
    out = list(beta)
    out[i] += s
    return tuple(out)


@dataclass
class _Level:
    """One graded piece: basis words, candidate coordinates and raising maps."""
    basis: list[Word]
    cand: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    raise_maps: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.basis)


def _select(signatures: list[np.ndarray], keys: list) -> tuple[list[int], dict]:
    """Pick independent signatures; return chosen indices and coordinates of every key."""
    if not signatures:
        return [], {}
    sig = np.stack(signatures, axis=1)
    chosen = independent_columns(sig)
    coords = {}
    if chosen:
        basis = sig[:, chosen]
        for k, key in enumerate(keys):
            coords[key] = solve(basis, sig[:, k])
    return chosen, coords


class KacMoodyAlgebra:
    """Graded pieces of n_- up to a height bound, with the invariant form on root spaces."""

    def __init__(self, gcm: GeneralizedCartanMatrix, max_height: int):
        self.gcm = gcm
        self.max_height = max_height
        self.levels: dict[Coeffs, _Level] = {}
        self._build()

    def _build(self) -> None:
        g = self.gcm
        n = g.n
        for i in range(n):
            self.levels[g.simple_root(i)] = _Level([(i,)])
        frontier = [g.simple_root(i) for i in range(n)]
        for height in range(2, self.max_height + 1):
            targets = sorted({_add(b, i) for b in frontier for i in range(n)})
            new = []
            for beta in targets:
                lvl = self._make_level(beta)
                if lvl.dim:
                    self.levels[beta] = lvl
                    new.append(beta)
            frontier = new
            if not frontier:
                break

    def _raise_candidate(self, beta: Coeffs, i: int, k: int, j: int) -> np.ndarray:
        """ad e_j [f_i, c_k] in the basis of level beta - alpha_j (c_k basis of beta - alpha_i)."""
        g = self.gcm
        target = _add(beta, j, -1)
        tl = self.levels.get(target)
        if tl is None:
            return qzeros(0, 1)[:, 0]
        out = qzeros(tl.dim, 1)[:, 0]
        lower = _add(beta, i, -1)
        if i == j:
            out[k] += -g.pairing(lower, i)
        if sum(lower) == 1:
            if lower == g.simple_root(j):
                # [f_i, h_j] = a_ji f_i
                out[0] += g[j, i]
            return out
        ll = self.levels[lower]
        v = ll.raise_maps[j][:, k] if j in ll.raise_maps else None
        if v is None or v.size == 0:
            return out
        for m, coef in enumerate(v):
            if coef != 0:
                out = out + coef * tl.cand[(i, m)]
        return out

    def _make_level(self, beta: Coeffs) -> _Level:
        n = self.gcm.n
        keys, words = [], []
        for i in range(n):
            lower = _add(beta, i, -1)
            if min(lower) < 0 or lower not in self.levels:
                continue
            for k, w in enumerate(self.levels[lower].basis):
                keys.append((i, k))
                words.append((i,) + w)
        sigs = []
        for (i, k) in keys:
            parts = [self._raise_candidate(beta, i, k, j) for j in range(n)]
            sigs.append(np.concatenate(parts) if parts else qzeros(0, 1)[:, 0])
        chosen, coords = _select(sigs, keys)
        lvl = _Level([words[c] for c in chosen])
        lvl.cand = coords
        for j in range(n):
            target = _add(beta, j, -1)
            if target in self.levels:
                lvl.raise_maps[j] = np.stack([self._raise_candidate(beta, *keys[c], j) for c in chosen], axis=1) \
                    if chosen else qzeros(self.levels[target].dim, 0)
        return lvl

    def root_multiplicity(self, beta: Sequence[int]) -> int:
        lvl = self.levels.get(tuple(beta))
        return 0 if lvl is None else lvl.dim

    def pair(self, word: Word, beta: Coeffs, vec: np.ndarray) -> Fraction:
        """(E_word, F) where F is given by coordinates vec in the basis of level beta."""
        g = self.gcm
        if len(word) == 1:
            i = word[0]
            return vec[0] / g.symmetrizers[i] if beta == g.simple_root(i) else Fraction(0)
        j = word[0]
        lvl = self.levels[beta]
        if j not in lvl.raise_maps:
            return Fraction(0)
        return -self.pair(word[1:], _add(beta, j, -1), lvl.raise_maps[j] @ vec)

    def gram(self, beta: Sequence[int]) -> np.ndarray:
        """G[a, b] = (E_{w_a}, F_{w_b}) over the basis words of the root space."""
        beta = tuple(beta)
        lvl = self.levels[beta]
        m = lvl.dim
        out = qzeros(m, m)
        for b in range(m):
            e = qzeros(m, 1)[:, 0]
            e[b] = Fraction(1)
            for a, w in enumerate(lvl.basis):
                out[a, b] = self.pair(w, beta, e)
        return out

    def basis_words(self, beta: Sequence[int]) -> list[Word]:
        return list(self.levels[tuple(beta)].basis)


# Modules

@dataclass(frozen=True)
class Weight:
    beta: Coeffs  # lambda - mu in simple-root coordinates
    values: tuple[int, ...]  # mu(h_i)
    depth: int  # mu(d) for the derivation (0 in finite type)


class HighestWeightModule:
    """L(lambda), optionally truncated to a down-closed set of weights lambda - beta."""

    def __init__(self, gcm: GeneralizedCartanMatrix, highest_weight: Sequence[int],
                 allowed: Callable[[Coeffs], bool] | None = None, derivation_value: int = 0,
                 label: str = ""):
        hw = tuple(int(x) for x in highest_weight)
        if len(hw) != gcm.n:
            raise ModuleError("highest weight must have one entry per simple root")
        if any(x < 0 for x in hw):
            raise ModuleError(f"highest weight {hw} is not dominant integral")
        self.gcm = gcm
        self.highest_weight = hw
        self.derivation_value = derivation_value
        self.allowed = allowed or (lambda beta: True)
        self.truncated = allowed is not None
        self.label = label
        self.levels: dict[Coeffs, _Level] = {}
        self._build()
        self._index()

    def _weight_values(self, beta: Coeffs) -> tuple[int, ...]:
        g = self.gcm
        return tuple(self.highest_weight[i] - g.pairing(beta, i) for i in range(g.n))

    def _raise_candidate(self, beta: Coeffs, i: int, k: int, j: int) -> np.ndarray:
        target = _add(beta, j, -1)
        tl = self.levels.get(target)
        if tl is None:
            return qzeros(0, 1)[:, 0]
        out = qzeros(tl.dim, 1)[:, 0]
        lower = _add(beta, i, -1)
        if i == j:
            out[k] += self._weight_values(lower)[i]
        ll = self.levels[lower]
        if j in ll.raise_maps and ll.raise_maps[j].size:
            v = ll.raise_maps[j][:, k]
            for m, coef in enumerate(v):
                if coef != 0:
                    out = out + coef * tl.cand[(i, m)]
        return out

    def _build(self) -> None:
        n = self.gcm.n
        zero = tuple(0 for _ in range(n))
        self.levels[zero] = _Level([()])
        frontier = [zero]
        while frontier:
            targets = sorted({_add(b, i) for b in frontier for i in range(n)})
            new = []
            for beta in targets:
                if not self.allowed(beta):
                    continue
                keys, words = [], []
                for i in range(n):
                    lower = _add(beta, i, -1)
                    if min(lower) < 0 or lower not in self.levels:
                        continue
                    for k, w in enumerate(self.levels[lower].basis):
                        keys.append((i, k))
                        words.append((i,) + w)
                sigs = [np.concatenate([self._raise_candidate(beta, i, k, j) for j in range(n)]) for (i, k) in keys]
                chosen, coords = _select(sigs, keys)
                if not chosen:
                    continue
                lvl = _Level([words[c] for c in chosen])
                lvl.cand = coords
                for j in range(n):
                    target = _add(beta, j, -1)
                    if target in self.levels:
                        lvl.raise_maps[j] = np.stack([self._raise_candidate(beta, *keys[c], j) for c in chosen], axis=1)
                self.levels[beta] = lvl
                new.append(beta)
            frontier = new

    def _index(self) -> None:
        order = sorted(self.levels, key=lambda b: (sum(b), b))
        self.weights: list[Weight] = []
        self.offsets: dict[Coeffs, int] = {}
        pos = 0
        for beta in order:
            self.offsets[beta] = pos
            w = Weight(beta, self._weight_values(beta), self.derivation_value - (beta[0] if self.gcm.kind == "affine" else 0))
            for _ in range(self.levels[beta].dim):
                self.weights.append(w)
            pos += self.levels[beta].dim
        self.dim = pos

    def interior(self, i: int) -> list[int]:
        """Indices of weight vectors whose f_i-image stays inside the truncation."""
        return self.interior_for_root(self.gcm.simple_root(i))

    def interior_for_root(self, alpha: Sequence[int]) -> list[int]:
        """Indices of weight vectors mu with mu - alpha still inside the truncation."""
        return [k for k, w in enumerate(self.weights)
                if self.allowed(tuple(b + a for b, a in zip(w.beta, alpha)))]

    def block(self, beta: Sequence[int]) -> slice:
        beta = tuple(beta)
        o = self.offsets[beta]
        return slice(o, o + self.levels[beta].dim)

    def weight_multiplicity(self, beta: Sequence[int]) -> int:
        lvl = self.levels.get(tuple(beta))
        return 0 if lvl is None else lvl.dim

    @cached_property
    def e(self) -> list[np.ndarray]:
        out = []
        for j in range(self.gcm.n):
            m = qzeros(self.dim, self.dim)
            for beta, lvl in self.levels.items():
                if j in lvl.raise_maps and lvl.raise_maps[j].size:
                    m[self.block(_add(beta, j, -1)), self.block(beta)] = lvl.raise_maps[j]
            out.append(m)
        return out

    @cached_property
    def f(self) -> list[np.ndarray]:
        out = []
        for i in range(self.gcm.n):
            m = qzeros(self.dim, self.dim)
            for beta, lvl in self.levels.items():
                lower = _add(beta, i, -1)
                if lower not in self.levels:
                    continue
                cols = [lvl.cand[(i, k)] for k in range(self.levels[lower].dim)]
                m[self.block(beta), self.block(lower)] = np.stack(cols, axis=1)
            out.append(m)
        return out

    @cached_property
    def h(self) -> list[np.ndarray]:
        out = []
        for i in range(self.gcm.n):
            m = qzeros(self.dim, self.dim)
            for k, w in enumerate(self.weights):
                m[k, k] = Fraction(w.values[i])
            out.append(m)
        return out

    @cached_property
    def derivation(self) -> np.ndarray:
        m = qzeros(self.dim, self.dim)
        for k, w in enumerate(self.weights):
            m[k, k] = Fraction(w.depth)
        return m

    def t_action(self, alpha: Sequence) -> np.ndarray:
        """Action of t_alpha = nu^{-1}(alpha): multiplication by (mu, alpha) on weight mu."""
        g = self.gcm
        m = qzeros(self.dim, self.dim)
        for k, w in enumerate(self.weights):
            m[k, k] = sum((Fraction(a) * g.symmetrizers[j] * w.values[j] for j, a in enumerate(alpha)), Fraction(0))
        return m

    def coroot_action(self, alpha: Sequence) -> np.ndarray:
        """h_alpha = 2 t_alpha / (alpha, alpha) for a real root alpha."""
        norm = self.gcm.form(alpha, alpha)
        if norm <= 0:
            raise ModuleError("coroot needs a real root")
        return self.t_action(alpha) * (Fraction(2) / norm)

    def _bracket(self, gens: list[np.ndarray], word: Word, cache: dict) -> np.ndarray:
        if word in cache:
            return cache[word]
        if len(word) == 1:
            out = gens[word[0]]
        else:
            out = commutator(gens[word[0]], self._bracket(gens, word[1:], cache))
        cache[word] = out
        return out

    @cached_property
    def _e_cache(self) -> dict:
        return {}

    @cached_property
    def _f_cache(self) -> dict:
        return {}

    def raising(self, word: Word) -> np.ndarray:
        """[e_{w0}, [e_{w1}, ...]] acting on the module."""
        return self._bracket(self.e, tuple(word), self._e_cache)

    def lowering(self, word: Word) -> np.ndarray:
        return self._bracket(self.f, tuple(word), self._f_cache)

    def is_integrable(self) -> bool:
        """e_i and f_i nilpotent on the (possibly truncated) space.

        The nilpotency index is bounded by the longest alpha_i-string of weights
        plus one, so x^(2^k) is computed by repeated squaring up to that bound.
        """
        betas = set(self.levels)
        for i in range(self.gcm.n):
            longest = 0
            for beta in betas:
                if _add(beta, i, -1) in betas:
                    continue
                n, cur = 0, beta
                while cur in betas:
                    n, cur = n + 1, _add(cur, i)
                longest = max(longest, n)
            for x in (self.e[i], self.f[i]):
                p, power = x, 1
                while power < longest:
                    p, power = p @ p, 2 * power
                if any(v != 0 for v in p.flat):
                    return False
        return True

    def content_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_bundle(), sort_keys=True).encode()).hexdigest()[:16]

    def to_bundle(self) -> dict:
        def triplets(m: np.ndarray) -> list:
            return [[int(r), int(c), str(m[r, c])] for r, c in zip(*np.nonzero(m != 0))]

        return {
            "version": 1,
            "cartan_matrix": [list(r) for r in self.gcm.entries],
            "highest_weight": list(self.highest_weight),
            "dim": self.dim,
            "weights": [list(w.beta) for w in self.weights],
            "e": [triplets(m) for m in self.e],
            "f": [triplets(m) for m in self.f],
        }


def build_irrep(gcm: GeneralizedCartanMatrix, highest_weight: Sequence[int], depth: int | None = None,
                max_height: int | None = None) -> HighestWeightModule:
    """L(lambda) for dominant integral lambda.

    ``depth`` bounds lambda - mu by depth * delta coefficientwise (affine type, required);
    ``max_height`` bounds the height of lambda - mu.
    """
    if gcm.kind == "affine" and depth is None and max_height is None:
        raise ModuleError("affine modules need a depth or height truncation")
    bound = None
    if depth is not None:
        if gcm.kind != "affine":
            raise ModuleError("depth truncation applies to affine type")
        delta = gcm.null_root
        bound = tuple(depth * x for x in delta)

    def allowed(beta: Coeffs) -> bool:
        if bound is not None and any(b > c for b, c in zip(beta, bound)):
            return False
        if max_height is not None and sum(beta) > max_height:
            return False
        return True

    trunc = None if (depth is None and max_height is None) else allowed
    return HighestWeightModule(gcm, highest_weight, trunc, label=f"L{tuple(highest_weight)}")


def tensor_product(a: HighestWeightModule, b: HighestWeightModule) -> "TensorModule":
    return TensorModule([a, b])


@dataclass
class RootVectors:
    root: Coeffs
    raising: list[np.ndarray]  # x_alpha^{(a)}
    lowering: list[np.ndarray]  # x_{-alpha}^{(a)}, dual to raising under the invariant form
    gram: np.ndarray
    words: list[Word]

    @property
    def multiplicity(self) -> int:
        return len(self.words)


class ModuleOperators:
    """Root vectors, Casimirs and Tits operators of a module."""

    def __init__(self, module: HighestWeightModule, algebra: KacMoodyAlgebra | None = None):
        self.module = module
        self.gcm = module.gcm
        self._algebra = algebra
        self._roots: dict[Coeffs, RootVectors] = {}

    def algebra(self, height: int) -> KacMoodyAlgebra:
        if self._algebra is None or self._algebra.max_height < height:
            self._algebra = KacMoodyAlgebra(self.gcm, max(height, 1))
        return self._algebra

    def root_vectors(self, alpha: Sequence[int]) -> RootVectors:
        alpha = tuple(alpha)
        if alpha in self._roots:
            return self._roots[alpha]
        alg = self.algebra(sum(alpha))
        if alg.root_multiplicity(alpha) == 0:
            raise ModuleError(f"{alpha} is not a root")
        words = alg.basis_words(alpha)
        gram = alg.gram(alpha)
        ginv = inverse(gram)
        raising = [self.module.raising(w) for w in words]
        fs = [self.module.lowering(w) for w in words]
        m = len(words)
        lowering = []
        for a in range(m):
            acc = qzeros(self.module.dim, self.module.dim)
            for b in range(m):
                if ginv[b, a] != 0:
                    acc = acc + fs[b] * ginv[b, a]
            lowering.append(acc)
        rv = RootVectors(alpha, raising, lowering, gram, words)
        self._roots[alpha] = rv
        return rv

    def casimir_truncated(self, alpha: Sequence[int]) -> np.ndarray:
        """Normally ordered 2 sum_a x_{-alpha}^{(a)} x_alpha^{(a)}."""
        rv = self.root_vectors(alpha)
        out = qzeros(self.module.dim, self.module.dim)
        for xp, xm in zip(rv.raising, rv.lowering):
            out = out + xm @ xp
        return out * 2

    def casimir_symmetric(self, alpha: Sequence[int]) -> np.ndarray:
        """sum_a (x_alpha x_{-alpha} + x_{-alpha} x_alpha)."""
        rv = self.root_vectors(alpha)
        out = qzeros(self.module.dim, self.module.dim)
        for xp, xm in zip(rv.raising, rv.lowering):
            out = out + xp @ xm + xm @ xp
        return out

    def casimir_rank_one_full(self, i: int) -> np.ndarray:
        """Full Casimir of the sl2 attached to alpha_i, normalized as e f + f e + h^2 / 2."""
        e, f, h = self.module.e[i], self.module.f[i], self.module.h[i]
        return e @ f + f @ e + h @ h / 2

    def tits(self, i: int) -> np.ndarray:
        e, f = self.module.e[i], self.module.f[i]
        try:
            ee = expm_nilpotent(e)
            ef = expm_nilpotent(-f)
        except ValueError as exc:
            raise ModuleError("module is not integrable on this truncation") from exc
        return ee @ ef @ ee

    def certify_duality(self, alpha: Sequence[int]) -> bool:
        """sum_a [x_alpha^{(a)}, x_{-alpha}^{(a)}] = mult * t_alpha on the module.

        On a truncated module the identity is checked on the vectors whose
        x_{-alpha}-image stays inside the truncation.
        """
        rv = self.root_vectors(alpha)
        acc = qzeros(self.module.dim, self.module.dim)
        for xp, xm in zip(rv.raising, rv.lowering):
            acc = acc + commutator(xp, xm)
        cols = self.module.interior_for_root(alpha)
        target = self.module.t_action(alpha) * rv.multiplicity
        return bool(np.all(acc[:, cols] == target[:, cols]))


def dual_root_bases(module: HighestWeightModule, slice_: RootSlice) -> dict[Coeffs, RootVectors]:
    ops = ModuleOperators(module, KacMoodyAlgebra(module.gcm, slice_.cutoff))
    return {r.coeffs: ops.root_vectors(r.coeffs) for r in slice_.roots}


class TensorModule:
    """Tensor product of finitely many modules, used for the double holonomy checks."""

    def __init__(self, factors: Sequence[HighestWeightModule]):
        self.factors = list(factors)
        self.dims = [m.dim for m in self.factors]
        self.dim = int(np.prod(self.dims))

    def embed(self, k: int, op: np.ndarray) -> np.ndarray:
        """1 ⊗ ... ⊗ op (slot k) ⊗ ... ⊗ 1."""
        out = np.array([[Fraction(1)]], dtype=object)
        for j, d in enumerate(self.dims):
            out = np.kron(out, op if j == k else qeye(d))
        return out

    def embed_pair(self, i: int, j: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        out = np.array([[Fraction(1)]], dtype=object)
        for k, d in enumerate(self.dims):
            out = np.kron(out, a if k == i else (b if k == j else qeye(d)))
        return out
