"""Diagrams, nested sets, quotient diagrams and the union embedding of maximal nested sets."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterable, Sequence

from .cartan import GeneralizedCartanMatrix, coxeter_label

Member = frozenset


class DiagramError(ValueError):
    pass


@dataclass(frozen=True)
class Diagram:
    vertices: frozenset
    edges: frozenset  # of frozenset pairs
    labels: tuple = ()  # ((i, j, m_ij), ...) when built from a Cartan matrix

    def __post_init__(self) -> None:
        for e in self.edges:
            if len(e) != 2 or not e <= self.vertices:
                raise DiagramError(f"bad edge {set(e)}")

    @classmethod
    def make(cls, vertices: Iterable, edges: Iterable[Sequence]) -> "Diagram":
        return cls(frozenset(vertices), frozenset(frozenset(e) for e in edges))

    @classmethod
    def from_gcm(cls, gcm: GeneralizedCartanMatrix) -> "Diagram":
        n = gcm.n
        edges = [(i, j) for i, j in combinations(range(n), 2) if gcm[i, j] != 0]
        labels = tuple((i, j, coxeter_label(gcm, i, j)) for i, j in edges)
        return cls(frozenset(range(n)), frozenset(frozenset(e) for e in edges), labels)

    def adjacent(self, i, j) -> bool:
        return frozenset((i, j)) in self.edges

    def neighbours(self, i) -> set:
        return {j for j in self.vertices if self.adjacent(i, j)}

    def restrict(self, verts: Iterable) -> "Diagram":
        v = frozenset(verts)
        return Diagram(v, frozenset(e for e in self.edges if e <= v))

    def components(self, verts: Iterable | None = None) -> list[frozenset]:
        todo = set(self.vertices if verts is None else verts)
        out = []
        while todo:
            start = min(todo)
            comp, stack = {start}, [start]
            while stack:
                v = stack.pop()
                for u in self.neighbours(v) & todo:
                    if u not in comp:
                        comp.add(u)
                        stack.append(u)
            todo -= comp
            out.append(frozenset(comp))
        return sorted(out, key=lambda c: (len(c), sorted(c)))

    def is_connected(self, verts: Iterable) -> bool:
        v = frozenset(verts)
        return bool(v) and len(self.components(v)) == 1

    def orthogonal(self, a: Iterable, b: Iterable) -> bool:
        a, b = frozenset(a), frozenset(b)
        if a & b:
            return False
        return not any(self.adjacent(i, j) for i in a for j in b)

    def compatible(self, a: Iterable, b: Iterable) -> bool:
        a, b = frozenset(a), frozenset(b)
        return a <= b or b <= a or self.orthogonal(a, b)

    def to_json(self) -> dict:
        verts = sorted(self.vertices)
        return {"vertices": verts, "adjacency": {str(v): sorted(self.neighbours(v)) for v in verts}}


def canonical(members: Iterable[Iterable]) -> tuple[Member, ...]:
    """Canonical member ordering: by size, then sorted vertex list."""
    return tuple(sorted((frozenset(m) for m in members), key=lambda m: (len(m), sorted(m))))


@dataclass(frozen=True)
class NestedSet:
    diagram: Diagram
    members: tuple[Member, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", canonical(self.members))

    def __contains__(self, m) -> bool:
        return frozenset(m) in self.members

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def children(self, b: Iterable) -> list[Member]:
        """Maximal members strictly contained in b."""
        b = frozenset(b)
        inside = [m for m in self.members if m < b]
        return [m for m in inside if not any(m < o for o in inside)]

    def parent(self, b: Iterable) -> Member | None:
        """Smallest member strictly containing b (None for maximal members)."""
        b = frozenset(b)
        above = [m for m in self.members if b < m]
        return min(above, key=len) if above else None

    def owned_vertex(self, b: Iterable) -> object:
        """The unique vertex of b not in any smaller member (maximal nested sets only)."""
        b = frozenset(b)
        rest = b - frozenset().union(*self.children(b))
        if len(rest) != 1:
            raise DiagramError(f"member {sorted(b)} owns {len(rest)} vertices")
        return next(iter(rest))

    def owner(self, verts: Iterable) -> Member:
        """Minimal member containing verts."""
        v = frozenset(verts)
        cands = [m for m in self.members if v <= m]
        if not cands:
            raise DiagramError(f"no member contains {sorted(v)}")
        return min(cands, key=len)

    def to_json(self) -> list[list]:
        return [sorted(m) for m in self.members]


@dataclass(frozen=True)
class NestedCheck:
    ok: bool
    witness: tuple | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def is_nested_set(d: Diagram, members: Iterable[Iterable]) -> NestedCheck:
    ms = canonical(members)
    for m in ms:
        if not m <= d.vertices:
            raise DiagramError(f"member {sorted(m)} is not a subdiagram")
        if not d.is_connected(m):
            raise DiagramError(f"member {sorted(m)} is not connected")
    for a, b in combinations(ms, 2):
        if not d.compatible(a, b):
            return NestedCheck(False, (a, b), "incompatible pair")
    for comp in d.components():
        if comp not in ms:
            return NestedCheck(False, (comp,), "missing connected component")
    return NestedCheck(True)


def _mns_connected(d: Diagram, verts: frozenset) -> list[tuple[Member, ...]]:
    out = []
    for i in sorted(verts):
        rest = verts - {i}
        comps = d.components(rest)
        pieces = [_mns_connected(d, c) for c in comps]
        for choice in product(*pieces):
            out.append((verts,) + tuple(m for part in choice for m in part))
    return out


def enumerate_mns(d: Diagram, bound: int = 8) -> list[NestedSet]:
    """All maximal nested sets, each exactly once, in canonical order."""
    if len(d.vertices) > bound:
        raise DiagramError(f"diagram has {len(d.vertices)} vertices, bound is {bound}")
    per_comp = [_mns_connected(d, c) for c in d.components()]
    result = {canonical(m for part in choice for m in part) for choice in product(*per_comp)}
    return [NestedSet(d, ms) for ms in sorted(result, key=lambda ms: [(len(m), sorted(m)) for m in ms])]


def quotient_diagram(d: Diagram, b: Iterable) -> Diagram:
    """D/B: vertices V(D) minus V(B); i, j linked when not orthogonal in D or both touch one component of B."""
    b = frozenset(b)
    if not b <= d.vertices:
        raise DiagramError("B is not a subdiagram of D")
    if b == d.vertices:
        raise DiagramError("B must be a proper subdiagram")
    verts = d.vertices - b
    comps = d.components(b) if b else []
    edges = []
    for i, j in combinations(sorted(verts), 2):
        if not d.orthogonal({i}, {j}):
            edges.append((i, j))
        elif any(not d.orthogonal({i}, c) and not d.orthogonal({j}, c) for c in comps):
            edges.append((i, j))
    return Diagram.make(verts, edges)


def _sub_quotient(d: Diagram, outer: frozenset, inner: frozenset) -> Diagram:
    return quotient_diagram(d.restrict(outer), inner)


def restrict_nested(ns: NestedSet, verts: Iterable) -> NestedSet:
    """Members contained in verts, viewed on the induced subdiagram."""
    v = frozenset(verts)
    return NestedSet(ns.diagram.restrict(v), tuple(m for m in ns.members if m <= v))


def mns_union(d: Diagram, b: Iterable, b1: Iterable, b2: Iterable,
              f: NestedSet, g: NestedSet) -> NestedSet:
    """Union embedding Mns(B2/B1) x Mns(B1/B) -> Mns(B2/B) for B ⊂ B1 ⊂ B2.

    Members of g are kept; each member C of f is lifted to C together with every
    connected component of B1/B that is not orthogonal to C inside B2/B.
    """
    b, b1, b2 = frozenset(b), frozenset(b1), frozenset(b2)
    if not (b <= b1 <= b2 <= d.vertices) or b == b1 or b1 == b2:
        raise DiagramError("need a tower B ⊂ B1 ⊂ B2 of proper inclusions")
    top = _sub_quotient(d, b2, b)
    middle_verts = b1 - b
    pieces = top.components(middle_verts)
    if not all(m <= b2 - b1 for m in f.members):
        raise DiagramError("f does not live on B2/B1")
    if not all(m <= middle_verts for m in g.members):
        raise DiagramError("g does not live on B1/B")
    lifted = []
    for c in f.members:
        extra = [p for p in pieces if not top.orthogonal(c, p)]
        lifted.append(c.union(*extra))
    return NestedSet(top, tuple(lifted) + tuple(g.members))


def mns_on_quotient(d: Diagram, outer: Iterable, inner: Iterable, bound: int = 8) -> list[NestedSet]:
    """Mns(B'/B) for B ⊂ B' (B may be empty)."""
    outer, inner = frozenset(outer), frozenset(inner)
    return enumerate_mns(_sub_quotient(d, outer, inner) if inner else d.restrict(outer), bound)


@dataclass(frozen=True)
class ElementaryPair:
    support: Member
    zero_support: Member
    differing: tuple[Member, Member]
    owned: tuple[object, object]


def elementary_pair(f: NestedSet, g: NestedSet) -> ElementaryPair | None:
    """supp/zsupp data when f and g differ in exactly one member, otherwise None."""
    fs, gs = set(f.members), set(g.members)
    only_f, only_g = fs - gs, gs - fs
    if len(only_f) != 1 or len(only_g) != 1:
        return None
    x, y = next(iter(only_f)), next(iter(only_g))
    common = fs & gs
    supp = min((m for m in common if x <= m and y <= m), key=len)
    i, j = f.owned_vertex(supp), g.owned_vertex(supp)
    return ElementaryPair(supp, supp - {i, j}, (x, y), (i, j))
