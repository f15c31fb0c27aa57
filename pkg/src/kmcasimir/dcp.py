"""Blow-up charts of maximal nested sets, fundamental solutions normalized at their
corners, and the associators comparing them (finite type).

Conventions. ``Kc[alpha] = (hbar/2) K_alpha`` are the residues of the connection
``A = sum_alpha Kc[alpha] dlog alpha``. For a maximal nested set F,
``G_F = H_F prod_B x_B^{R_B}`` with ``H_F = 1`` at the corner ``u = 0``. Solutions are
evaluated on the real fundamental chamber, where every ``x_B`` and ``u_B`` is
positive and logarithms are real. Associators follow ``G_G = G_F Phi_FG``, that is
``Phi_FG = G_F^{-1} G_G``, so that ``Phi_FG Phi_GH = Phi_FH``.

Points are evaluated along the ray that scales every non-maximal ``u_B`` by
``s in (0, 1]``: then ``x_B(s) = s^{depth(B)} x_B`` with depth the number of
non-maximal members containing B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.linalg import expm

from .cartan import Coeffs, GeneralizedCartanMatrix, all_positive_roots
from .diagrams import Diagram, NestedSet, elementary_pair, enumerate_mns
from .exact import commutator, is_zero, qzeros, to_complex
from .kacmoody import HighestWeightModule, ModuleOperators
from .transport import ConnectionForm, PathSpec, transport


class DcpError(RuntimeError):
    pass


@dataclass
class DcpSystem:
    """Roots supported on ``vertices`` with their exact normally ordered Casimirs on a module."""
    gcm: GeneralizedCartanMatrix
    vertices: frozenset
    roots: list[Coeffs]
    casimirs: dict[Coeffs, np.ndarray]  # exact Fraction matrices K_alpha
    hbar: complex

    @property
    def dim(self) -> int:
        return next(iter(self.casimirs.values())).shape[0]

    @property
    def diagram(self) -> Diagram:
        return Diagram.from_gcm(self.gcm).restrict(self.vertices)

    def residue(self, alpha: Coeffs) -> np.ndarray:
        return to_complex(self.casimirs[alpha]) * (self.hbar / 2)

    def restricted(self, vertices) -> "DcpSystem":
        v = frozenset(vertices)
        roots = [r for r in self.roots if _support(r) <= v]
        return DcpSystem(self.gcm, v, roots, {r: self.casimirs[r] for r in roots}, self.hbar)

    def with_hbar(self, hbar: complex) -> "DcpSystem":
        return DcpSystem(self.gcm, self.vertices, self.roots, self.casimirs, hbar)

    def form(self) -> ConnectionForm:
        return ConnectionForm([tuple(Fraction(c) for c in r) for r in self.roots],
                              [self.residue(r) for r in self.roots], self.hbar)


def _support(alpha: Sequence[int]) -> frozenset:
    return frozenset(i for i, c in enumerate(alpha) if c)


def dcp_system(module: HighestWeightModule, hbar: complex, vertices=None,
               ops: ModuleOperators | None = None) -> DcpSystem:
    gcm = module.gcm
    if gcm.kind != "finite":
        raise DcpError("fundamental solutions are implemented for finite type only")
    ops = ops or ModuleOperators(module)
    v = frozenset(range(gcm.n)) if vertices is None else frozenset(vertices)
    roots = [r.coeffs for r in all_positive_roots(gcm).roots if _support(r.coeffs) <= v]
    return DcpSystem(gcm, v, roots, {r: ops.casimir_truncated(r) for r in roots}, hbar)


# Charts

class BlowupChart:
    """Coordinates x_B = sum_{i in B} alpha_i and u_B = x_B / x_{c(B)} of a maximal nested set."""

    def __init__(self, nested: NestedSet):
        self.nested = nested
        self.members = list(nested.members)
        self.maximal = [b for b in self.members if nested.parent(b) is None]
        self.owned = {b: nested.owned_vertex(b) for b in self.members}
        if sorted(self.owned.values()) != sorted(nested.diagram.vertices):
            raise DcpError("owned vertices do not biject with the diagram vertices")
        self.depth = {b: sum(1 for c in self.members if b <= c and c not in self.maximal) for b in self.members}

    def p(self, alpha: Sequence[int]) -> frozenset:
        """Minimal member containing the support of alpha."""
        return self.nested.owner(_support(alpha))

    def c(self, b) -> frozenset | None:
        return self.nested.parent(b)

    def simple_root_of(self, b) -> int:
        return self.owned[frozenset(b)]

    def x(self, z: Sequence) -> dict:
        return {b: sum(z[i] for i in b) for b in self.members}

    def u(self, z: Sequence) -> dict:
        xs = self.x(z)
        return {b: xs[b] if self.c(b) is None else xs[b] / xs[self.c(b)] for b in self.members}

    def x_from_u(self, u: dict) -> dict:
        out = {}
        for b in self.members:
            val = 1
            for c in self.members:
                if b <= c:
                    val = val * u[c]
            out[b] = val
        return out

    def z_from_x(self, xs: dict, n: int) -> list:
        """Inverse coordinates: alpha_{owned(B)} = x_B - sum over children of x_C."""
        z = [0] * n
        for b in self.members:
            z[self.owned[b]] = xs[b] - sum(xs[c] for c in self.nested.children(b))
        return z

    def z_from_u(self, u: dict, n: int) -> list:
        return self.z_from_x(self.x_from_u(u), n)

    def ray(self, z: Sequence, s: float, n: int) -> list:
        xs = self.x(z)
        return self.z_from_x({b: xs[b] * s ** self.depth[b] for b in self.members}, n)

    def to_json(self) -> dict:
        return {"members": [sorted(b) for b in self.members],
                "owned": {",".join(map(str, sorted(b))): v for b, v in self.owned.items()},
                "parent": {",".join(map(str, sorted(b))): (sorted(self.c(b)) if self.c(b) else None)
                           for b in self.members}}


# Polynomials in the u coordinates: dict monomial -> Fraction, monomial = sorted tuple of members.

Poly = dict


def _padd(a: Poly, b: Poly, scale=1) -> Poly:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + scale * v
        if out[k] == 0:
            del out[k]
    return out


def _pmul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = tuple(sorted(ka + kb, key=lambda m: (len(m), sorted(m))))
            out[k] = out.get(k, 0) + va * vb
            if out[k] == 0:
                del out[k]
    return out


def _monomial(members) -> Poly:
    return {tuple(sorted(members, key=lambda m: (len(m), sorted(m)))): Fraction(1)}


def chart_polynomials(chart: BlowupChart, roots: Sequence[Coeffs]) -> dict[Coeffs, Poly]:
    """P_alpha = alpha / x_{p(alpha)} as exact polynomials in the u coordinates.

    Simple roots: P = 1 - sum of u_C over children C of p(alpha). General roots:
    P_gamma = sum_C m_C (prod_{C <= E < p(gamma)} u_E) P_{alpha_C}.
    """
    simple = {}
    for b in chart.members:
        poly: Poly = {(): Fraction(1)}
        for c in chart.nested.children(b):
            poly = _padd(poly, _monomial([c]), -1)
        simple[chart.owned[b]] = (b, poly)
    out = {}
    for alpha in roots:
        top = chart.p(alpha)
        acc: Poly = {}
        for i, m in enumerate(alpha):
            if not m:
                continue
            b, poly = simple[i]
            chain = [e for e in chart.members if b <= e and e < top]
            acc = _padd(acc, _pmul(_monomial(chain), poly), m)
        out[tuple(alpha)] = acc
    return out


def evaluate_poly(poly: Poly, u: dict):
    total = 0
    for mono, coeff in poly.items():
        term = coeff
        for m in mono:
            term = term * u[m]
        total = total + term
    return total


def check_chart_polynomials(chart: BlowupChart, roots: Sequence[Coeffs], samples: int = 5, seed: int = 0) -> bool:
    """Exact check that P_alpha x_{p(alpha)} = alpha at random rational u."""
    import random
    rng = random.Random(seed)
    polys = chart_polynomials(chart, roots)
    n = max(max(chart.nested.diagram.vertices) + 1, len(roots[0]))
    for _ in range(samples):
        u = {b: Fraction(rng.randint(1, 9), rng.randint(1, 9)) for b in chart.members}
        z = chart.z_from_u(u, n)
        xs = chart.x_from_u(u)
        for alpha, poly in polys.items():
            lhs = evaluate_poly(poly, u) * xs[chart.p(alpha)]
            if lhs != sum(c * z[i] for i, c in enumerate(alpha)):
                return False
    return True


# Residues

@dataclass
class ResidueOperators:
    chart: BlowupChart
    r: dict  # member -> exact R_B (unscaled sum of K_alpha over p(alpha) = B)
    k: dict  # member -> exact K_B = sum_{C <= B} R_C

    def commuting(self) -> bool:
        ms = self.chart.members
        return all(is_zero(commutator(self.k[a], self.k[b])) for a, b in combinations(ms, 2))

    def residue_identity(self) -> bool:
        """sum_B R_B dlog x_B = sum_B K_B dlog u_B, compared coefficientwise in dlog u."""
        for c in self.chart.members:
            lhs = qzeros(*self.k[c].shape)
            for b in self.chart.members:
                if b <= c:
                    lhs = lhs + self.r[b]
            if not is_zero(lhs - self.k[c]):
                return False
        return True


def residue_operators(chart: BlowupChart, system: DcpSystem) -> ResidueOperators:
    r = {b: qzeros(system.dim, system.dim) for b in chart.members}
    for alpha in system.roots:
        b = chart.p(alpha)
        r[b] = r[b] + system.casimirs[alpha]
    k = {}
    for b in chart.members:
        acc = qzeros(system.dim, system.dim)
        for c in chart.members:
            if c <= b:
                acc = acc + r[c]
        k[b] = acc
    return ResidueOperators(chart, r, k)


def _corner_power(chart: BlowupChart, res: ResidueOperators, z: Sequence, hbar: complex) -> np.ndarray:
    """prod_B x_B(z)^{(hbar/2) R_B}; the R_B commute."""
    xs = chart.x(z)
    expo = sum(math.log(float(xs[b])) * to_complex(res.r[b]) for b in chart.members)
    return expm(hbar / 2 * expo)


# Fundamental solutions

@dataclass
class SolutionRecord:
    operator: np.ndarray
    error_estimate: float
    strategy: str
    stats: dict = field(default_factory=dict)


def _check_point(chart: BlowupChart, system: DcpSystem, z: Sequence) -> None:
    for alpha in system.roots:
        if sum(c * z[i] for i, c in enumerate(alpha)) <= 0:
            raise DcpError("evaluation point is not in the real fundamental chamber")


def _ray_polys(chart: BlowupChart, system: DcpSystem, z: Sequence) -> dict:
    """P_alpha along the ray as numpy polynomials in s."""
    xs = chart.x(z)
    out = {}
    for alpha in system.roots:
        top = chart.p(alpha)
        d0 = chart.depth[top]
        coeffs: dict[int, float] = {}
        for i, m in enumerate(alpha):
            if not m:
                continue
            b = next(bb for bb in chart.members if chart.owned[bb] == i)
            coeffs[chart.depth[b] - d0] = coeffs.get(chart.depth[b] - d0, 0.0) + m * float(xs[b])
            for c in chart.nested.children(b):
                coeffs[chart.depth[c] - d0] = coeffs.get(chart.depth[c] - d0, 0.0) - m * float(xs[c])
        deg = max(coeffs)
        arr = np.zeros(deg + 1)
        for k, v in coeffs.items():
            arr[k] += v
        out[alpha] = np.polynomial.Polynomial(arr / float(xs[top]))
    return out


def series_solution(chart: BlowupChart, system: DcpSystem, z: Sequence, order: int | None = None,
                    tol: float = 1e-12, nodes: int = 64, max_order: int = 60) -> SolutionRecord:
    """G_F(z) from the hbar-graded recursion dH_{k+1} = [A_F, H_k] + B_F H_k along the ray.

    With ``order=None`` terms are added until two consecutive ones are below ``tol``.
    """
    _check_point(chart, system, z)
    res = residue_operators(chart, system)
    n = system.dim
    sig = 0.5 * (1 - np.cos(np.pi * (np.arange(nodes) + 0.5) / nodes))  # Chebyshev points on [0, 1]
    polys = _ray_polys(chart, system, z)
    for alpha, p in polys.items():
        if np.min(np.abs(p(np.linspace(0, 1, 400)))) < 1e-6:
            raise DcpError(f"P_{alpha} vanishes on the ray")
    bvals = np.zeros((nodes, n, n), dtype=complex)
    for alpha, p in polys.items():
        dl = p.deriv()(sig) / p(sig)
        bvals += dl[:, None, None] * system.residue(alpha)[None]
    ktot = sum((to_complex(res.k[b]) for b in chart.members if b not in chart.maximal),
               np.zeros((n, n), dtype=complex)) * (system.hbar / 2)
    x_nodes = 2 * sig - 1

    def integrate(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        flat = f.reshape(nodes, -1)
        c = cheb.chebfit(x_nodes, flat, nodes - 1)
        ci = cheb.chebint(c, lbnd=-1, scl=0.5)
        return cheb.chebval(x_nodes, ci).T.reshape(nodes, n, n), cheb.chebval(1.0, ci).reshape(n, n)

    h_k = np.broadcast_to(np.eye(n, dtype=complex), (nodes, n, n)).copy()
    total = np.eye(n, dtype=complex)
    small = 0
    last = 0.0
    k = 0
    limit = order if order is not None else max_order
    while k < limit:
        comm = np.einsum("ij,sjk->sik", ktot, h_k) - np.einsum("sij,jk->sik", h_k, ktot)
        f = comm / sig[:, None, None] + np.einsum("sij,sjk->sik", bvals, h_k)
        h_k, end = integrate(f)
        total = total + end
        k += 1
        last = float(np.max(np.abs(end)))
        if order is None:
            small = small + 1 if last < tol else 0
            if small >= 2:
                break
    if order is None and small < 2:
        raise DcpError("hbar series did not converge")
    g = total @ _corner_power(chart, res, z, system.hbar)
    return SolutionRecord(g, last, "series", {"order": k})


def corner_transport_solution(chart: BlowupChart, system: DcpSystem, z: Sequence,
                              eps: Sequence[float] = (1e-9, 1e-12), tol: float = 1e-12) -> SolutionRecord:
    """G_F(z) by seeding prod x_B^{R_B} at s = eps on the ray and transporting to s = 1.

    The seed error vanishes as eps -> 0; the spread between the two seeds is the error estimate.
    """
    _check_point(chart, system, z)
    res = residue_operators(chart, system)
    n = len(z)
    xs = chart.x(z)
    form = system.form()
    results = []
    for e in eps:
        le = math.log(e)

        def piece(t: float, le=le):
            s = math.exp(le * (1 - t))
            ds = -le * s
            zz = chart.z_from_x({b: float(xs[b]) * s ** chart.depth[b] for b in chart.members}, n)
            dz = chart.z_from_x({b: float(xs[b]) * chart.depth[b] * s ** (chart.depth[b] - 1) * ds
                                 if chart.depth[b] else 0.0 for b in chart.members}, n)
            return np.array(zz, dtype=complex), np.array(dz, dtype=complex)

        path = PathSpec([piece], "corner-ray")
        seed = _corner_power(chart, res, chart.ray(z, e, n), system.hbar)
        tr = transport(form, path, tol, guard=0.0)
        results.append((tr.operator @ seed, tr.error_estimate))
    best, terr = results[-1]
    spread = float(np.max(np.abs(results[-1][0] - results[0][0])))
    return SolutionRecord(best, spread + terr, "corner-transport", {"eps": list(eps)})


def fundamental_solution(chart: BlowupChart, system: DcpSystem, z: Sequence, strategy: str = "series",
                         tol: float = 1e-12, order: int | None = None) -> SolutionRecord:
    if strategy == "series":
        return series_solution(chart, system, z, order=order, tol=tol)
    if strategy == "transport":
        return corner_transport_solution(chart, system, z, tol=tol)
    raise ValueError(f"unknown strategy {strategy!r}")


# Associators

def dcp_associator(f: NestedSet, g: NestedSet, system: DcpSystem, z: Sequence, tol: float = 1e-12,
                   strategy: str = "series") -> np.ndarray:
    """Phi_FG = G_F(z)^{-1} G_G(z)."""
    gf = fundamental_solution(BlowupChart(f), system, z, strategy, tol).operator
    gg = fundamental_solution(BlowupChart(g), system, z, strategy, tol).operator
    return np.linalg.solve(gf, gg)


def chamber_points(system: DcpSystem, count: int = 3, seed: int = 0) -> list[list[float]]:
    """Points of the real fundamental chamber (simple-root coordinates), the first being all ones."""
    rng = np.random.default_rng(seed)
    pts = []
    for k in range(count):
        z = [0.0] * system.gcm.n
        for i in system.vertices:
            z[i] = 1.0 if k == 0 else float(rng.uniform(0.6, 1.6))
        pts.append(z)
    return pts


@dataclass
class PropertyRecord:
    name: str
    detail: str
    residual: float
    budget: float

    @property
    def passed(self) -> bool:
        return self.residual < self.budget

    def to_json(self) -> dict:
        return {"property": self.name, "detail": self.detail, "residual": self.residual,
                "budget": self.budget, "pass": self.passed}


def _label(ns: NestedSet) -> str:
    return "{" + ",".join("".join(map(str, sorted(m))) for m in ns.members) + "}"


def hbar_slope(f: NestedSet, g: NestedSet, system: DcpSystem, z: Sequence, tol: float = 1e-13) -> float:
    """log2 of |Phi(hbar) - 1| / |Phi(hbar/2) - 1|."""
    a = dcp_associator(f, g, system, z, tol)
    b = dcp_associator(f, g, system.with_hbar(system.hbar / 2), z, tol)
    eye = np.eye(a.shape[0])
    na, nb = np.linalg.norm(a - eye, 2), np.linalg.norm(b - eye, 2)
    return math.log2(na / nb) if nb > 0 else math.inf


def associator_property_suite(system: DcpSystem, budget: float = 1e-6, tol: float = 1e-12,
                              max_triples: int | None = None) -> list[PropertyRecord]:
    d = system.diagram
    mns = enumerate_mns(d)
    pts = chamber_points(system, 3)
    out: list[PropertyRecord] = []
    sols = {}
    for k, z in enumerate(pts):
        for ns in mns:
            sols[(k, ns.members)] = fundamental_solution(BlowupChart(ns), system, z, "series", tol).operator

    def phi(f, g, k=0):
        return np.linalg.solve(sols[(k, f.members)], sols[(k, g.members)])

    eye = np.eye(system.dim)
    for f, g in combinations(mns, 2):
        lab = f"{_label(f)},{_label(g)}"
        out.append(PropertyRecord("orientation", lab, float(np.linalg.norm(phi(f, g, 1) @ phi(g, f, 2) - eye, 2)),
                                  budget))
        spread = max(float(np.linalg.norm(phi(f, g, k) - phi(f, g, 0), 2)) for k in (1, 2))
        out.append(PropertyRecord("constancy", lab, spread, budget))
    triples = [(f, g, h) for f in mns for g in mns for h in mns if len({f.members, g.members, h.members}) == 3]
    for f, g, h in triples[:max_triples]:
        res = float(np.linalg.norm(phi(f, g, 1) @ phi(g, h, 2) - phi(f, h, 0), 2))
        out.append(PropertyRecord("transitivity", f"{_label(f)},{_label(g)},{_label(h)}", res, budget))
    for f, g in combinations(mns, 2):
        ep = elementary_pair(f, g)
        if ep is None:
            continue
        lab = f"{_label(f)},{_label(g)}"
        p = phi(f, g)
        zroots = [a for a in system.roots if _support(a) <= ep.zero_support]
        cs = max([float(np.linalg.norm(p @ system.residue(a) - system.residue(a) @ p, 2)) for a in zroots],
                 default=0.0)
        out.append(PropertyRecord("central-support", lab, cs, budget))
        if ep.support != system.vertices:
            sub = system.restricted(ep.support)
            fs = NestedSet(sub.diagram, tuple(m for m in f.members if m <= ep.support))
            gs = NestedSet(sub.diagram, tuple(m for m in g.members if m <= ep.support))
            local = dcp_associator(fs, gs, sub, pts[0], tol)
            out.append(PropertyRecord("forgetfulness", f"{lab} vs subsystem {sorted(ep.support)}",
                                      float(np.linalg.norm(p - local, 2)), budget))
    for f, g in combinations(mns, 2):
        slope = hbar_slope(f, g, system, pts[0])
        out.append(PropertyRecord("hbar-order", f"{_label(f)},{_label(g)} slope={slope:.3f}",
                                  max(0.0, 1.0 - slope), 1e-12))
        break
    return out


def equivalent_elementary_pairs(d: Diagram) -> list[list[tuple[NestedSet, NestedSet]]]:
    """Elementary pairs grouped by (supp, zsupp, owned vertices); groups of size >= 2 only."""
    groups: dict = {}
    for f in enumerate_mns(d):
        for g in enumerate_mns(d):
            ep = elementary_pair(f, g)
            if ep is None:
                continue
            groups.setdefault((ep.support, ep.zero_support, ep.owned), []).append((f, g))
    return [v for v in groups.values() if len(v) > 1]
