"""Resummed Cartan corrections of the affine Casimir connection.

Psi^{+-}_delta(x) = sum_{n>0} (1/(+-x + n delta) - 1/(n delta)) is evaluated by
partial sums plus an Euler-Maclaurin tail. From it

    S(z) = (1/z + Psi(z)) / 2,      T(z) = -z (S(z) + 1) + 1/2,     Psi = Psi^+ + Psi^-,

and the forms

    A_h   = sum_beta A_beta(beta/delta) + B ddelta/delta,
    A_beta = (1/2)[(delta/beta + Psi(beta/delta)) h_beta - (beta/delta)(2 + Psi(beta/delta)) c] d(beta/delta),
    A_S2h = sum_beta (pi/2) cot(pi beta/delta) (h_beta - (beta/delta) c)^2 d(beta/delta),

with beta over the positive roots of the underlying finite root system and B
solving <B, alpha_i> = 1. For a short root beta of a non simply laced algebra the
central term uses c_beta = h_beta + h_{delta - beta} (a multiple of c, equal to c
for long roots); this is what makes the forms equivariant under s_0.

Points are given by their simple-root coordinates ``z_i = alpha_i(x)`` (node 0 is alpha_0 = delta - theta); Cartan values are vectors in
the basis ``h_0, ..., h_l, d``.

Pullbacks act on coordinates and on values: ``(w^* A)_x(v) = w^{-1} A_{w x}(w v)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .cartan import CartanError, Coeffs, GeneralizedCartanMatrix, all_positive_roots, cartan_matrix
from .exact import qzeros, solve, to_complex
from .kacmoody import HighestWeightModule, ModuleOperators

_BERNOULLI = [Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30), Fraction(5, 66),
              Fraction(-691, 2730), Fraction(7, 6)]  # B_2, B_4, ..., B_14


class PoleError(ValueError):
    pass


def _psi_plus_unit(z: complex, terms: int | None = None) -> complex:
    """sum_{n>0} (1/(z+n) - 1/n)."""
    z = complex(z)
    n_terms = terms or max(64, int(4 * abs(z)) + 16)
    if abs(z.imag) < 1e-14 and z.real < 0 and abs(z.real - round(z.real)) < 1e-14 and round(z.real) != 0:
        raise PoleError(f"pole at {z}")
    ns = np.arange(1, n_terms, dtype=float)
    head = complex(np.sum(1.0 / (z + ns) - 1.0 / ns))
    big = float(n_terms)
    # Euler-Maclaurin for sum_{n >= N} f(n), f(t) = 1/(z+t) - 1/t
    tail = -cmath.log(1 + z / big) + 0.5 * (1 / (z + big) - 1 / big)
    for k, b in enumerate(_BERNOULLI, start=1):
        m = 2 * k - 1  # derivative order
        deriv = (-1) ** m * math.factorial(m) * (1 / (z + big) ** (m + 1) - 1 / big ** (m + 1))
        tail -= float(b) / math.factorial(2 * k) * deriv
    return head + tail


def psi_plus(x: complex, delta: complex = 1.0) -> complex:
    return _psi_plus_unit(x / delta) / delta


def psi_minus(x: complex, delta: complex = 1.0) -> complex:
    return _psi_plus_unit(-x / delta) / delta


def psi(x: complex, delta: complex = 1.0) -> complex:
    return psi_plus(x, delta) + psi_minus(x, delta)


def s_function(z: complex, e: Callable[[complex], complex] | None = None) -> complex:
    return 0.5 * (1 / z + psi(z)) + (e(z) if e else 0)


def t_function(z: complex, e: Callable | None = None, big_e: Callable | None = None) -> complex:
    return -z * (s_function(z, e) + 1) + 0.5 + (big_e(z) if big_e else 0)


@dataclass
class FunctionalResiduals:
    s_reflect: float  # S(-z) - S(z) + 1/z
    t_odd: float  # T(-z) + T(z)
    s_shift: float  # S(1-z) - S(z)
    t_shift: float  # T(z) + T(1-z) + S(1-z)

    def max(self) -> float:
        return max(self.s_reflect, self.t_odd, self.s_shift, self.t_shift)


def functional_system_check(z: complex, e: Callable | None = None, big_e: Callable | None = None) -> FunctionalResiduals:
    s = lambda w: s_function(w, e)
    t = lambda w: t_function(w, e, big_e)
    return FunctionalResiduals(abs(s(-z) - s(z) + 1 / z), abs(t(-z) + t(z)), abs(s(1 - z) - s(z)),
                               abs(t(z) + t(1 - z) + s(1 - z)))


def cotangent_residual(z: complex) -> float:
    """|pi cot(pi z) - (1/z + Psi^+(z) - Psi^-(z))|."""
    return abs(math.pi / cmath.tan(math.pi * z) - (1 / z + psi_plus(z) - psi_minus(z)))


def _richardson_series(term: Callable[[int], complex], n0: int = 256, levels: int = 5) -> complex:
    """sum_{n>=1} term(n) for terms with an asymptotic expansion in 1/n, by Richardson on partial sums."""
    sums = []
    acc, upto, n = 0j, 0, n0
    for _ in range(levels):
        acc += sum(term(k) for k in range(upto + 1, n + 1))
        upto = n
        sums.append(acc)
        n *= 2
    table = sums
    for p in range(1, levels):
        table = [(2 ** p * table[k + 1] - table[k]) / (2 ** p - 1) for k in range(len(table) - 1)]
    return table[-1]


def rearrangement_residual(theta: complex, delta: complex) -> float:
    """pi cot(pi theta/delta) against (delta/2) sum over real roots of (1/alpha - 1/s_1(alpha)) d(alpha/delta).

    Real roots are theta + n delta (n >= 0) and -theta + n delta (n >= 1); s_1 swaps
    theta + n delta and -theta + n delta, and d(alpha/delta) = +-d(theta/delta).
    """
    def pair(n: int) -> complex:
        a, b = theta + n * delta, -theta + n * delta
        return (1 / a - 1 / b) - (1 / b - 1 / a)
    total = delta / 2 * ((1 / theta - 1 / (-theta)) + _richardson_series(pair))
    return abs(math.pi / cmath.tan(math.pi * theta / delta) - total)


# Cartan frame of an untwisted affine algebra

class AffineFrame:
    """Basis h_0..h_l, d of the Cartan, Weyl action on values and coordinates, coroots and B."""

    def __init__(self, gcm: GeneralizedCartanMatrix):
        if gcm.kind != "affine" or len(gcm.components()) != 1:
            raise CartanError("need an indecomposable affine Cartan matrix")
        self.gcm = gcm
        self.n = gcm.n
        self.dim = gcm.n + 1
        self.delta = gcm.null_root
        finite = GeneralizedCartanMatrix(tuple(tuple(gcm[i, j] for j in range(1, gcm.n)) for i in range(1, gcm.n)))
        self.finite_roots: list[Coeffs] = [(0,) + r.coeffs for r in all_positive_roots(finite).roots]
        # c = sum a_i^vee h_i, the left null vector
        a = np.array([[Fraction(gcm[i, j]) for j in range(self.n)] for i in range(self.n)], dtype=object)
        null = _left_null(a)
        self.c = np.array([Fraction(x) for x in null] + [Fraction(0)], dtype=object)

    def pairing(self, root: Sequence, value: np.ndarray):
        """root(value) for a root in simple-root coordinates and a Cartan vector."""
        total = 0
        for j, m in enumerate(root):
            if m:
                total += m * (sum(value[i] * self.gcm[i, j] for i in range(self.n)) + (value[self.n] if j == 0 else 0))
        return total

    def coroot(self, beta: Sequence[int]) -> np.ndarray:
        """beta^vee = 2 nu^{-1}(beta) / (beta, beta) for real roots beta = finite root + k delta."""
        d = self.gcm.symmetrizers
        norm = self.gcm.form(beta, beta)
        out = np.array([Fraction(0)] * self.dim, dtype=object)
        for j, m in enumerate(beta):
            out[j] = 2 * m * d[j] / norm
        return out

    def central(self, beta: Sequence[int]) -> np.ndarray:
        """c_beta = h_beta + h_{delta-beta}; equals c when beta is long."""
        other = tuple(d - b for d, b in zip(self.delta, beta))
        return self.coroot(beta) + self.coroot(other)

    def reflect_value(self, i: int, value: np.ndarray) -> np.ndarray:
        """s_i(x) = x - alpha_i(x) h_i."""
        out = value.copy()
        out[i] = out[i] - self.pairing(self.gcm.simple_root(i), value)
        return out

    def reflect_coords(self, i: int, z: Sequence) -> list:
        """alpha_j(s_i x) = alpha_j(x) - a_ij alpha_i(x)."""
        return [z[j] - self.gcm[i, j] * z[i] for j in range(self.n)]

    def rho_check(self) -> np.ndarray:
        """B with <B, alpha_i> = 1 for all i and no c component, in the basis h_0..h_l, d."""
        # unknowns: coefficients of h_1..h_l and d (the h_0 direction is fixed by the c-component condition)
        rows = []
        for j in range(self.n):
            rows.append([Fraction(self.gcm[i, j]) for i in range(1, self.n)] + [Fraction(1 if j == 0 else 0)])
        mat = np.array(rows, dtype=object)
        sol = solve(mat, np.array([Fraction(1)] * self.n, dtype=object))
        out = np.array([Fraction(0)] + list(sol[:-1]) + [sol[-1]], dtype=object)
        return out

    def root_value(self, root: Sequence[int], z: Sequence) -> complex:
        return sum(m * z[j] for j, m in enumerate(root))


def _left_null(a: np.ndarray) -> list[Fraction]:
    n = a.shape[0]
    at = np.array([[a[j, i] for j in range(n)] for i in range(n)], dtype=object)
    from .exact import rref
    red, piv = rref(at)
    free = [k for k in range(n) if k not in piv][0]
    vec = [Fraction(0)] * n
    vec[free] = Fraction(1)
    for r, p in enumerate(piv):
        vec[p] = -red[r, free]
    scale = min(x for x in vec if x > 0)
    return [x / scale for x in vec]


def a_root_form(gval: complex, dval: complex, dg: complex, dd: complex, h_gamma: np.ndarray,
                c: np.ndarray) -> np.ndarray:
    """A_gamma(gamma/delta) evaluated on a tangent vector with dgamma = dg, ddelta = dd."""
    z = gval / dval
    dz = dg / dval - gval * dd / dval ** 2
    ps = psi(z)
    return 0.5 * ((1 / z + ps) * to_complex(h_gamma) - z * (2 + ps) * to_complex(c)) * dz


def form_a_h(frame: AffineFrame, z: Sequence, v: Sequence, b: np.ndarray | None = None) -> np.ndarray:
    """A_h at the point with simple-root coordinates z, on the tangent vector v."""
    b = frame.rho_check() if b is None else b
    dval = frame.root_value(frame.delta, z)
    dd = frame.root_value(frame.delta, v)
    out = to_complex(b) * dd / dval
    for beta in frame.finite_roots:
        out = out + a_root_form(frame.root_value(beta, z), dval, frame.root_value(beta, v), dd,
                                frame.coroot(beta), frame.central(beta))
    return out


def form_s2(frame: AffineFrame, z: Sequence, v: Sequence) -> np.ndarray:
    """A_{S^2 h} as a symmetric matrix in the basis h_0..h_l, d."""
    dval = frame.root_value(frame.delta, z)
    dd = frame.root_value(frame.delta, v)
    out = np.zeros((frame.dim, frame.dim), dtype=complex)
    for beta in frame.finite_roots:
        bv = frame.root_value(beta, z)
        x = bv / dval
        dx = frame.root_value(beta, v) / dval - bv * dd / dval ** 2
        vec = to_complex(frame.coroot(beta)) - x * to_complex(frame.central(beta))
        out += math.pi / 2 / cmath.tan(math.pi * x) * np.outer(vec, vec) * dx
    return out


def _reflect_matrix(frame: AffineFrame, i: int) -> np.ndarray:
    cols = []
    for k in range(frame.dim):
        e = np.array([Fraction(int(k == j)) for j in range(frame.dim)], dtype=object)
        cols.append(to_complex(frame.reflect_value(i, e)))
    return np.array(cols).T


def equivariance_residual(frame: AffineFrame, i: int, z: Sequence, v: Sequence) -> float:
    """|s_i^* A_h - (A_h - h_i dalpha_i / alpha_i)| at (z, v)."""
    sz, sv = frame.reflect_coords(i, z), frame.reflect_coords(i, v)
    m = _reflect_matrix(frame, i)
    pulled = m @ form_a_h(frame, sz, sv)  # s_i is an involution
    hi = np.zeros(frame.dim, dtype=complex)
    hi[i] = 1
    expected = form_a_h(frame, z, v) - hi * (v[i] / z[i])
    return float(np.max(np.abs(pulled - expected)))


def s2_equivariance_residual(frame: AffineFrame, i: int, z: Sequence, v: Sequence) -> float:
    sz, sv = frame.reflect_coords(i, z), frame.reflect_coords(i, v)
    m = _reflect_matrix(frame, i)
    pulled = m @ form_s2(frame, sz, sv) @ m.T
    return float(np.max(np.abs(pulled - form_s2(frame, z, v))))


def diagram_automorphism_residual(z: Sequence, v: Sequence, layer: str = "h") -> float:
    """sl2-hat: gamma swaps the two nodes; gamma(h_0) = h_1, gamma(d) = d + h_1/2 - c/4 on values.

    The check lives on the (theta, delta) plane; the dual coordinate of d is not involved.
    """
    frame = AffineFrame(cartan_matrix("A1~"))
    gz, gv = [z[1], z[0]], [v[1], v[0]]
    # value action in basis h0, h1, d with c = h0 + h1
    g = np.array([[0, 1, -0.25], [1, 0, 0.25], [0, 0, 1]], dtype=complex)
    if layer == "h":
        return float(np.max(np.abs(g @ form_a_h(frame, gz, gv) - form_a_h(frame, z, v))))
    return float(np.max(np.abs(g @ form_s2(frame, gz, gv) @ g.T - form_s2(frame, z, v))))


def form_identity_residuals(frame: AffineFrame, beta: Coeffs, bval: complex, dval: complex,
                            db: complex, dd: complex) -> tuple[float, float]:
    """Residuals of A_{-beta} = A_beta - h_beta dbeta/beta + h_beta ddelta/delta and A_{delta-beta} = A_beta."""
    hb, c = frame.coroot(beta), frame.central(beta)
    base = a_root_form(bval, dval, db, dd, hb, c)
    neg = a_root_form(-bval, dval, -db, dd, -hb, c)
    r1 = float(np.max(np.abs(neg - (base - to_complex(hb) * db / bval + to_complex(hb) * dd / dval))))
    shifted = a_root_form(dval - bval, dval, dd - db, dd, c - hb, c)
    r2 = float(np.max(np.abs(shifted - base)))
    return r1, r2


def s0_chain_residuals(theta: complex, delta: complex, dt: complex, dd: complex) -> list[float]:
    """A_{-theta+2delta} = A_{theta-delta} = A_{delta-theta} - h_0 dalpha_0/alpha_0 + h_0 ddelta/delta
    = A_theta - h_0 dalpha_0/alpha_0 + h_0 ddelta/delta on sl2-hat, checked link by link."""
    frame = AffineFrame(cartan_matrix("A1~"))
    c = frame.c
    h = frame.coroot((0, 1))
    h0 = c - h
    a1 = a_root_form(-theta + 2 * delta, delta, -dt + 2 * dd, dd, -h + 2 * c, c)
    a2 = a_root_form(theta - delta, delta, dt - dd, dd, h - c, c)
    a3 = a_root_form(delta - theta, delta, dd - dt, dd, h0, c) \
        - to_complex(h0) * (dd - dt) / (delta - theta) + to_complex(h0) * dd / delta
    a4 = a_root_form(theta, delta, dt, dd, h, c) \
        - to_complex(h0) * (dd - dt) / (delta - theta) + to_complex(h0) * dd / delta
    return [float(np.max(np.abs(x - y))) for x, y in ((a1, a2), (a2, a3), (a3, a4))]


def _derivative(f: Callable[[float], np.ndarray], x: complex, h: float = 1e-2, levels: int = 6) -> np.ndarray:
    """Central differences with Richardson extrapolation."""
    table = []
    for k in range(levels):
        step = h / 2 ** k
        table.append((f(x + step) - f(x - step)) / (2 * step))
    for p in range(1, levels):
        table = [(4 ** p * table[k + 1] - table[k]) / (4 ** p - 1) for k in range(len(table) - 1)]
    return table[-1]


def closedness_residual(form: Callable, frame: AffineFrame, z: Sequence, a: int, b: int) -> float:
    """|d A (e_a, e_b)| = |d_a (A(e_b)) - d_b (A(e_a))| at z, numerically."""
    n = frame.n
    ea = [1.0 if k == a else 0.0 for k in range(n)]
    eb = [1.0 if k == b else 0.0 for k in range(n)]

    def moved(k: int, t: complex) -> list:
        return [z[j] + (t if j == k else 0) for j in range(n)]

    da = _derivative(lambda t: form(frame, moved(a, t), eb), 0.0)
    db = _derivative(lambda t: form(frame, moved(b, t), ea), 0.0)
    return float(np.max(np.abs(da - db)))


# Exact residues on sl2-hat

def _res_s(m: int) -> Fraction:
    """Residue of S at z = m."""
    if m == 0:
        return Fraction(1, 2)
    return Fraction(1, 2) if m < 0 else Fraction(-1, 2)


def wall_residues(m: int) -> dict:
    """Exact residues along the wall z = theta/delta = m (w.r.t. dlog of that wall's root).

    Returns the A_h residue in the basis (h, c, d) and the A_{S^2 h} residue as
    coefficients of (h^2, hc, c^2), h the finite coroot of theta.
    """
    rs = _res_s(m)
    rt = -m * rs
    half = Fraction(1, 2)
    return {"A_h": {"h": rs, "c": rt, "d": Fraction(0)},
            "A_S2h": {"h2": half, "hc": -2 * m * half, "c2": m * m * half}}


@dataclass
class ResidueReport:
    wall: int
    interior: list[int]  # weight vectors on which the truncated sl2 relations hold
    residue: np.ndarray  # exact, restricted to the interior
    kappa_half: np.ndarray
    full_half: np.ndarray
    matches_kappa: bool
    matches_full: bool
    layer: str
    matches_kappa_plus_h2: bool = False  # residue = (kappa + h^2) / 2

    def to_json(self) -> dict:
        return {"wall": self.wall, "layer": self.layer, "interior_dim": len(self.interior),
                "matches_half_kappa": self.matches_kappa,
                "matches_half_full_casimir": self.matches_full,
                "matches_half_kappa_plus_h_squared": self.matches_kappa_plus_h2}


def residue_check(module: HighestWeightModule, i: int, layer: str = "kappa", hbar: Fraction = Fraction(1)) -> ResidueReport:
    """Residue of (hbar/2) sum K_alpha dlog alpha + A_h (+ A_{S^2 h}) along alpha_i = 0 on a truncated sl2-hat module.

    Node 1 is theta (wall z = 0), node 0 is delta - theta (wall z = 1). Compared with
    kappa_i / 2 = (e f + f e) / 2 and with C_i / 2 = (e f + f e + h^2 / 2) / 2.
    """
    gcm = module.gcm
    if gcm.n != 2 or gcm.kind != "affine":
        raise CartanError("residue_check is implemented for sl2-hat")
    ops = ModuleOperators(module)
    m = 0 if i == 1 else 1
    res = wall_residues(m)
    h = module.h[1]
    c = module.h[0] + module.h[1]
    d = module.derivation
    alpha = gcm.simple_root(i)
    total = ops.casimir_truncated(alpha) * (hbar / 2)
    total = total + h * res["A_h"]["h"] + c * res["A_h"]["c"] + d * res["A_h"]["d"]
    if layer == "C":
        s2 = res["A_S2h"]
        total = total + (h @ h) * s2["h2"] + (h @ c) * s2["hc"] + (c @ c) * s2["c2"]
    e, f, hi = module.e[i], module.f[i], module.h[i]
    kappa = e @ f + f @ e
    full = kappa + hi @ hi / 2
    idx = module.interior(i)
    if not idx:
        raise CartanError("truncation too shallow to see the residue block")
    sub = np.ix_(idx, idx)
    total, kappa, full = total[sub], kappa[sub], full[sub]
    hh = (hi @ hi)[sub]
    return ResidueReport(m, idx, total, kappa / 2, full / 2, bool(np.all(total == kappa / 2)),
                         bool(np.all(total == full / 2)), layer, bool(np.all(total == (kappa + hh) / 2)))
