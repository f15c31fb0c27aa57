"""Casimir connection, numerical parallel transport and braid group monodromy (finite type).

Points of the essential Cartan are written in simple-root coordinates
``z_j = alpha_j(x)``. The connection is ``d - sum_alpha (hbar/2) K_alpha dalpha/alpha``
and transport along a path is the solution ``T`` of ``dT = A T`` with ``T(start) = 1``,
so that ``transport(p1 then p2) = transport(p2) @ transport(p1)``.

Braid generators. ``gamma_i`` runs from ``x0 = i*c`` (``alpha_j(c) = 1``) to ``s_i(x0)``
along the straight segment pushed to the side ``Re alpha_i < 0``; in the
``alpha_i`` coordinate this is a counterclockwise half turn, so the abelian
part picks up ``log(-1) = +i*pi``. The uncorrected generator is
``tits_i^{-1} @ T(gamma_i)``. Writing ``K_alpha = kappa_alpha - t_alpha`` with
``kappa`` the symmetric Casimir, the abelian factor ``exp((hbar/2) sum t_alpha
int dlog alpha)`` turns it into the monodromy of the W-equivariant
``kappa``-connection; multiplying on the right by ``exp(a h_i + b h_i^2)`` gives
the corrected generators.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .cartan import (Coeffs, GeneralizedCartanMatrix, RootSlice, all_positive_roots, coxeter_label,
                     inversion_exponents)
from .exact import to_complex
from .kacmoody import HighestWeightModule, ModuleOperators


class TransportError(RuntimeError):
    pass


@dataclass
class ConnectionForm:
    directions: list[tuple[Fraction, ...]]  # linear functionals in simple-root coordinates
    residues: list[np.ndarray]  # complex matrices, already scaled by hbar/2
    hbar: complex

    @property
    def dim(self) -> int:
        return self.residues[0].shape[0] if self.residues else 0

    def matrix(self, z: np.ndarray, dz: np.ndarray) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for d, r in zip(self.directions, self.residues):
            num = sum(float(c) * dz[k] for k, c in enumerate(d) if c)
            den = sum(float(c) * z[k] for k, c in enumerate(d) if c)
            out += (num / den) * r
        return out


def _primitive(coeffs: Sequence[int]) -> tuple[int, ...]:
    g = math.gcd(*coeffs)
    return tuple(int(c) // g for c in coeffs)


def casimir_form(module: HighestWeightModule, slice_: RootSlice, hbar: complex,
                 variant: str = "normal", ops: ModuleOperators | None = None) -> ConnectionForm:
    """(hbar/2) sum_alpha K_alpha dalpha/alpha, proportional roots merged.

    ``variant``: 'normal' uses the normally ordered Casimirs, 'symmetric' the
    symmetric ones ``x_alpha x_-alpha + x_-alpha x_alpha``.
    """
    if module.dim == 0:
        return ConnectionForm([], [], hbar)
    top = max(sum(w.beta) for w in module.weights)
    if module.gcm.kind != "finite" and slice_.cutoff < top:
        raise TransportError(f"slice cutoff {slice_.cutoff} below module height {top}")
    if module.gcm.kind == "finite" and len(slice_) < len(all_positive_roots(module.gcm)) and slice_.cutoff < top:
        raise TransportError("slice does not cover the roots acting on the module")
    ops = ops or ModuleOperators(module)
    merged: dict[tuple[int, ...], np.ndarray] = {}
    for r in slice_.roots:
        k = ops.casimir_truncated(r.coeffs) if variant == "normal" else ops.casimir_symmetric(r.coeffs)
        key = _primitive(r.coeffs)
        merged[key] = merged[key] + k if key in merged else k
    dirs = sorted(merged)
    return ConnectionForm([tuple(Fraction(c) for c in d) for d in dirs],
                          [to_complex(merged[d]) * (hbar / 2) for d in dirs], hbar)


# Paths

@dataclass
class PathSpec:
    """Piecewise smooth path; each piece maps t in [0, 1] to (z(t), z'(t))."""
    pieces: list[Callable[[float], tuple[np.ndarray, np.ndarray]]]
    label: str = ""

    def point(self, piece: int, t: float) -> np.ndarray:
        return self.pieces[piece](t)[0]

    @property
    def start(self) -> np.ndarray:
        return self.point(0, 0.0)

    @property
    def end(self) -> np.ndarray:
        return self.point(len(self.pieces) - 1, 1.0)

    def then(self, other: "PathSpec") -> "PathSpec":
        return PathSpec(self.pieces + other.pieces, f"{self.label}*{other.label}")

    def reversed(self) -> "PathSpec":
        def rev(f):
            return lambda t: (f(1.0 - t)[0], -f(1.0 - t)[1])
        return PathSpec([rev(f) for f in reversed(self.pieces)], f"{self.label}^-1")

    def mapped(self, lin: np.ndarray, label: str = "") -> "PathSpec":
        def push(f):
            return lambda t: (lin @ f(t)[0], lin @ f(t)[1])
        return PathSpec([push(f) for f in self.pieces], label or self.label)

    def samples(self, per_piece: int = 400) -> np.ndarray:
        ts = np.linspace(0.0, 1.0, per_piece)
        return np.array([f(t)[0] for f in self.pieces for t in ts])


def reflection_matrix(gcm: GeneralizedCartanMatrix, i: int) -> np.ndarray:
    """Action of s_i on simple-root coordinates: z_j -> z_j - a_ij z_i."""
    n = gcm.n
    m = np.eye(n, dtype=complex)
    for j in range(n):
        m[j, i] -= gcm[i, j]
    return m


def weyl_matrix(gcm: GeneralizedCartanMatrix, word: Sequence[int]) -> np.ndarray:
    m = np.eye(gcm.n, dtype=complex)
    for i in word:
        m = m @ reflection_matrix(gcm, i)
    return m


def default_basepoint(gcm: GeneralizedCartanMatrix) -> np.ndarray:
    """x0 = i * c with alpha_j(c) = 1 for every simple root."""
    return 1j * np.ones(gcm.n, dtype=complex)


def generator_path(gcm: GeneralizedCartanMatrix, i: int, x0: np.ndarray | None = None,
                   bump: float = 0.5) -> PathSpec:
    """gamma_i: segment x0 -> s_i(x0) plus a bump nu(t) = -bump sin(pi t) Im(x0), nu(0) = nu(1) = 0."""
    x0 = default_basepoint(gcm) if x0 is None else np.asarray(x0, dtype=complex)
    x1 = reflection_matrix(gcm, i) @ x0
    direction = np.imag(x0).astype(complex)
    if np.real(direction[i]) <= 0:
        raise TransportError("basepoint must lie in i * (fundamental chamber)")

    def piece(t: float):
        z = (1 - t) * x0 + t * x1 - bump * math.sin(math.pi * t) * direction
        dz = (x1 - x0) - bump * math.pi * math.cos(math.pi * t) * direction
        return z, dz

    return PathSpec([piece], f"gamma_{i}")


def straight_path(a: np.ndarray, b: np.ndarray) -> PathSpec:
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    return PathSpec([lambda t: ((1 - t) * a + t * b, b - a)], "segment")


def certify_path(path: PathSpec, directions: Sequence[Sequence], samples: int = 2000) -> float:
    """Minimum of |alpha(z)| over sampled path points; must be positive."""
    pts = path.samples(samples)
    best = math.inf
    for d in directions:
        vec = np.array([float(c) for c in d])
        best = min(best, float(np.min(np.abs(pts @ vec))))
    return best


@dataclass
class TransportResult:
    operator: np.ndarray
    error_estimate: float
    path_label: str
    stats: dict = field(default_factory=dict)


def _integrate(form: ConnectionForm, path: PathSpec, tol: float, start: np.ndarray) -> tuple[np.ndarray, int]:
    n = form.dim
    state = start.astype(complex)
    nfev = 0
    for f in path.pieces:
        def rhs(t, y, f=f):
            z, dz = f(t)
            return (form.matrix(z, dz) @ y.reshape(n, n)).ravel()

        sol = solve_ivp(rhs, (0.0, 1.0), state.ravel(), method="DOP853", rtol=tol, atol=tol * 1e-2)
        if not sol.success:
            raise TransportError(f"integration failed: {sol.message}")
        nfev += sol.nfev
        state = sol.y[:, -1].reshape(n, n)
    return state, nfev


def transport(form: ConnectionForm, path: PathSpec, tol: float = 1e-10, guard: float = 1e-8) -> TransportResult:
    """Parallel transport from path start to path end with an a posteriori error estimate.

    ``guard`` is the smallest admissible distance from the path to a singular hyperplane.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = form.dim
    if n == 0:
        return TransportResult(np.zeros((0, 0), dtype=complex), 0.0, path.label)
    dist = certify_path(path, form.directions)
    if dist <= guard:
        raise TransportError(f"path passes within {dist:.2e} of a singular hyperplane")
    eye = np.eye(n, dtype=complex)
    coarse, n1 = _integrate(form, path, tol, eye)
    fine, n2 = _integrate(form, path, tol / 16, eye)
    err = float(np.max(np.abs(fine - coarse)))
    return TransportResult(fine, err, path.label, {"nfev": n1 + n2, "min_distance": dist, "tol": tol})


# Abelian bookkeeping

def log_increment(direction: Sequence, path: PathSpec, samples: int = 4000) -> complex:
    """Continuous change of log alpha(z) along the path (argument unwrapped)."""
    vec = np.array([float(c) for c in direction])
    vals = path.samples(samples) @ vec
    if np.min(np.abs(vals)) == 0:
        raise TransportError("path hits the hyperplane")
    ang = np.unwrap(np.angle(vals))
    return complex(math.log(abs(vals[-1]) / abs(vals[0])), ang[-1] - ang[0])


def abelian_factor(module: HighestWeightModule, roots: Sequence[Coeffs], path: PathSpec, hbar: complex,
                   sign: int = 1) -> np.ndarray:
    """exp(sign * (hbar/2) sum_alpha t_alpha * Delta log alpha) along the path, diagonal."""
    diag = np.zeros(module.dim, dtype=complex)
    for r in roots:
        inc = log_increment(r, path)
        t = np.array([complex(module.t_action(r)[k, k]) for k in range(module.dim)])
        diag += t * inc
    return np.diag(np.exp(sign * hbar / 2 * diag))


def gauge_factor(module: HighestWeightModule, i: int, a: complex, b: complex) -> np.ndarray:
    """exp(a h_i + b h_i^2) on weight vectors."""
    h = np.array([w.values[i] for w in module.weights], dtype=complex)
    return np.diag(np.exp(a * h + b * h * h))


@dataclass
class MonodromyData:
    module: HighestWeightModule
    hbar: complex
    tol: float
    uncorrected: list[np.ndarray]
    abelian: list[np.ndarray]
    tits: list[np.ndarray]
    errors: list[float]

    def generators(self, a: complex = 0.0, b: complex = 0.0, orientation: str = "left") -> list[np.ndarray]:
        """Corrected generators tits_i^{-1} T(gamma_i) E_i exp(a h_i + b h_i^2).

        ``orientation='right'`` returns the inverses, i.e. the operators of the
        convention in which fundamental solutions are acted on from the right.
        """
        gens = [s @ e @ gauge_factor(self.module, i, a, b)
                for i, (s, e) in enumerate(zip(self.uncorrected, self.abelian))]
        if orientation == "left":
            return gens
        if orientation == "right":
            return [np.linalg.inv(g) for g in gens]
        raise ValueError(f"unknown orientation {orientation!r}")


def monodromy_data(module: HighestWeightModule, hbar: complex, tol: float = 1e-10,
                   x0: np.ndarray | None = None, ops: ModuleOperators | None = None) -> MonodromyData:
    gcm = module.gcm
    if gcm.kind != "finite":
        raise TransportError("monodromy transport is implemented for finite type only")
    ops = ops or ModuleOperators(module)
    slice_ = all_positive_roots(gcm)
    form = casimir_form(module, slice_, hbar, ops=ops)
    roots = [r.coeffs for r in slice_.roots]
    unc, ab, tits, errs = [], [], [], []
    for i in range(gcm.n):
        path = generator_path(gcm, i, x0)
        res = transport(form, path, tol)
        s = to_complex(ops.tits(i))
        unc.append(np.linalg.solve(s, res.operator))
        ab.append(abelian_factor(module, roots, path, hbar, sign=+1))
        tits.append(s)
        errs.append(res.error_estimate)
    return MonodromyData(module, hbar, tol, unc, ab, tits, errs)


def generator_monodromy(module: HighestWeightModule, i: int, hbar: complex, tol: float = 1e-10,
                        x0: np.ndarray | None = None) -> np.ndarray:
    """Uncorrected mu(S_i) = tits_i^{-1} @ T(gamma_i)."""
    gcm = module.gcm
    ops = ModuleOperators(module)
    form = casimir_form(module, all_positive_roots(gcm), hbar, ops=ops)
    res = transport(form, generator_path(gcm, i, x0), tol)
    return np.linalg.solve(to_complex(ops.tits(i)), res.operator)


def corrected_braid_generators(module: HighestWeightModule, hbar: complex, a: complex = 0.0, b: complex = 0.0,
                               tol: float = 1e-10) -> list[np.ndarray]:
    return monodromy_data(module, hbar, tol).generators(a, b)


def local_model(module: HighestWeightModule, i: int, hbar: complex, variant: str = "kappa") -> np.ndarray:
    """tits_i @ exp((pi i hbar / 2) X) with X the rank-one Casimir of alpha_i.

    ``variant``: 'kappa' for e f + f e (symmetric, truncated to alpha_i), 'full' for
    e f + f e + h^2 / 2.
    """
    ops = ModuleOperators(module)
    alpha = module.gcm.simple_root(i)
    if variant == "kappa":
        x = ops.casimir_symmetric(alpha)
    elif variant == "full":
        x = ops.casimir_rank_one_full(i)
    else:
        raise ValueError(variant)
    big_hbar = math.pi * 1j * hbar
    return to_complex(ops.tits(i)) @ expm(big_hbar / 2 * to_complex(x))


def braid_word(i: int, j: int, m: int) -> list[int]:
    return [i if k % 2 == 0 else j for k in range(m)]


@dataclass
class BraidRecord:
    i: int
    j: int
    m: float
    residual: float
    passed: bool

    def to_json(self) -> dict:
        return {"i": self.i, "j": self.j, "m": self.m, "residual": self.residual, "pass": self.passed}


def braid_relation_check(gens: Sequence[np.ndarray], gcm: GeneralizedCartanMatrix, budget: float) -> list[BraidRecord]:
    """Spectral-norm residual of the alternating products of length m_ij."""
    out = []
    for i in range(gcm.n):
        for j in range(i + 1, gcm.n):
            m = coxeter_label(gcm, i, j)
            if m == math.inf:
                continue
            lhs = np.eye(gens[0].shape[0], dtype=complex)
            rhs = lhs.copy()
            for k in braid_word(i, j, int(m)):
                lhs = lhs @ gens[k]
            for k in braid_word(j, i, int(m)):
                rhs = rhs @ gens[k]
            res = float(np.linalg.norm(lhs - rhs, 2))
            out.append(BraidRecord(i, j, m, res, res < budget))
    return out


# Cocycle ledger

@dataclass
class CocycleData:
    word: tuple[int, ...]
    entries: list[tuple[Coeffs, complex, Coeffs]]  # (base root, base value at x0, exponent root)
    a: complex = 0.0
    b: complex = 0.0

    def combine(self, other: "CocycleData") -> "CocycleData":
        """Product of ledgers (the factors commute, so this is concatenation)."""
        return CocycleData(self.word + other.word, self.entries + other.entries, self.a, self.b)

    def aggregated(self) -> dict[Coeffs, tuple[int, ...]]:
        """base root -> sum of exponent roots (t is additive, so this determines the product)."""
        out: dict[Coeffs, list[int]] = {}
        for base, _, exp in self.entries:
            acc = out.setdefault(base, [0] * len(exp))
            for k, c in enumerate(exp):
                acc[k] += c
        return {k: tuple(v) for k, v in sorted(out.items())}

    def evaluate(self, module: HighestWeightModule) -> np.ndarray:
        """prod_k alpha_{i_k}(x0)^{t_{exponent_k}} on the module, diagonal."""
        diag = np.zeros(module.dim, dtype=complex)
        for _, val, exp in self.entries:
            t = np.array([complex(module.t_action(exp)[k, k]) for k in range(module.dim)])
            diag += t * cmath.log(val)
        return np.diag(np.exp(diag))


def cocycle_ledger(gcm: GeneralizedCartanMatrix, word: Sequence[int], x0: np.ndarray | None = None,
                   a: complex = 0.0, b: complex = 0.0) -> CocycleData:
    x0 = default_basepoint(gcm) if x0 is None else np.asarray(x0, dtype=complex)
    entries = []
    for base, exp in inversion_exponents(gcm, word):
        val = complex(sum(c * x0[k] for k, c in enumerate(base)))
        entries.append((base, val, exp))
    return CocycleData(tuple(word), entries, a, b)


def transport_along_word(data: MonodromyData, word: Sequence[int], a: complex = 0.0, b: complex = 0.0) -> np.ndarray:
    """Image of the positive braid lift of a word: S_{i_n} ... S_{i_1} in path order reversed."""
    gens = data.generators(a, b)
    out = np.eye(data.module.dim, dtype=complex)
    for i in word:
        out = out @ gens[i]
    return out


# Quantum Weyl group comparison

def _qint(n: int, q: complex) -> complex:
    return (q ** n - q ** -n) / (q - 1 / q) if q * q != 1 else complex(n)


def quantum_sl2_module(m: int, q: complex) -> tuple[np.ndarray, np.ndarray]:
    """E, F on the (m+1)-dim U_q(sl2) module, basis v_k of weight m - 2k."""
    e = np.zeros((m + 1, m + 1), dtype=complex)
    f = np.zeros_like(e)
    for k in range(1, m + 1):
        e[k - 1, k] = _qint(m - k + 1, q)
    for k in range(m):
        f[k + 1, k] = _qint(k + 1, q)
    return e, f


def _divided(x: np.ndarray, n: int, q: complex) -> np.ndarray:
    out = np.linalg.matrix_power(x, n)
    for k in range(1, n + 1):
        out = out / _qint(k, q)
    return out


def quantum_weyl_operator(m: int, q: complex) -> np.ndarray:
    """Lusztig's braid operator on V_q(m): v of weight l maps to
    sum over a - b + c = l of (-1)^b q^{b - ac} F^(a) E^(b) F^(c) v."""
    e, f = quantum_sl2_module(m, q)
    out = np.zeros((m + 1, m + 1), dtype=complex)
    for k in range(m + 1):
        lam = m - 2 * k
        v = np.zeros(m + 1, dtype=complex)
        v[k] = 1
        col = np.zeros(m + 1, dtype=complex)
        for a in range(m + 1):
            for c in range(m + 1):
                b = a + c - lam
                if b < 0 or b > m:
                    continue
                term = _divided(f, a, q) @ _divided(e, b, q) @ _divided(f, c, q) @ v
                col += (-1) ** b * q ** (b - a * c) * term
        out[:, k] = col
    return out


def string_decomposition(module: HighestWeightModule, i: int) -> list[int]:
    """Highest h_i-values of the alpha_i-strings of the module, with multiplicity."""
    mult: dict[tuple, int] = {}
    for w in module.weights:
        key = tuple(w.values)
        mult[key] = mult.get(key, 0) + 1
    alpha = [module.gcm[j, i] for j in range(module.gcm.n)]
    out = []
    for key, k in mult.items():
        above = tuple(v + a for v, a in zip(key, alpha))
        top = k - mult.get(above, 0)
        out.extend([key[i]] * top)
    if any(m < 0 for m in out):
        raise TransportError("module is not integrable along alpha_i")
    return sorted(out)


def _match(xs: np.ndarray, ys: np.ndarray) -> float:
    from scipy.optimize import linear_sum_assignment
    cost = np.abs(xs[:, None] - ys[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max()) if len(r) else 0.0


@dataclass
class QuantumWeylReport:
    index: int
    strings: list[int]
    a: complex
    b: complex
    sign: int
    residual: float
    passed: bool
    eigenvalues: list[complex]
    target: list[complex]

    def to_json(self) -> dict:
        cx = lambda z: [z.real, z.imag]
        return {"index": self.index, "strings": self.strings, "fitted_gauge": {"a": cx(self.a), "b": cx(self.b)},
                "sign": self.sign, "residual": self.residual, "pass": self.passed,
                "eigenvalues": [cx(z) for z in self.eigenvalues], "target": [cx(z) for z in self.target]}


def quantum_weyl_compare(module: HighestWeightModule, i: int, hbar: complex, tol: float = 1e-10,
                         budget: float = 1e-6, data: MonodromyData | None = None) -> QuantumWeylReport:
    """Fit a single gauge (a, b) and sign so that the eigenvalues of S_i match the
    union over alpha_i-strings of the quantum Weyl group eigenvalues at q = e^{pi i hbar}.

    The eigenvalues do not depend on a (the gauge enters S_i^2 on a weight
    vector of h_i-value k only through e^{2 b k^2}), so a is reported as 0.
    """
    q = cmath.exp(math.pi * 1j * hbar)
    strings = string_decomposition(module, i)
    target = np.concatenate([np.linalg.eigvals(quantum_weyl_operator(m, q)) for m in strings]) \
        if strings else np.zeros(0, dtype=complex)
    if module.dim == 1:
        eig = np.ones(1, dtype=complex)
        return QuantumWeylReport(i, strings, 0j, 0j, 1, _match(eig, target), _match(eig, target) < budget,
                                 list(eig), list(target))
    data = data or monodromy_data(module, hbar, tol)
    s0 = data.generators()[i]
    hvals = np.array([w.values[i] for w in module.weights])
    candidates = {0j}
    sq = s0 @ s0
    for k in sorted({abs(int(v)) for v in hvals if v}):
        idx = np.flatnonzero(hvals == k)
        ev = np.linalg.eigvals(sq[np.ix_(idx, idx)])
        tv = [(-1) ** m * q ** (m * (m + 2) / 2 - k * k / 2) for m in strings if m >= k and (m - k) % 2 == 0]
        for x in ev:
            for t in tv:
                base = cmath.log(t / x) / (2 * k * k)
                for n in range(-2, 3):
                    candidates.add(base + math.pi * 1j * n / (k * k))
    best = None
    for b in sorted(candidates, key=lambda z: (abs(z), z.real, z.imag)):
        eig = np.linalg.eigvals(s0 @ gauge_factor(module, i, 0, b))
        for sign in (1, -1):
            res = _match(eig, sign * target)
            if best is None or res < best[0] - 1e-12:
                best = (res, b, sign, eig)
    res, b, sign, eig = best
    return QuantumWeylReport(i, strings, 0j, complex(b), sign, res, res < budget, list(eig), list(sign * target))
