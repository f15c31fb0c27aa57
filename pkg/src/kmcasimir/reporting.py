"""Batch runs: configuration, suite orchestration, persistence and JSON reports."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from .cartan import (CartanError, GeneralizedCartanMatrix, all_positive_roots, cartan_matrix,
                     generate_positive_roots, longest_word, reduced_expressions)
from .diagrams import Diagram, enumerate_mns, is_nested_set
from .exact import max_abs
from .kacmoody import HighestWeightModule, ModuleError, build_irrep

SCHEMA_VERSION = "1.0"
CACHE_ENV = "KMCASIMIR_CACHE_DIR"
SUITES = ("roots", "mns", "flatness", "monodromy", "braid", "cocycle", "dcp", "affine")


class ConfigError(ValueError):
    pass


def _complex(x: Any) -> complex:
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    try:
        return complex(str(x).replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"not a complex number: {x!r}") from exc


def _cx(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def load_gcm(source: Any) -> GeneralizedCartanMatrix:
    """A type name ('A2', 'A1~', 'A2xA1'), a matrix, or a path to a JSON/YAML file holding either."""
    try:
        if isinstance(source, (list, tuple)):
            return GeneralizedCartanMatrix(tuple(tuple(int(x) for x in row) for row in source))
        if isinstance(source, dict):
            return load_gcm(source.get("cartan_matrix", source.get("gcm")))
        text = str(source)
        path = Path(text)
        if path.suffix in (".json", ".yaml", ".yml") or path.is_file():
            if not path.is_file():
                raise ConfigError(f"Cartan matrix file not found: {text}")
            return load_gcm(yaml.safe_load(path.read_text()))
        return cartan_matrix(text)
    except (CartanError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class RunConfig:
    gcm: Any = "A2"
    highest_weight: list[int] | None = None
    depth: int | None = None
    max_height: int | None = None
    hbar: list[complex] = field(default_factory=lambda: [0.1 + 0j])
    tolerances: dict[str, float] = field(default_factory=dict)
    suites: list[str] = field(default_factory=list)
    output_dir: str | None = None
    seed: int = 0
    gauge_pairs: int = 3
    generators: list[int] | None = None
    sample_points: int = 100
    closedness_points: int = 20
    eigenvalue_csv: bool = False
    workers: int = 2

    DEFAULT_TOLERANCES = {"transport": 1e-10, "braid": 1e-6, "monodromy": 1e-8, "qwg": 1e-6,
                          "dcp": 1e-6, "dcp_series": 1e-12, "functional": 1e-10, "cotangent": 1e-9,
                          "closedness": 1e-8}

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = yaml.safe_load(p.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {p}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        return cls.from_mapping(data)

    def tol(self, key: str) -> float:
        return float(self.tolerances.get(key, self.DEFAULT_TOLERANCES[key]))

    def validate(self) -> None:
        self.hbar = [_complex(h) for h in (self.hbar if isinstance(self.hbar, (list, tuple)) else [self.hbar])]
        if isinstance(self.suites, str):
            self.suites = [self.suites]
        bad = [s for s in self.suites if s not in SUITES]
        if bad:
            raise ConfigError(f"unknown suites {bad}; choose from {list(SUITES)}")
        for k, v in self.tolerances.items():
            if k not in self.DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance {k!r}")
            if not isinstance(v, (int, float)) or not v > 0 or math.isinf(v):
                raise ConfigError(f"tolerance {k} must be a positive number, got {v!r}")
        for name in ("seed", "gauge_pairs", "sample_points", "closedness_points", "workers"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) < 0:
                raise ConfigError(f"{name} must be a non-negative integer")
        self.workers = max(1, self.workers)
        self.gcm_matrix()

    def gcm_matrix(self) -> GeneralizedCartanMatrix:
        return load_gcm(self.gcm)

    def module(self) -> HighestWeightModule:
        gcm = self.gcm_matrix()
        hw = self.highest_weight if self.highest_weight is not None else [0] * gcm.n
        if len(hw) != gcm.n:
            raise ConfigError(f"highest weight {hw} has the wrong length for rank {gcm.n}")
        try:
            return build_irrep(gcm, hw, depth=self.depth, max_height=self.max_height)
        except (ModuleError, CartanError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_json(self) -> dict:
        return {"gcm": [list(r) for r in self.gcm_matrix().entries], "highest_weight": self.highest_weight,
                "depth": self.depth, "max_height": self.max_height, "hbar": [_cx(h) for h in self.hbar],
                "tolerances": {k: self.tol(k) for k in sorted(self.DEFAULT_TOLERANCES)},
                "suites": list(self.suites), "seed": self.seed, "gauge_pairs": self.gauge_pairs,
                "generators": self.generators, "sample_points": self.sample_points,
                "closedness_points": self.closedness_points}


@dataclass
class Check:
    id: str
    anchor: str  # name of the identity being verified
    residual: float
    passed: bool

    def to_json(self) -> dict:
        r = self.residual
        return {"id": self.id, "anchor": self.anchor, "residual": r if math.isfinite(r) else str(r),
                "pass": bool(self.passed)}


@dataclass
class SuiteResult:
    checks: list[Check] = field(default_factory=list)
    payload: dict = field(default_factory=dict)
    matrices: dict[str, np.ndarray] = field(default_factory=dict)
    eigen_rows: list[list] = field(default_factory=list)


def matrix_hash(m: np.ndarray) -> str:
    a = np.ascontiguousarray(np.asarray(m, dtype=complex))
    h = hashlib.sha256(str(a.shape).encode())
    h.update(a.real.astype("<f8").tobytes())
    h.update(a.imag.astype("<f8").tobytes())
    return h.hexdigest()[:16]


def cache_dir(config: RunConfig) -> Path | None:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    if config.output_dir:
        return Path(config.output_dir) / "store"
    return None


def environment_fingerprint() -> dict:
    import scipy
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "platform": sys.platform, "machine": platform.machine()}


# Suites

def _rng(config: RunConfig, salt: int) -> np.random.Generator:
    return np.random.default_rng([config.seed, salt])


def _slice(config: RunConfig, module: HighestWeightModule):
    gcm = module.gcm
    if gcm.kind == "finite":
        return all_positive_roots(gcm)
    cut = max(sum(w.beta) for w in module.weights)
    return generate_positive_roots(gcm, max(cut, 1))


def suite_roots(config: RunConfig) -> SuiteResult:
    gcm = config.gcm_matrix()
    out = SuiteResult()
    if gcm.kind == "finite":
        roots = all_positive_roots(gcm)
        w0 = longest_word(gcm)
        out.checks.append(Check("roots/count=length(w0)", "number of positive roots equals the length of w0",
                                float(abs(len(roots) - len(w0))), len(roots) == len(w0)))
    else:
        roots = generate_positive_roots(gcm, config.max_height or 2 * gcm.n)
    out.payload = {"kind": gcm.kind, "count": len(roots), "roots": roots.to_json()}
    return out


def suite_mns(config: RunConfig) -> SuiteResult:
    d = Diagram.from_gcm(config.gcm_matrix())
    mns = enumerate_mns(d)
    out = SuiteResult(payload={"count": len(mns), "nested_sets": [ns.to_json() for ns in mns]})
    for k, ns in enumerate(mns):
        ok = bool(is_nested_set(d, ns.members))
        out.checks.append(Check(f"mns/{k}", "maximal nested set axioms", 0.0 if ok else 1.0, ok))
    return out


def suite_flatness(config: RunConfig) -> SuiteResult:
    from .holonomy import relation_check_tt
    module = config.module()
    records = relation_check_tt(_slice(config, module), module)
    out = SuiteResult(payload={"dim": module.dim, "relations": len(records)})
    for k, r in enumerate(records):
        out.checks.append(Check(f"flatness/{k}:{r.data}", "[K_alpha, sum of K over the rank-two class] = 0",
                                r.max_entry, r.passed))
    return out


def _generator_indices(config: RunConfig, n: int) -> list[int]:
    gens = list(range(n)) if config.generators is None else list(config.generators)
    if any(not 0 <= i < n for i in gens):
        raise ConfigError(f"generator indices {gens} out of range for rank {n}")
    return gens


def suite_monodromy(config: RunConfig) -> SuiteResult:
    from .transport import _match, local_model, monodromy_data, quantum_weyl_compare
    module = config.module()
    gens = _generator_indices(config, module.gcm.n)
    out = SuiteResult()
    runs = []
    for h in config.hbar:
        data = monodromy_data(module, h, config.tol("transport"))
        ops = data.generators()
        entries = []
        for i in gens:
            op = ops[i]
            eig = np.linalg.eigvals(op)
            eig = eig[np.lexsort((eig.imag, eig.real))]
            model = np.linalg.eigvals(local_model(module, i, h))
            res = _match(eig, model)
            tag = f"h={_cx(h)}/S{i}"
            out.checks.append(Check(f"monodromy/{tag}/local-model", "corrected generator matches tits_i exp(pi i h kappa_i / 2)",
                                    res, res < config.tol("monodromy")))
            qwg = quantum_weyl_compare(module, i, h, config.tol("transport"), config.tol("qwg"), data)
            out.checks.append(Check(f"monodromy/{tag}/quantum-weyl", "eigenvalues match the quantum Weyl group operator",
                                    qwg.residual, qwg.passed))
            key = f"S{i}@h={_cx(h)}"
            out.matrices[key] = op
            entries.append({"generator": i, "operator": {"re": op.real.tolist(), "im": op.imag.tolist()},
                            "error_estimate": data.errors[i], "eigenvalues": [_cx(z) for z in eig],
                            "fitted_gauge": {"a": _cx(qwg.a), "b": _cx(qwg.b), "sign": qwg.sign}})
            out.eigen_rows.extend([h.real, h.imag, i, k, z.real, z.imag] for k, z in enumerate(eig))
        runs.append({"hbar": _cx(h), "generators": entries})
    out.payload = {"dim": module.dim, "runs": runs}
    return out


def suite_braid(config: RunConfig) -> SuiteResult:
    from .transport import braid_relation_check, monodromy_data
    module = config.module()
    rng = _rng(config, 1)
    pairs = [(0j, 0j)] + [tuple(complex(*rng.uniform(-0.5, 0.5, 2)) for _ in range(2))
                          for _ in range(config.gauge_pairs)]
    out = SuiteResult()
    for h in config.hbar:
        data = monodromy_data(module, h, config.tol("transport"))
        for a, b in pairs:
            for rec in braid_relation_check(data.generators(a, b), module.gcm, config.tol("braid")):
                out.checks.append(Check(f"braid/h={_cx(h)}/a={_cx(a)}/b={_cx(b)}/({rec.i},{rec.j})",
                                        f"braid relation of length {int(rec.m)}", rec.residual, rec.passed))
    out.payload = {"dim": module.dim, "gauge_pairs": [[_cx(a), _cx(b)] for a, b in pairs]}
    return out


def suite_cocycle(config: RunConfig) -> SuiteResult:
    from .transport import cocycle_ledger
    gcm = config.gcm_matrix()
    if gcm.kind != "finite":
        raise ConfigError("the cocycle suite needs a finite Cartan matrix")
    words = sorted(reduced_expressions(gcm, longest_word(gcm)).words)
    ledgers = [cocycle_ledger(gcm, w) for w in words]
    ref = ledgers[0].aggregated()
    out = SuiteResult(payload={"reduced_words": len(words), "aggregated": {str(k): list(v) for k, v in ref.items()}})
    for w, led in zip(words, ledgers):
        ok = led.aggregated() == ref
        out.checks.append(Check(f"cocycle/{''.join(map(str, w))}", "A_s depends only on w0",
                                0.0 if ok else 1.0, ok))
    return out


def suite_dcp(config: RunConfig) -> SuiteResult:
    from .dcp import associator_property_suite, dcp_system
    module = config.module()
    out = SuiteResult()
    for h in config.hbar:
        system = dcp_system(module, h)
        for rec in associator_property_suite(system, config.tol("dcp"), config.tol("dcp_series")):
            out.checks.append(Check(f"dcp/h={_cx(h)}/{rec.name}/{rec.detail}", f"associator {rec.name}",
                                    rec.residual, rec.passed))
    out.payload = {"dim": module.dim}
    return out


def suite_affine(config: RunConfig) -> SuiteResult:
    from fractions import Fraction
    from .affine import (AffineFrame, closedness_residual, cotangent_residual, form_a_h, form_s2,
                         functional_system_check, residue_check)
    rng = _rng(config, 2)
    out = SuiteResult()
    worst_f = worst_c = 0.0
    for _ in range(config.sample_points):
        z = complex(rng.uniform(-3, 3), rng.uniform(0.2, 2) * rng.choice([-1, 1]))
        worst_f = max(worst_f, functional_system_check(z).max())
        worst_c = max(worst_c, cotangent_residual(z))
    out.checks.append(Check("affine/functional-equations", "S and T functional equations", worst_f,
                            worst_f < config.tol("functional")))
    out.checks.append(Check("affine/cotangent", "pi cot(pi z) = 1/z + Psi+ - Psi-", worst_c,
                            worst_c < config.tol("cotangent")))
    gcm = config.gcm_matrix()
    frame = AffineFrame(gcm if gcm.kind == "affine" and len(gcm.components()) == 1 else cartan_matrix("A1~"))
    for name, form in (("A_h", form_a_h), ("A_S2h", form_s2)):
        worst = 0.0
        for _ in range(config.closedness_points):
            z = list(rng.normal(size=frame.n) + 1j * rng.normal(size=frame.n))
            for a in range(frame.n):
                for b in range(a + 1, frame.n):
                    worst = max(worst, closedness_residual(form, frame, z, a, b))
        out.checks.append(Check(f"affine/closedness/{name}", f"d {name} = 0", worst, worst < config.tol("closedness")))
    b = frame.rho_check()
    out.payload["B"] = [str(x) for x in b]
    sl2 = build_irrep(cartan_matrix("A1~"), [1, 0], depth=config.depth or 3)
    for i in (0, 1):
        rep = residue_check(sl2, i, "kappa", Fraction(1))
        out.checks.append(Check(f"affine/residue/wall{rep.wall}", "residue equals kappa_i / 2",
                                0.0 if rep.matches_kappa else float(max_abs(rep.residue - rep.kappa_half)),
                                rep.matches_kappa))
        out.payload[f"residue_wall{rep.wall}"] = rep.to_json()
    return out


SUITE_RUNNERS: dict[str, Callable[[RunConfig], SuiteResult]] = {
    "roots": suite_roots, "mns": suite_mns, "flatness": suite_flatness, "monodromy": suite_monodromy,
    "braid": suite_braid, "cocycle": suite_cocycle, "dcp": suite_dcp, "affine": suite_affine,
}


@dataclass
class Report:
    suites: list[str]
    config: dict
    checks: list[Check]
    results: dict
    hashes: dict[str, str]
    environment: dict
    timestamp: str
    eigen_rows: list[list] = field(default_factory=list)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def body(self) -> dict:
        """Everything except the timestamp; identical across runs of the same config."""
        return {"schema_version": SCHEMA_VERSION, "suites": self.suites, "config": self.config,
                "checks": [c.to_json() for c in self.checks], "failures": [c.id for c in self.failures],
                "pass": self.passed, "results": self.results, "content_hashes": self.hashes,
                "environment": self.environment}

    def to_json(self) -> dict:
        return {**self.body(), "timestamp": self.timestamp}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def _persist(matrices: dict[str, np.ndarray], store: Path | None) -> dict[str, str]:
    hashes = {}
    for key in sorted(matrices):
        digest = matrix_hash(matrices[key])
        hashes[key] = digest
        if store is not None:
            store.mkdir(parents=True, exist_ok=True)
            target = store / f"{digest}.npy"
            if not target.exists():
                np.save(target, np.asarray(matrices[key], dtype=complex))
    return hashes


def run_suite(config: RunConfig) -> Report:
    """Run the selected suites (concurrently), then assemble, persist and return the report."""
    config.validate()
    names = [s for s in SUITES if s in config.suites]
    if names and any(s in names for s in ("flatness", "monodromy", "braid", "dcp")):
        module = config.module()
        _ = module.e, module.f, module.h  # build shared data before the workers start
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [pool.submit(SUITE_RUNNERS[s], config) for s in names]
        results = [f.result() for f in futures]
    checks, payload, matrices, rows = [], {}, {}, []
    for name, res in zip(names, results):
        checks.extend(res.checks)
        payload[name] = res.payload
        matrices.update(res.matrices)
        rows.extend(res.eigen_rows)
    hashes = _persist(matrices, cache_dir(config))
    report = Report(names, config.to_json(), checks, payload, hashes, environment_fingerprint(),
                    datetime.now(timezone.utc).isoformat(), rows)
    if config.output_dir:
        write_outputs(report, Path(config.output_dir), config.eigenvalue_csv)
    return report


def write_outputs(report: Report, out_dir: Path, eigen_csv: bool = False) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.dumps())
    if eigen_csv:
        with open(out_dir / "eigenvalues.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["hbar_re", "hbar_im", "generator", "index", "eig_re", "eig_im"])
            w.writerows(report.eigen_rows)
