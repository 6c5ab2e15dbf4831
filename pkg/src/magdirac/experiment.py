"""Configuration-driven experiments: validation, runs, verification and export.

Configs are JSON objects with dotted flat keys (nested objects are
flattened first, so ``{"grid": {"N": 8}}`` and ``{"grid.N": 8}`` are the
same). Unknown keys are errors.
"""
from __future__ import annotations

import copy
import hashlib
import io as _io
import json
import logging
import math
import os
import platform
import shutil
import tarfile
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
import scipy

from . import __version__
from .algebra import algebra_self_test, build_dirac_basis, clifford_product_check, spin_operator, TOL_MACHINE
from .fields import (FieldConfigError, NonSolenoidalFieldError, QuadratureSettings, admissibility_check,
                     compute_constants, example_field, field_geometry, lattice_potential, FieldConstants)
from .io import algebra_rows, manifest_text, read_manifest, read_spinor, write_csv, atomic_write
from .lattice import Grid, bandlimit, gaussian_spinor, make_operator, plane_wave, random_spinor
from .multiplier import make_multiplier, optimal_M, quadratic_form_check
from .norms import AdmissibilityRelationError, hardy_check, smoothing_norms, strichartz_ratio
from .propagator import (AssemblyError, DenseSizeError, EVOLUTION_CONVENTION, KrylovConvergenceError,
                         assemble_dense, evolve_dense, evolve_krylov)
from .virial import TERM_NAMES, rhs_bound_check, virial_terms

log = logging.getLogger(__name__)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
MANIFEST_NAME = "manifest.txt"
CHECKSUM_NAME = "SHA256SUMS"


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted name of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class NumericalError(RuntimeError):
    pass


class IncompleteRunError(FileNotFoundError):
    pass


DEFAULTS: dict[str, Any] = {
    "field.kind": "none",
    "field.params": {},
    "field.split": "default",
    "field.cutoff_fraction": 0.4,
    "quadrature.r_min": 1e-3,
    "quadrature.r_max": 1e3,
    "quadrature.n_shells": 2000,
    "quadrature.direction_refinement": 0,
    "quadrature.j_min": -10,
    "quadrature.j_max": 10,
    "grid.N": 8,
    "grid.L": 12.0,
    "grid.center": [0.0, 0.0, 0.0],
    "mass": 1.0,
    "datum.kind": "gaussian",
    "datum.width": 1.5,
    "datum.center": [0.0, 0.0, 0.0],
    "datum.spinor": [1.0, 0.0, 0.0, 0.0],
    "datum.momentum": [0.0, 0.0, 0.0],
    "datum.mode": [1, 0, 0],
    "datum.bandlimit": None,
    "datum.path": None,
    "propagator.method": "dense",
    "propagator.tol": 1e-9,
    "propagator.dense_cap": 16384,
    "time.T": 1.0,
    "time.tau": 0.01,
    "analyses.virial": True,
    "analyses.momentum_bound": True,
    "analyses.hardy": True,
    "analyses.hardy_epsilon": None,
    "analyses.smoothing": False,
    "analyses.smoothing_horizons": [],
    "analyses.strichartz": [],
    "multiplier.R": [2.0],
    "multiplier.M": "optimal",
    "multiplier.profile": "periodic",
    "multiplier.refine": 2,
    "seed": 0,
    "output": "run",
}

# keys whose values are mappings and must not be flattened further
_OPAQUE = {"field.params"}


def flatten(cfg: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in cfg.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict) and key not in _OPAQUE:
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _num(key, v, *, integer=False, positive=False, nonneg=False):
    ok = isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
    if integer:
        ok = ok and float(v).is_integer()
    if not ok:
        raise ConfigError(key, f"expected {'an integer' if integer else 'a finite number'}, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(key, f"must be positive, got {v}")
    if nonneg and v < 0:
        raise ConfigError(key, f"must be nonnegative, got {v}")
    return int(v) if integer else float(v)


def _vec(key, v, n):
    if not isinstance(v, (list, tuple)) or len(v) != n:
        raise ConfigError(key, f"expected a list of {n} numbers, got {v!r}")
    return [_num(key, x) for x in v]


def _spinor(key, v):
    if not isinstance(v, (list, tuple)) or len(v) != 4:
        raise ConfigError(key, "expected 4 entries (numbers or [re, im] pairs)")
    out = []
    for x in v:
        if isinstance(x, (list, tuple)) and len(x) == 2:
            out.append(complex(_num(key, x[0]), _num(key, x[1])))
        else:
            out.append(complex(_num(key, x)))
    if not any(out):
        raise ConfigError(key, "spinor direction must be nonzero")
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @property
    def grid(self) -> Grid:
        return Grid(self["grid.N"], self["grid.L"], tuple(self["grid.center"]))

    @property
    def times(self) -> np.ndarray:
        T, tau = self["time.T"], self["time.tau"]
        n = int(round(T / tau))
        return np.linspace(0.0, n * tau, n + 1)

    def as_json(self) -> str:
        return json.dumps(self.values, sort_keys=True)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        vals = copy.deepcopy(self.values)
        mapping = {"N": "grid.N", "L": "grid.L", "T": "time.T", "tau": "time.tau", "output": "output"}
        for k, v in kw.items():
            if v is not None:
                vals[mapping.get(k, k)] = v
        return validate_config(vals)


def validate_config(raw: dict) -> ExperimentConfig:
    """Merge defaults, reject unknown keys and check every value; errors name the key."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    flat = flatten(raw)
    unknown = sorted(set(flat) - set(DEFAULTS))
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration key")
    v = copy.deepcopy(DEFAULTS)
    v.update(flat)

    N = v["grid.N"]
    if not isinstance(N, int) or isinstance(N, bool) or N < 4 or N % 2:
        raise ConfigError("grid.N", f"must be an even integer >= 4, got {N!r}")
    v["grid.L"] = _num("grid.L", v["grid.L"], positive=True)
    v["grid.center"] = _vec("grid.center", v["grid.center"], 3)
    v["mass"] = _num("mass", v["mass"])
    v["time.T"] = _num("time.T", v["time.T"], positive=True)
    v["time.tau"] = _num("time.tau", v["time.tau"], positive=True)
    steps = v["time.T"] / v["time.tau"]
    if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
        raise ConfigError("time.tau", "T must be an integer multiple of tau")
    v["seed"] = _num("seed", v["seed"], integer=True, nonneg=True)
    if not isinstance(v["output"], str) or not v["output"]:
        raise ConfigError("output", "must be a nonempty path")

    if v["field.kind"] != "none":
        if not isinstance(v["field.params"], dict):
            raise ConfigError("field.params", "must be an object")
        try:
            spec = example_field(v["field.kind"], v["field.params"], v["field.split"])
        except FieldConfigError as exc:
            raise ConfigError(exc.key, str(exc).split(": ", 1)[1]) from exc
        if spec.A is None:
            raise ConfigError("field.kind", f"{spec.field_id} has no vector potential and cannot be propagated")
    v["field.cutoff_fraction"] = _num("field.cutoff_fraction", v["field.cutoff_fraction"], positive=True)
    try:
        QuadratureSettings(r_min=_num("quadrature.r_min", v["quadrature.r_min"]),
                           r_max=_num("quadrature.r_max", v["quadrature.r_max"]),
                           n_shells=_num("quadrature.n_shells", v["quadrature.n_shells"], integer=True),
                           direction_refinement=_num("quadrature.direction_refinement",
                                                     v["quadrature.direction_refinement"], integer=True, nonneg=True),
                           j_min=_num("quadrature.j_min", v["quadrature.j_min"], integer=True),
                           j_max=_num("quadrature.j_max", v["quadrature.j_max"], integer=True))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("quadrature", str(exc)) from exc

    kind = v["datum.kind"]
    if kind not in ("gaussian", "plane_wave", "random", "file"):
        raise ConfigError("datum.kind", f"expected gaussian, plane_wave, random or file, got {kind!r}")
    if kind == "gaussian":
        v["datum.width"] = _num("datum.width", v["datum.width"], positive=True)
        v["datum.center"] = _vec("datum.center", v["datum.center"], 3)
        v["datum.momentum"] = _vec("datum.momentum", v["datum.momentum"], 3)
    if kind == "plane_wave":
        v["datum.mode"] = [int(_num("datum.mode", x, integer=True)) for x in _vec("datum.mode", v["datum.mode"], 3)]
    if kind == "file" and not v["datum.path"]:
        raise ConfigError("datum.path", "required when datum.kind is file")
    _spinor("datum.spinor", v["datum.spinor"])
    if v["datum.bandlimit"] is not None:
        _num("datum.bandlimit", v["datum.bandlimit"], integer=True, nonneg=True)

    if v["propagator.method"] not in ("dense", "krylov"):
        raise ConfigError("propagator.method", f"expected dense or krylov, got {v['propagator.method']!r}")
    _num("propagator.tol", v["propagator.tol"], positive=True)
    _num("propagator.dense_cap", v["propagator.dense_cap"], integer=True, positive=True)
    if v["propagator.method"] == "dense" and 4 * N ** 3 >= v["propagator.dense_cap"]:
        raise ConfigError("propagator.method", f"dense needs 4N^3 = {4 * N ** 3} < dense_cap "
                                               f"= {v['propagator.dense_cap']}; use krylov")

    R = v["multiplier.R"]
    R = R if isinstance(R, list) else [R]
    v["multiplier.R"] = [_num("multiplier.R", r, positive=True) for r in R]
    if v["multiplier.M"] != "optimal":
        v["multiplier.M"] = _num("multiplier.M", v["multiplier.M"], nonneg=True)
    if v["multiplier.profile"] not in ("periodic", "exact"):
        raise ConfigError("multiplier.profile", "expected periodic or exact")
    _num("multiplier.refine", v["multiplier.refine"], integer=True, positive=True)

    for key in ("analyses.virial", "analyses.momentum_bound", "analyses.hardy", "analyses.smoothing"):
        if not isinstance(v[key], bool):
            raise ConfigError(key, "expected true or false")
    if v["analyses.hardy_epsilon"] is not None:
        e = _num("analyses.hardy_epsilon", v["analyses.hardy_epsilon"])
        if not 0 < e < 1:
            raise ConfigError("analyses.hardy_epsilon", "must lie in (0, 1)")
    for T in v["analyses.smoothing_horizons"]:
        _num("analyses.smoothing_horizons", T, positive=True)
    pairs = []
    for pq in v["analyses.strichartz"]:
        if not isinstance(pq, (list, tuple)) or len(pq) != 2:
            raise ConfigError("analyses.strichartz", f"expected [p, q] pairs, got {pq!r}")
        p, q = (math.inf if x in ("inf", "Infinity", math.inf) else _num("analyses.strichartz", x, positive=True)
                for x in pq)
        pairs.append([p, q])
    v["analyses.strichartz"] = pairs
    return ExperimentConfig(v)


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"{path}: invalid JSON ({exc})") from exc
    return validate_config(raw)


# ------------------------------------------------------------------ running

@dataclass
class RunManifest:
    config: ExperimentConfig
    constants: FieldConstants | None
    verdict: str
    files: list[str]
    summaries: dict
    environment: dict
    wall_clock: float

    def entries(self) -> dict:
        e = {"library_version": __version__, "evolution_convention": EVOLUTION_CONVENTION,
             "config": self.config.as_json(), "seed": self.config["seed"], "verdict": self.verdict}
        if self.constants is not None:
            c = self.constants
            e.update({f"constant.{k}": v for k, v in c.as_row().items()})
            e.update({"constant.window_r": [c.r_min, c.r_max], "constant.n_shells": c.n_shells,
                      "constant.n_directions": c.n_directions, "constant.dyadic_j": [c.j_min, c.j_max]})
        e.update({f"summary.{k}": v for k, v in self.summaries.items()})
        e.update({f"env.{k}": v for k, v in self.environment.items()})
        e["wall_clock_seconds"] = round(self.wall_clock, 3)
        e["files"] = self.files
        return e

    def to_text(self) -> str:
        return manifest_text(self.entries())


def environment_fingerprint() -> dict:
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "platform": platform.platform()}


def field_for(cfg: ExperimentConfig):
    if cfg["field.kind"] == "none":
        return None
    return example_field(cfg["field.kind"], cfg["field.params"], cfg["field.split"])


def quadrature_for(cfg: ExperimentConfig) -> QuadratureSettings:
    return QuadratureSettings(r_min=float(cfg["quadrature.r_min"]), r_max=float(cfg["quadrature.r_max"]),
                              n_shells=int(cfg["quadrature.n_shells"]),
                              direction_refinement=int(cfg["quadrature.direction_refinement"]),
                              j_min=int(cfg["quadrature.j_min"]), j_max=int(cfg["quadrature.j_max"]))


def field_check(cfg: ExperimentConfig):
    """Constants and admissibility verdict for the configured field."""
    spec = field_for(cfg)
    if spec is None:
        consts = FieldConstants(0.0, 0.0, 0.0, 0.0, 0.0, cfg["quadrature.r_min"], cfg["quadrature.r_max"],
                                0, 0, cfg["quadrature.j_min"], cfg["quadrature.j_max"])
    else:
        consts = compute_constants(spec, field_geometry(spec), quadrature_for(cfg))
    return spec, consts, admissibility_check(consts, cfg["mass"])


def build_datum(cfg: ExperimentConfig, grid: Grid) -> np.ndarray:
    spinor = _spinor("datum.spinor", cfg["datum.spinor"])
    kind = cfg["datum.kind"]
    if kind == "gaussian":
        f = gaussian_spinor(grid, cfg["datum.width"], cfg["datum.center"], spinor, cfg["datum.momentum"])
    elif kind == "plane_wave":
        f = plane_wave(grid, tuple(cfg["datum.mode"]), spinor)
    elif kind == "random":
        f = random_spinor(grid, np.random.default_rng(cfg["seed"]))
    else:
        f, fgrid = read_spinor(cfg["datum.path"])
        if fgrid.N != grid.N or fgrid.L != grid.L:
            raise ConfigError("datum.path", f"file grid (N={fgrid.N}, L={fgrid.L}) does not match grid")
    if cfg["datum.bandlimit"] is not None:
        f = bandlimit(f, grid, int(cfg["datum.bandlimit"]))
    return f


def _run_into(cfg: ExperimentConfig, out: Path) -> RunManifest:
    t0 = time.perf_counter()
    files, summaries = [], {}

    def emit(name, header, rows):
        write_csv(out / name, header, rows)
        files.append(name)

    spec, consts, adm = field_check(cfg)
    emit("constants.csv", ["C0", "C1", "C2", "B2_sup", "decay_sum", "verdict", "margin"],
         [{**consts.as_row(), "verdict": adm.verdict, "margin": adm.margin}])
    log.info("admissibility %s (margin %.4g)", adm.verdict, adm.margin)

    grid = cfg.grid
    A = None if spec is None else lattice_potential(spec, grid, cfg["field.cutoff_fraction"])
    op = make_operator(grid, A=A, m=cfg["mass"])
    f = build_datum(cfg, grid)
    times = cfg.times
    try:
        if cfg["propagator.method"] == "dense":
            dense = assemble_dense(op, dense_cap=int(cfg["propagator.dense_cap"]))
            traj = evolve_dense(dense, f, times)
            summaries["unitarity_defect"] = dense.unitarity_defect()
        else:
            traj = evolve_krylov(op, f, times, tol=cfg["propagator.tol"])
    except (AssemblyError, KrylovConvergenceError) as exc:
        raise NumericalError(str(exc)) from exc
    norms, energies = traj.norms(), traj.energies()
    if not (np.all(np.isfinite(norms)) and np.all(np.isfinite(energies))):
        raise NumericalError("non-finite values in the trajectory")
    emit("trajectory.csv", ["time", "norm", "energy"],
         ({"time": t, "norm": n, "energy": e} for t, n, e in zip(times, norms, energies)))
    summaries["norm_drift"] = float(np.abs(norms - norms[0]).max())
    summaries["energy_drift"] = float(np.abs(energies - energies[0]).max())

    M = optimal_M(consts.C1, consts.C2) if cfg["multiplier.M"] == "optimal" else cfg["multiplier.M"]
    if not math.isfinite(M):
        M = 0.0
    summaries["M"] = M
    geom = field_geometry(spec) if spec is not None else None
    for R in cfg["multiplier.R"]:
        mult = make_multiplier(R, M)
        if cfg["analyses.virial"] and times.size >= 3:
            rep = virial_terms(traj, mult, geometry=geom, profile=cfg["multiplier.profile"],
                               refine_factor=int(cfg["multiplier.refine"]),
                               cutoff_fraction=cfg["field.cutoff_fraction"])
            emit(f"virial_R{R:g}.csv", ["time", *TERM_NAMES, "momentum", "dmomentum", "scale", "residual"],
                 rep.rows())
            summaries[f"virial_R{R:g}.max_residual"] = rep.max_residual()
        if cfg["analyses.momentum_bound"] and consts.C0 < 0.25 and not (op.m == 0 and consts.B2_sup > 0):
            mb = rhs_bound_check(traj, mult, consts)
            emit(f"momentum_bound_R{R:g}.csv", ["time", "momentum", "young_bound", "chain_bound", "margin"],
                 ({"time": t, "momentum": a, "young_bound": y, "chain_bound": c, "margin": c - a}
                  for t, a, y, c in zip(times, mb.momentum, mb.young_bound, mb.chain_bound)))
            summaries[f"momentum_bound_R{R:g}.min_margin"] = float(mb.margin.min())

    if cfg["analyses.hardy"] and consts.C0 < 0.25 and not (op.m == 0 and consts.B2_sup > 0):
        eps = cfg["analyses.hardy_epsilon"]
        if eps is None:
            eps = 1.0 - 4.0 * consts.C0
            if not 0 < eps < 1:
                eps = 0.5
        hr = hardy_check(f, op, consts, eps)
        emit("hardy.csv", ["epsilon", "mass_term", "weighted_term", "gradient_term", "lhs", "rhs", "margin",
                           "identity_residual", "verdict"],
             [{"epsilon": eps, "mass_term": hr.mass_term, "weighted_term": hr.weighted_term,
               "gradient_term": hr.gradient_term, "lhs": hr.lhs, "rhs": hr.rhs, "margin": hr.margin,
               "identity_residual": hr.identity_residual, "verdict": hr.verdict}])
        summaries["hardy.verdict"] = hr.verdict

    if cfg["analyses.smoothing"]:
        horizons = cfg["analyses.smoothing_horizons"] or [float(times[-1])]
        sm = smoothing_norms(traj, horizons=horizons)
        emit("smoothing.csv", ["T", "sup_X", "sup_Y", "sup_X_grad", "tangential", "center", "ratio_X",
                               "ratio_gradient"],
             sm.rows())
        summaries["smoothing.radii"] = [float(r) for r in sm.radii]

    if cfg["analyses.strichartz"]:
        rows = []
        for p, q in cfg["analyses.strichartz"]:
            try:
                sr = strichartz_ratio(traj, p, q)
            except AdmissibilityRelationError as exc:
                raise ConfigError("analyses.strichartz", str(exc)) from exc
            rows.append({"p": p, "q": q, "class": sr.admissibility, "s": sr.s, "T": sr.horizon,
                         "mixed_norm": sr.mixed_norm, "ratio": sr.ratio})
        emit("strichartz.csv", ["p", "q", "class", "s", "T", "mixed_norm", "ratio"], rows)

    return RunManifest(config=cfg, constants=consts, verdict=adm.verdict, files=files, summaries=summaries,
                       environment=environment_fingerprint(), wall_clock=time.perf_counter() - t0)


def run_experiment(cfg: ExperimentConfig, output: str | os.PathLike | None = None) -> RunManifest:
    """Run into a temporary sibling directory and rename it into place on success.

    Any failure removes the temporary directory, so no partial report
    survives; an existing output directory is replaced only on success.
    """
    out = Path(output or cfg["output"]).resolve()
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        manifest = _run_into(cfg, tmp)
        atomic_write(tmp / MANIFEST_NAME, manifest.to_text())
        if out.exists():
            shutil.rmtree(out)
        os.rename(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return manifest


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, DenseSizeError, FieldConfigError, NonSolenoidalFieldError)):
        return EXIT_VALIDATION
    if isinstance(exc, (NumericalError, AssemblyError, KrylovConvergenceError, FloatingPointError)):
        return EXIT_NUMERICAL
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_NUMERICAL


# ------------------------------------------------------------------ verification

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass
class VerifySummary:
    level: str
    checks: list[CheckResult] = field(default_factory=list)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.passed else EXIT_NUMERICAL

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}" for c in self.checks]


def _fast_checks(spin) -> list[tuple[str, Callable[[], tuple[bool, str]]]]:
    from .batteries import commutator_battery, square_battery

    basis = build_dirac_basis()

    def algebra():
        res = algebra_self_test(basis, spin=spin)
        bad = [n for n, r in res if r >= TOL_MACHINE]
        return not bad, f"{len(res)} identities, failing: {', '.join(bad) or 'none'}"

    def clifford():
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(100):
            F = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            G = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            worst = max(worst, clifford_product_check(F, G, basis, spin=spin))
        return worst < TOL_MACHINE, f"max residual {worst:.2e} over 100 random pairs"

    def multiplier():
        r = np.linspace(1e-3, 20, 4001)
        worst = 0.0
        for R, M in ((1.0, 0.0), (2.0, 0.1), (0.5, 0.5)):
            m = make_multiplier(R, M)
            worst = max(worst, (m.dphi(r) - (M + 0.5)).max(), (m.d2phi(r) - 1 / (3 * R)).max(),
                        (m.laplacian(r) * r - (1 + 2 * M)).max(), -m.dphi(r).min(), -m.d2phi(r).min())
        return worst <= 1e-12, f"max bound violation {worst:.2e}"

    def quadratic():
        res = quadratic_form_check(optimal_M(0.1, 0.1), 0.1, 0.1)
        fail = quadratic_form_check(0.5, 1.0, 0.0)
        ok = res.minimum >= -1e-12 and fail.minimum < 0
        return ok, f"admissible min {res.minimum:.2e}, failing-case min {fail.minimum:.3g}"

    def square():
        worst = max(e.values[0] for e in square_battery(8, 12.0, True, spin=spin))
        return worst < 1e-8, f"max residual {worst:.2e} (N=8, band-limited)"

    def commutators():
        worst = max(max(e.values) for e in commutator_battery(16, 12.0, spin=spin))
        return worst < 1e-6, f"max residual {worst:.2e} (N=16)"

    def constants():
        spec = example_field("perturbed_ex2", {"epsilon": 0.01, "delta": 1.0})
        adm = admissibility_check(compute_constants(spec), 1.0)
        return adm.verdict != "fail" and adm.margin > 0.9, f"perturbed_ex2 verdict {adm.verdict}, margin {adm.margin:.4f}"

    return [("algebra", algebra), ("clifford_product", clifford), ("multiplier_bounds", multiplier),
            ("quadratic_form", quadratic), ("squared_operator", square), ("commutators", commutators),
            ("field_constants", constants)]


def _full_checks(spin) -> list[tuple[str, Callable[[], tuple[bool, str]]]]:
    from .batteries import hardy_battery

    def virial():
        grid = Grid(8, 12.0)
        op = make_operator(grid, m=1.0, spin=spin)
        f = bandlimit(gaussian_spinor(grid, 1.5, spinor=(1, 0, 0.5, 0), momentum=(0.3, 0, 0)), grid, 3)
        dense = assemble_dense(op)
        mult = make_multiplier(2.0, 0.0)
        res = []
        for tau in (1e-2, 5e-3):
            traj = evolve_dense(dense, f, np.linspace(0, 1, int(round(1 / tau)) + 1))
            res.append(virial_terms(traj, mult).max_residual())
        ratio = res[0] / res[1]
        return res[0] < 5e-3 and 3 <= ratio <= 5, f"max residual {res[0]:.2e}, tau-halving ratio {ratio:.2f}"

    def hardy():
        entries = hardy_battery(spin=spin)
        worst = max(e.values[0] for e in entries)
        margin = min(e.values[1] for e in entries)
        return worst < 1e-8 and margin >= 0, f"identity residual {worst:.2e}, min margin {margin:.3g}"

    return [("virial_dense_N8", virial), ("hardy_battery", hardy)]


def verify_suite(level: str = "fast", spin: np.ndarray | None = None, soft_budget: float | None = None) -> VerifySummary:
    """Run the verification checks; ``spin`` overrides the spin triple (fault injection)."""
    if level not in ("fast", "full"):
        raise ValueError(f"level must be fast or full, got {level!r}")
    t0 = time.perf_counter()
    summary = VerifySummary(level)
    checks = _fast_checks(spin) + (_full_checks(spin) if level == "full" else [])
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        summary.checks.append(CheckResult(name, bool(ok), detail))
    summary.runtime = time.perf_counter() - t0
    budget = soft_budget if soft_budget is not None else (60.0 if level == "fast" else 900.0)
    if summary.runtime > budget:
        log.warning("verify %s took %.1f s (budget %.0f s)", level, summary.runtime, budget)
    return summary


def flipped_spin() -> np.ndarray:
    """Sign-flipped spin triple, the mutation used to exercise the suite."""
    return -spin_operator(build_dirac_basis())


# ------------------------------------------------------------------ export

def _tar_bytes(entries: list[tuple[str, bytes]]) -> bytes:
    buf = _io.BytesIO()
    with tarfile.open(fileobj=buf, mode="w", format=tarfile.USTAR_FORMAT) as tar:
        for name, data in entries:
            info = tarfile.TarInfo(name)
            info.size = len(data)
            info.mtime = 0
            info.mode = 0o644
            info.uid = info.gid = 0
            info.uname = info.gname = ""
            tar.addfile(info, _io.BytesIO(data))
    return buf.getvalue()


def export_bundle(run_dir, archive=None) -> tuple[Path, dict[str, str]]:
    """Pack the manifest (first), a checksum list and every listed CSV into a tar archive.

    Entry order, metadata and contents are fixed, so exporting the same
    directory twice gives identical bytes.
    """
    run_dir = Path(run_dir)
    mpath = run_dir / MANIFEST_NAME
    if not mpath.is_file():
        raise IncompleteRunError(f"incomplete run directory: missing {MANIFEST_NAME}")
    listed = read_manifest(mpath).get("files", "")
    names = [n for n in listed.split(",") if n]
    for n in names:
        if not (run_dir / n).is_file():
            raise IncompleteRunError(f"incomplete run directory: missing {n}")
    payload = [(MANIFEST_NAME, mpath.read_bytes())] + [(n, (run_dir / n).read_bytes()) for n in sorted(names)]
    sums = {n: hashlib.sha256(d).hexdigest() for n, d in payload}
    sum_text = "".join(f"{sums[n]}  {n}\n" for n, _ in payload).encode()
    entries = [payload[0], (CHECKSUM_NAME, sum_text)] + payload[1:]
    archive = Path(archive) if archive else run_dir.with_suffix(".tar")
    data = _tar_bytes(entries)
    atomic_write(archive, data)
    sums["archive"] = hashlib.sha256(data).hexdigest()
    return archive, sums
