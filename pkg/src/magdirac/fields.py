"""Analytic magnetic fields, Poincare-gauge potentials and the field constants
C0, C1, C2, sup|B2| and the dyadic decay sum of |A|.

Field callables map an array of points of shape (3, ...) to values of the
same shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid

from .quadrature import cube_directions

VectorField = Callable[[np.ndarray], np.ndarray]

FIELD_KINDS = ("constant", "radial_omega", "perturbed_ex2", "decaying")
SPLITS = ("default", "B1", "B2")
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


class FieldConfigError(ValueError):
    """Missing or invalid field parameter; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class NonSolenoidalFieldError(ValueError):
    pass


class ExcludedPointError(ValueError):
    pass


class InvalidQuadratureError(ValueError):
    pass


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class FieldSpec:
    B: VectorField
    B1: VectorField
    B2: VectorField
    A: Optional[VectorField]
    kind: str
    params: dict = field(default_factory=dict)
    split: str = "default"

    @property
    def field_id(self) -> str:
        items = ",".join(f"{k}={self.params[k]}" for k in sorted(self.params))
        return f"{self.kind}({items})" + ("" if self.split == "default" else f"[{self.split}]")

    def scaled(self, lam: float) -> "FieldSpec":
        """lam * B with the same split (and potential)."""
        sc = lambda f: None if f is None else (lambda x: lam * f(x))
        return replace(self, B=sc(self.B), B1=sc(self.B1), B2=sc(self.B2), A=sc(self.A),
                       params={**self.params, "scale": lam * self.params.get("scale", 1.0)})


# finite differences -----------------------------------------------------------

_ROUNDOFF_FACTOR = 64.0


def fd_step(x: np.ndarray) -> np.ndarray:
    """Relative step 1e-4 (1 + |x|)."""
    return 1e-4 * (1.0 + np.sqrt((np.asarray(x) ** 2).sum(axis=0)))


def fd_jacobian(F: VectorField, x: np.ndarray) -> np.ndarray:
    """J[i, j] = d_j F_i by central differences, shape (3, 3) + x.shape[1:]."""
    x = np.asarray(x, dtype=float)
    h = fd_step(x)
    cols = []
    for j in range(3):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((F(x + e) - F(x - e)) / (2 * h))
    return np.stack(cols, axis=1)


def fd_curl(F: VectorField, x: np.ndarray) -> np.ndarray:
    J = fd_jacobian(F, x)
    return np.stack([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])


def fd_divergence(F: VectorField, x: np.ndarray) -> np.ndarray:
    J = fd_jacobian(F, x)
    return J[0, 0] + J[1, 1] + J[2, 2]


def default_sample_points(n: int = 64, seed: int = 12345, scale: float = 3.0) -> np.ndarray:
    """Deterministic sample set (3, n) of nonzero points, log-spread in radius."""
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((3, n))
    d /= np.linalg.norm(d, axis=0)
    r = scale * np.exp(rng.uniform(np.log(0.05), np.log(3.0), n)) / 3.0
    return d * r


# gauge ------------------------------------------------------------------------

def poincare_gauge(B: VectorField, check_points: np.ndarray | None = None, div_tol: float = 1e-6) -> VectorField:
    """A(x) = int_0^1 s B(s x) x x ds by graded 16-point Gauss-Legendre panels; requires div B = 0."""
    pts = default_sample_points() if check_points is None else check_points
    div = np.abs(fd_divergence(B, pts)).max()
    if div > div_tol:
        raise NonSolenoidalFieldError(f"div B residual {div:.3e} exceeds {div_tol:.0e} on the sample set")
    def A(x):
        x = np.asarray(x, dtype=float)
        rmax = float(_radius(x).max()) if x.size else 0.0
        # geometric panels [2^-(k+1), 2^-k] resolve integrands peaked near s ~ 1/|x|
        K = max(1, int(np.ceil(np.log2(max(rmax, 1.0)))) + 2)
        edges = np.concatenate([[0.0], 2.0 ** -np.arange(K, -1, -1)])
        acc = np.zeros_like(x)
        for a, b in zip(edges[:-1], edges[1:]):
            for si, wi in zip(0.5 * (b - a) * (_GL_X + 1.0) + a, 0.5 * (b - a) * _GL_W):
                acc += wi * si * np.cross(B(si * x), x, axis=0)
        return acc

    return A


# built-in fields --------------------------------------------------------------

def _require(params: dict, key: str, kind: str) -> float:
    if key not in params:
        raise FieldConfigError(f"field.params.{key}", f"required for kind {kind!r}")
    val = params[key]
    if not isinstance(val, (int, float)) or isinstance(val, bool) or not math.isfinite(val):
        raise FieldConfigError(f"field.params.{key}", f"must be a finite number, got {val!r}")
    return float(val)


def _radius(x):
    return np.sqrt((np.asarray(x) ** 2).sum(axis=0))


def _unit(x):
    r = _radius(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(r > 0, x / np.where(r > 0, r, 1.0), 0.0)


def _omega_field(params: dict):
    """omega(n) n with omega(n) = omega0 + (omega1, omega2, omega3) . n."""
    w0 = float(params.get("omega0", 0.0))
    w = np.array([float(params.get(f"omega{k}", 0.0)) for k in (1, 2, 3)])

    def B(x):
        n = _unit(x)
        return (w0 + np.tensordot(w, n, axes=(0, 0))) * n

    return B, bool(w0 != 0.0 or np.any(w != 0.0))


def rotational_field(psi: Callable, dpsi: Callable) -> tuple[VectorField, VectorField]:
    """(B, A) for A = psi(r) e_z x x / 2, B = curl A (divergence free by construction)."""

    def A(x):
        x = np.asarray(x, dtype=float)
        p = psi(_radius(x))
        return 0.5 * p * np.stack([-x[1], x[0], np.zeros_like(x[0])])

    def B(x):
        x = np.asarray(x, dtype=float)
        r = _radius(x)
        p, dp = psi(r), dpsi(r)
        with np.errstate(invalid="ignore", divide="ignore"):
            q = np.where(r > 0, dp / np.where(r > 0, r, 1.0), 0.0)
        return np.stack([-0.5 * q * x[0] * x[2], -0.5 * q * x[1] * x[2], p + 0.5 * q * (x[0] ** 2 + x[1] ** 2)])

    return B, A


def _ex2_profile(delta: float):
    p = 0.5 * (2.0 + delta)
    psi = lambda r: (1.0 + r ** 2) ** (-p)
    dpsi = lambda r: -2.0 * p * r * (1.0 + r ** 2) ** (-p - 1.0)
    return psi, dpsi


def ex2_amplitude(delta: float) -> float:
    """Largest amplitude c (times 0.99) for which c * B_unit obeys both decay bounds
    |B_tau| <= 1/(r^{2-d} + r^{2+d}) and |d_r B| <= 1/(r^{3-d} + r^{3+d})."""
    B, _ = rotational_field(*_ex2_profile(delta))
    spec = FieldSpec(B=B, B1=B, B2=_zero, A=None, kind="unit")
    geom = field_geometry(spec)
    r = np.geomspace(1e-3, 1e3, 400)
    dirs = cube_directions(1)
    pts = (r[None, :, None] * dirs.T[:, None, :]).reshape(3, -1)
    rr = _radius(pts)
    bt = np.sqrt((geom.B_tau(pts) ** 2).sum(axis=0))
    dr = np.sqrt((geom.dB_r(pts) ** 2).sum(axis=0))
    bound_t = 1.0 / (rr ** (2 - delta) + rr ** (2 + delta))
    bound_r = 1.0 / (rr ** (3 - delta) + rr ** (3 + delta))
    with np.errstate(divide="ignore"):
        c = min(np.min(bound_t / bt), np.min(bound_r / dr))
    return 0.99 * float(c)


def example_field(kind: str, params: dict | None = None, split: str = "default") -> FieldSpec:
    """Built-in field; the split B = B1 + B2 is declared here, never inferred.

    constant       b (along e_z)                    -> B2 by default
    radial_omega   omega0, omega1..3                -> B2 (not solenoidal: A is None)
    perturbed_ex2  epsilon, delta, omega0..3        -> decaying part B1, omega part B2
    decaying       a, w: B = curl(0, 0, a exp(-|x|^2/w^2)) -> B1
    """
    params = dict(params or {})
    if kind not in FIELD_KINDS:
        raise FieldConfigError("field.kind", f"unknown kind {kind!r}; expected one of {FIELD_KINDS}")
    if split not in SPLITS:
        raise FieldConfigError("field.split", f"unknown split {split!r}; expected one of {SPLITS}")

    if kind == "constant":
        b = _require(params, "b", kind)
        B = lambda x: np.stack([np.zeros_like(x[0]), np.zeros_like(x[0]), b * np.ones_like(x[0])])
        decaying, bounded = _zero, B
        A = poincare_gauge(B)
    elif kind == "radial_omega":
        if not any(k.startswith("omega") for k in params):
            raise FieldConfigError("field.params.omega0", "radial_omega needs at least one omega coefficient")
        for k in params:
            _require(params, k, kind)
        B, _ = _omega_field(params)
        decaying, bounded, A = _zero, B, None
    elif kind == "perturbed_ex2":
        eps = _require(params, "epsilon", kind)
        delta = _require(params, "delta", kind)
        if not 0 < delta < 2:
            raise FieldConfigError("field.params.delta", f"must lie in (0, 2), got {delta}")
        c = ex2_amplitude(delta)
        Bu, Au = rotational_field(*_ex2_profile(delta))
        decaying = lambda x: eps * c * Bu(x)
        omega, has_omega = _omega_field(params)
        bounded = omega if has_omega else _zero
        B = (lambda x: decaying(x) + omega(x)) if has_omega else decaying
        A = None if has_omega else poincare_gauge(decaying)
        params["amplitude"] = c
    else:
        a = _require(params, "a", kind)
        w = _require(params, "w", kind)
        if w <= 0:
            raise FieldConfigError("field.params.w", "must be positive")

        def B(x):
            g = a * np.exp(-(np.asarray(x) ** 2).sum(axis=0) / w ** 2)
            # curl (0, 0, g) = (d_y g, -d_x g, 0)
            return np.stack([-2 * x[1] / w ** 2 * g, 2 * x[0] / w ** 2 * g, np.zeros_like(g)])

        decaying, bounded = B, _zero
        A = poincare_gauge(B)

    if split == "B1":
        decaying, bounded = B, _zero
    elif split == "B2":
        decaying, bounded = _zero, B
    return FieldSpec(B=B, B1=decaying, B2=bounded, A=A, kind=kind, params=params, split=split)


# geometry -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FieldGeometry:
    B_tau: VectorField
    dB_r: VectorField
    DB: Callable[[np.ndarray], np.ndarray]


def _exclude_origin(x):
    x = np.asarray(x, dtype=float)
    if np.any(_radius(x) == 0):
        raise ExcludedPointError("field geometry is undefined at x = 0")
    return x


def field_geometry(spec: FieldSpec) -> FieldGeometry:
    """B_tau = x/|x| ^ B, d_r B = (x/|x|).grad B and DB = [d_j B_i], by central differences."""
    B = spec.B

    def B_tau(x):
        x = _exclude_origin(x)
        return np.cross(_unit(x), B(x), axis=0)

    def dB_r(x):
        x = _exclude_origin(x)
        n = _unit(x)
        h = fd_step(x)
        plus, minus = B(x + h * n), B(x - h * n)
        d = (plus - minus) / (2 * h)
        # differences at the roundoff level of the central quotient are zero
        floor = _ROUNDOFF_FACTOR * np.finfo(float).eps * (_radius(plus) + _radius(minus)) / (2 * h)
        return np.where(_radius(d) <= floor, 0.0, d)

    def DB(x):
        return fd_jacobian(B, _exclude_origin(x))

    return FieldGeometry(B_tau=B_tau, dB_r=dB_r, DB=DB)


# constants ------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSettings:
    r_min: float = 1e-3
    r_max: float = 1e3
    n_shells: int = 2000
    direction_refinement: int = 0
    j_min: int = -10
    j_max: int = 10
    radii_per_dyadic_shell: int = 8
    divergence_threshold: float = 1e6
    convergence_rtol: float = 1e-2

    def __post_init__(self):
        if not self.r_min > 0:
            raise InvalidQuadratureError(f"r_min must be positive, got {self.r_min}")
        if not self.r_max > self.r_min:
            raise InvalidQuadratureError("r_max must exceed r_min")
        if self.n_shells < 2:
            raise InvalidQuadratureError("n_shells must be at least 2")
        if self.j_max < self.j_min:
            raise InvalidQuadratureError("j_max must be >= j_min")

    @property
    def shells_per_decade(self) -> float:
        return (self.n_shells - 1) / math.log10(self.r_max / self.r_min)


@dataclass(frozen=True)
class FieldConstants:
    C0: float
    C1: float
    C2: float
    B2_sup: float
    decay_sum: float
    r_min: float
    r_max: float
    n_shells: int
    n_directions: int
    j_min: int
    j_max: int

    def as_row(self) -> dict:
        return {"C0": self.C0, "C1": self.C1, "C2": self.C2, "B2_sup": self.B2_sup,
                "decay_sum": self.decay_sum}


def _shell_radii(r_lo: float, r_hi: float, density: float, anchor: float) -> np.ndarray:
    """Nodes anchor * 10^(i/density) covering [r_lo, r_hi], snapped outward to the lattice."""
    i0 = math.floor(round(math.log10(r_lo / anchor) * density, 9))
    i1 = math.ceil(round(math.log10(r_hi / anchor) * density, 9))
    return anchor * 10.0 ** (np.arange(i0, i1 + 1) / density)


def _shell_sup(F: VectorField, radii: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    pts = radii[None, :, None] * dirs.T[:, None, :]
    vals = F(pts)
    return np.sqrt((vals ** 2).sum(axis=0)).max(axis=-1)


def _radial_constants(spec, geom, radii, dirs):
    sup_tau = _shell_sup(geom.B_tau, radii, dirs)
    sup_dr = _shell_sup(geom.dB_r, radii, dirs)
    c1sq = float(trapezoid(radii ** 3 * sup_tau ** 2, radii))
    c2 = float(trapezoid(radii ** 2 * sup_dr, radii))
    c0 = float((radii ** 2 * _shell_sup(spec.B1, radii, dirs)).max())
    b2 = float(_shell_sup(spec.B2, radii, dirs).max())
    return c0, math.sqrt(c1sq), c2, b2


def _decay_sum(A, j_min, j_max, per_shell, dirs):
    total = 0.0
    for j in range(j_min, j_max + 1):
        radii = np.geomspace(2.0 ** j, 2.0 ** (j + 1), per_shell)
        total += 2.0 ** j * float(_shell_sup(A, radii, dirs).max())
    return total


def compute_constants(spec: FieldSpec, geom: FieldGeometry | None = None,
                      quad: QuadratureSettings | None = None) -> FieldConstants:
    """Shell-sup quadrature of C0, C1, C2, sup|B2| and the decay sum.

    Radii lie on a fixed log lattice anchored at 1, so enlarging the window
    only adds nonnegative panels. A value is reported as +inf when it
    exceeds the divergence threshold or changes by more than
    ``convergence_rtol`` when the window is doubled at both ends.
    """
    quad = quad or QuadratureSettings()
    geom = geom or field_geometry(spec)
    dirs = cube_directions(quad.direction_refinement)
    density = quad.shells_per_decade
    radii = _shell_radii(quad.r_min, quad.r_max, density, 1.0)
    wide = _shell_radii(quad.r_min / 2, quad.r_max * 2, density, 1.0)
    base = _radial_constants(spec, geom, radii, dirs)
    ext = _radial_constants(spec, geom, wide, dirs)

    def settle(v, v_ext):
        if not math.isfinite(v) or v > quad.divergence_threshold:
            return math.inf
        if abs(v_ext - v) > quad.convergence_rtol * max(abs(v), 1e-300) and abs(v_ext - v) > 1e-14:
            return math.inf
        return v

    C0, C1, C2 = (settle(v, w) for v, w in zip(base[:3], ext[:3]))
    # sup|B2| is a plain supremum; a growing B2 is caught by the threshold only
    B2_sup = base[3] if base[3] <= quad.divergence_threshold else math.inf
    if spec.A is None:
        decay = math.nan
    else:
        d = _decay_sum(spec.A, quad.j_min, quad.j_max, quad.radii_per_dyadic_shell, dirs)
        d_ext = _decay_sum(spec.A, quad.j_min - 1, quad.j_max + 1, quad.radii_per_dyadic_shell, dirs)
        decay = settle(d, d_ext)
    return FieldConstants(C0=C0, C1=C1, C2=C2, B2_sup=B2_sup, decay_sum=decay,
                          r_min=float(radii[0]), r_max=float(radii[-1]), n_shells=int(radii.size),
                          n_directions=int(dirs.shape[0]), j_min=quad.j_min, j_max=quad.j_max)


@dataclass(frozen=True)
class AdmissibilityResult:
    verdict: str            # "pass_strict", "pass" or "fail"
    margin: float
    lhs: float
    reasons: tuple[str, ...]


def condition_lhs(C1: float, C2: float) -> float:
    return C1 ** 2 + 3 * C2 + C1 * math.sqrt(C1 ** 2 + 6 * C2)


def admissibility_check(c: FieldConstants, m: float, strict: bool = False) -> AdmissibilityResult:
    """C0 < 1/4, C1^2 + 3C2 + C1 sqrt(C1^2 + 6C2) <= 1 (< 1 if strict), and B2 = 0 when m = 0."""
    reasons = []
    for name in ("C0", "C1", "C2", "B2_sup"):
        v = getattr(c, name)
        if not math.isfinite(v):
            reasons.append(f"{name} is infinite (divergent over the quadrature window)")
    if reasons:
        return AdmissibilityResult("fail", -math.inf, math.inf, tuple(reasons))
    lhs = condition_lhs(c.C1, c.C2)
    margin = 1.0 - lhs
    if not c.C0 < 0.25:
        reasons.append(f"C0 = {c.C0:.6g} is not < 1/4")
    if margin < 0:
        reasons.append(f"C1^2 + 3C2 + C1 sqrt(C1^2 + 6C2) = {lhs:.6g} > 1")
    elif margin == 0 and strict:
        reasons.append("condition holds only with equality but strict was requested")
    if m == 0 and c.B2_sup > 0:
        reasons.append(f"massless case requires B2 = 0, sup|B2| = {c.B2_sup:.6g}")
    if reasons:
        return AdmissibilityResult("fail", margin, lhs, tuple(reasons))
    return AdmissibilityResult("pass_strict" if margin > 0 else "pass", margin, lhs, ())


def lattice_potential(spec: FieldSpec, grid, cutoff_fraction: float = 0.4) -> np.ndarray:
    """Potential sampled on the grid, times the smooth cutoff vanishing beyond cutoff_fraction * L."""
    from .lattice import smooth_cutoff

    if spec.A is None:
        raise NonSolenoidalFieldError(f"field {spec.field_id} has no vector potential")
    A = spec.A(grid.points())
    return A * smooth_cutoff(grid.radius(), cutoff_fraction * grid.L)[None]
