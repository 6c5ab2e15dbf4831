"""Local smoothing norms, the magnetic Hardy inequality and Strichartz sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.ndimage import map_coordinates

from .fields import FieldConstants
from .lattice import (Grid, OperatorHandle, covariant_gradient, dirac_apply, field_matrix_apply, from_fourier,
                      massless_apply, norm2, radial_tangential, to_fourier)
from .propagator import Trajectory
from .quadrature import sphere_rule


class AdmissibilityRelationError(ValueError):
    """Exponent pair outside the requested admissible class."""


class HardyInputError(ValueError):
    pass


# ------------------------------------------------------------------ smoothing

def dyadic_radii(grid: Grid, fraction: float = 0.4) -> np.ndarray:
    """2^j h for j = 0, 1, ... up to fraction * L."""
    out = []
    R = grid.h
    while R <= fraction * grid.L * (1 + 1e-12):
        out.append(R)
        R *= 2.0
    return np.array(out)


def sphere_abs2_spline(u: np.ndarray, grid: Grid, radius: float, rule=None) -> float:
    """int_{|x|=R} |u|^2 with periodic cubic-spline sampling of each component."""
    dirs, w = rule or sphere_rule()
    coords = (radius * dirs.T) / grid.h + grid.N / 2
    dens = np.zeros(dirs.shape[0])
    for comp in u:
        for part in (comp.real, comp.imag):
            dens += map_coordinates(part, coords, order=3, mode="grid-wrap") ** 2
    return float(radius ** 2 * np.dot(dens, w))


@dataclass(frozen=True)
class SmoothingReport:
    radii: np.ndarray
    horizons: np.ndarray
    X: np.ndarray              # (n_T, n_R): (1/R) int_0^T int_{|x|<=R} |u|^2
    Y: np.ndarray              # (n_T, n_R): (1/R^2) int_0^T int_{|x|=R} |u|^2
    X_grad: np.ndarray         # (n_T, n_R): (1/R) int_0^T int_{|x|<=R} |grad_A u|^2
    tangential: np.ndarray     # (n_T,): int_0^T int |grad_A^tau u|^2 / |x|
    center: np.ndarray         # (n_T,): int_0^T |u(t, center)|^2 dt
    f_norm2: float
    energy2: float             # ||H f||^2

    @property
    def sup_X(self) -> np.ndarray:
        return self.X.max(axis=1)

    @property
    def sup_Y(self) -> np.ndarray:
        return self.Y.max(axis=1)

    @property
    def ratio_X(self) -> np.ndarray:
        return self.sup_X / self.f_norm2 if self.f_norm2 > 0 else np.zeros_like(self.sup_X)

    @property
    def ratio_gradient(self) -> np.ndarray:
        tot = self.X_grad.max(axis=1) + self.sup_Y + self.tangential
        return tot / self.energy2 if self.energy2 > 0 else np.zeros_like(tot)

    def rows(self):
        for i, T in enumerate(self.horizons):
            yield {"T": T, "sup_X": self.sup_X[i], "sup_Y": self.sup_Y[i], "sup_X_grad": self.X_grad[i].max(),
                   "tangential": self.tangential[i], "center": self.center[i], "ratio_X": self.ratio_X[i],
                   "ratio_gradient": self.ratio_gradient[i]}


def _cumulative(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid along axis 0, starting at 0."""
    out = np.zeros_like(values)
    dt = np.diff(times).reshape((-1,) + (1,) * (values.ndim - 1))
    out[1:] = np.cumsum(0.5 * dt * (values[1:] + values[:-1]), axis=0)
    return out


def smoothing_norms(traj: Trajectory, horizons=None, radii=None, with_sphere: bool = True) -> SmoothingReport:
    """Time-integrated local norms on the dyadic radius set.

    ``horizons`` must be trajectory sample times (default: the final time).
    """
    grid, op = traj.grid, traj.op
    t = traj.times
    horizons = np.array([t[-1]] if horizons is None else horizons, dtype=float)
    idx = []
    for T in horizons:
        hit = np.nonzero(np.isclose(t, T, rtol=0, atol=1e-9 * max(1.0, abs(T))))[0]
        if hit.size == 0:
            raise ValueError(f"horizon {T} is not a trajectory sample time")
        idx.append(int(hit[0]))
    radii = dyadic_radii(grid) if radii is None else np.asarray(radii, dtype=float)
    r = grid.radius()
    rr = grid.regularized_radius()
    balls = [r <= R for R in radii]
    h3 = grid.cell_volume
    ball, sph, gball, tang, cen = [], [], [], [], []
    mid = (slice(None),) + (grid.N // 2,) * 3
    for u in traj.states:
        dens = (np.abs(u) ** 2).sum(axis=0)
        g = covariant_gradient(u, op)
        gd = (np.abs(g) ** 2).sum(axis=(0, 1))
        _, tg = radial_tangential(g, grid)
        ball.append([h3 * dens[b].sum() for b in balls])
        gball.append([h3 * gd[b].sum() for b in balls])
        sph.append([sphere_abs2_spline(u, grid, R) if with_sphere else 0.0 for R in radii])
        tang.append(h3 * float(((np.abs(tg) ** 2).sum(axis=(0, 1)) / rr).sum()))
        cen.append(float((np.abs(u[mid]) ** 2).sum()))
    cb, cs, cg, ct, cc = (_cumulative(np.array(a), t) for a in (ball, sph, gball, tang, cen))
    X = cb[idx] / radii
    Y = cs[idx] / radii ** 2
    Xg = cg[idx] / radii
    f = traj.states[0]
    return SmoothingReport(radii=radii, horizons=horizons, X=X, Y=Y, X_grad=Xg, tangential=ct[idx], center=cc[idx],
                           f_norm2=norm2(f, grid), energy2=norm2(dirac_apply(f, op), grid))


# ------------------------------------------------------------------ Hardy

@dataclass(frozen=True)
class HardyReport:
    mass_term: float
    weighted_term: float          # ((1 - eps)/4 - C0) int |f|^2 / |x|^2
    gradient_term: float          # eps ||grad_A f||^2
    rhs: float                    # (1 + sup|B2|/m^2) ||H f||^2
    identity_residual: float      # | ||D_A f||^2 - ||grad_A f||^2 + 2 (S.B f, f) | / scale
    displayed_sign_residual: float  # same with +2 (S.B f, f)
    classical_margin: float       # ||grad_A f||^2 - 1/4 int |f|^2/|x|^2
    epsilon: float

    @property
    def lhs(self) -> float:
        return self.mass_term + self.weighted_term + self.gradient_term

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def verdict(self) -> str:
        return "pass" if self.margin >= 0 else "fail"


def hardy_check(f: np.ndarray, op: OperatorHandle, constants: FieldConstants, eps: float) -> HardyReport:
    """Evaluate each term of the magnetic Hardy-type inequality for the Dirac energy.

    The 1/|x|^2 weight uses the regularized radius max(|x|, h/2).
    """
    if not 0 < eps < 1:
        raise HardyInputError(f"epsilon must lie in (0, 1), got {eps}")
    m = op.m
    if m == 0 and constants.B2_sup > 0:
        raise HardyInputError("massless Hardy check requires B2 = 0")
    grid = op.grid
    f2 = norm2(f, grid)
    w = grid.regularized_radius() ** -2
    weighted = grid.cell_volume * float((w * (np.abs(f) ** 2).sum(axis=0)).sum())
    g2 = norm2(covariant_gradient(f, op), grid)
    d2 = norm2(massless_apply(f, op), grid)
    sb = grid.cell_volume * np.vdot(f, field_matrix_apply(op.S_dot_B, f)).real
    Hf2 = norm2(dirac_apply(f, op), grid)
    factor = 1.0 + (constants.B2_sup / m ** 2 if m else 0.0)
    scale = max(g2, abs(d2), 1e-300)
    return HardyReport(mass_term=m ** 2 * f2,
                       weighted_term=((1 - eps) / 4 - constants.C0) * weighted,
                       gradient_term=eps * g2,
                       rhs=factor * Hf2,
                       identity_residual=abs(d2 - g2 + 2 * sb) / scale,
                       displayed_sign_residual=abs(d2 - g2 - 2 * sb) / scale,
                       classical_margin=g2 - 0.25 * weighted,
                       epsilon=eps)


# ------------------------------------------------------------------ Strichartz

@dataclass(frozen=True)
class StrichartzReport:
    p: float
    q: float
    admissibility: str          # "wave" or "schrodinger"
    s: float
    horizon: float
    mixed_norm: float
    f_norm: float

    @property
    def ratio(self) -> float:
        return self.mixed_norm / self.f_norm if self.f_norm > 0 else 0.0


def _inv(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def check_admissible(p: float, q: float, kind: str) -> None:
    """Raise AdmissibilityRelationError naming the violated relation."""
    ip, iq = _inv(p), _inv(q)
    if kind == "wave":
        if not abs(2 * ip + 2 * iq - 1) < 1e-12:
            raise AdmissibilityRelationError(
                f"({p}, {q}) is not wave admissible: 2/p + 2/q = {2 * ip + 2 * iq:.6g} != 1")
        if not p > 2:
            raise AdmissibilityRelationError(f"({p}, {q}) is not wave admissible: need 2 < p <= inf")
    elif kind == "schrodinger":
        if not abs(2 * ip + 3 * iq - 1.5) < 1e-12:
            raise AdmissibilityRelationError(
                f"({p}, {q}) is not Schrodinger admissible: 2/p + 3/q = {2 * ip + 3 * iq:.6g} != 3/2")
        if not (p >= 2 and 2 <= q <= 6):
            raise AdmissibilityRelationError(
                f"({p}, {q}) is not Schrodinger admissible: need 2 <= p <= inf and 2 <= q <= 6")
    else:
        raise ValueError(f"unknown admissibility class {kind!r}")


def sobolev_image(u: np.ndarray, grid: Grid, s: float, homogeneous: bool) -> np.ndarray:
    """|D|^s u (zero mode dropped) or (1 + |k|^2)^{s/2} u, as a Fourier multiplier."""
    k2 = (grid.kvectors() ** 2).sum(axis=0)
    if homogeneous:
        with np.errstate(divide="ignore"):
            mult = np.where(k2 > 0, k2 ** (0.5 * s), 0.0)
    else:
        mult = (1.0 + k2) ** (0.5 * s)
    return from_fourier(to_fourier(u) * mult)


def lq_norm(u: np.ndarray, grid: Grid, q: float) -> float:
    mod = np.sqrt((np.abs(u) ** 2).sum(axis=0))
    if math.isinf(q):
        return float(mod.max())
    return float((grid.cell_volume * (mod ** q).sum()) ** (1.0 / q))


def strichartz_ratio(traj: Trajectory, p: float, q: float, m: float | None = None,
                     horizon: float | None = None) -> StrichartzReport:
    """Mixed norm ||u||_{L^p_t([0,T]) H^s_q} / ||f||_2 with s = 1/q - 1/p - 1/2.

    The class is wave for m = 0 (homogeneous |D|^s) and Schrodinger
    otherwise (inhomogeneous (1 + |D|^2)^{s/2}).
    """
    m = traj.op.m if m is None else m
    kind = "wave" if m == 0 else "schrodinger"
    check_admissible(p, q, kind)
    s = _inv(q) - _inv(p) - 0.5
    t = traj.times
    n = t.size if horizon is None else int(np.searchsorted(t, horizon + 1e-12))
    if n < 1:
        raise ValueError("horizon precedes the first sample")
    grid = traj.grid
    vals = np.array([lq_norm(sobolev_image(u, grid, s, kind == "wave") if s != 0 else u, grid, q)
                     for u in traj.states[:n]])
    if math.isinf(p):
        mixed = float(vals.max())
    elif n == 1:
        mixed = 0.0
    else:
        mixed = float(trapezoid(vals ** p, t[:n]) ** (1.0 / p))
    f_norm = math.sqrt(norm2(traj.states[0], grid))
    return StrichartzReport(p=p, q=q, admissibility=kind, s=s, horizon=float(t[n - 1]),
                            mixed_norm=mixed, f_norm=f_norm)
