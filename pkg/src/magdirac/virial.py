"""Theta functionals, the four-term virial identity and the momentum bound.

Sign conventions: L = H^2, u_t = -i H u. With

    Theta      = (phi u_t, u_t) + Re((2 phi L - L phi) u, u)
    Theta'     = Re([L, phi] u, u_t)
    Theta''    = -Re([L, phi] u, L u)

and [L, phi] = -(2 grad phi . grad_A + Delta phi), the momentum

    P(t) = Re (u_t, 2 grad phi . grad_A u + Delta phi u) = -Theta'

satisfies  hessian + bilaplacian + tangential + spin + dP/dt = 0  where

    hessian     = 2 int grad_A u D^2 phi conj(grad_A u)
    bilaplacian = -1/2 int |u|^2 Delta^2 phi
    tangential  = 2 Im int (grad phi ^ B) . <u, grad_A u>
    spin        = 2 int <S.(DB grad phi) u, u>
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .fields import FieldConstants, FieldGeometry
from .lattice import (Grid, OperatorHandle, bandlimit, covariant_gradient, dirac_apply, field_jacobian,
                      inner, make_operator, massless_apply, norm2, radial_tangential, real_gradient)
from .multiplier import Multiplier
from .propagator import Trajectory
from .quadrature import point_abs2, refine, sphere_integral_abs2

# coefficient of Im int (grad phi ^ B) . <u, grad_A u>; fixed by the exact discrete check
TANGENTIAL_SIGN = 2.0


class MissingDerivativeError(ValueError):
    pass


class AdmissibilityError(ValueError):
    pass


# ------------------------------------------------------------------ helpers

def spin_density(u: np.ndarray, spin: np.ndarray) -> np.ndarray:
    """<S_k u, u> pointwise, shape (3,) + grid shape (real)."""
    return np.einsum("kij,j...,i...->k...", spin, u, u.conj()).real


def _h3(grid: Grid) -> float:
    return grid.cell_volume


@dataclass(frozen=True, eq=False)
class MultiplierSamples:
    """phi and its derivatives on a grid, plus how to evaluate the bilaplacian."""
    grid: Grid
    phi: np.ndarray
    grad: np.ndarray           # (3,) + shape
    hess: np.ndarray           # (3, 3) + shape
    lap: np.ndarray
    bilap: np.ndarray | None   # classical Delta^2 phi, None for the exact profile
    profile: str
    radial_weights: tuple | None = None   # (phi'', phi'/r) for radial profiles


def periodic_samples(mult: Multiplier, grid: Grid, max_mode: int | None = None) -> MultiplierSamples:
    """Band-limited periodic surrogate of phi_R with exact spectral derivatives.

    Every identity between the four terms and the momentum is then an
    algebraic identity of trigonometric polynomials.
    """
    max_mode = grid.N // 2 - 1 if max_mode is None else max_mode
    phi = bandlimit(mult.phi(grid.radius()), grid, max_mode)
    grad = real_gradient(phi, grid)
    hess = np.stack([real_gradient(g, grid) for g in grad])
    lap = hess[0, 0] + hess[1, 1] + hess[2, 2]
    lap2 = real_gradient(real_gradient(lap, grid)[0], grid)[0] \
        + real_gradient(real_gradient(lap, grid)[1], grid)[1] \
        + real_gradient(real_gradient(lap, grid)[2], grid)[2]
    return MultiplierSamples(grid, phi, grad, hess, lap, lap2, "periodic")


def exact_samples(mult: Multiplier, grid: Grid) -> MultiplierSamples:
    """Piecewise profile; singular weights use max(|x|, h/2)."""
    gm = mult.on_grid(grid)
    r = grid.radius()
    x = grid.offsets()
    with np.errstate(invalid="ignore", divide="ignore"):
        n = np.where(r > 0, x / np.where(r > 0, r, 1.0), 0.0)
    nn = np.einsum("i...,j...->ij...", n, n)
    eye = np.eye(3).reshape((3, 3) + (1,) * 3)
    hess = gm.d2phi * nn + gm.dphi_over_r * (eye - nn)
    return MultiplierSamples(grid, gm.phi, gm.grad, hess, gm.lap, None, "exact", (gm.d2phi, gm.dphi_over_r))


# ------------------------------------------------------------------ theta calculus

@dataclass(frozen=True)
class ThetaSeries:
    times: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray              # Re([L, phi] u, u_t)
    theta_ddot: np.ndarray             # -Re([L, phi] u, L u)
    theta_dot_explicit: np.ndarray     # -Re(2 grad phi . grad_A u + Delta phi u, u_t)
    theta_ddot_explicit: np.ndarray    # sum of the four virial terms


def _L(u, op):
    return dirac_apply(dirac_apply(u, op), op)


def theta_functionals(traj: Trajectory, mult: Multiplier | MultiplierSamples,
                      with_explicit: bool = True) -> ThetaSeries:
    """Theta and its first two derivatives from the discrete operator L = H^2.

    The operator forms are exact consequences of i u_t = H u for any
    diagonal phi; the explicit forms agree with them up to aliasing.
    """
    if traj.dstates is None:
        raise MissingDerivativeError("trajectory carries no time derivatives")
    op = traj.op
    ms = mult if isinstance(mult, MultiplierSamples) else periodic_samples(mult, op.grid)
    phi = ms.phi
    th, thd, thdd, thd_x = [], [], [], []
    for u, ut in zip(traj.states, traj.dstates):
        Lu = _L(u, op)
        Lphiu = _L(phi * u, op)
        comm = Lphiu - phi * Lu
        th.append(inner(phi * ut, ut, op.grid).real + inner(2 * phi * Lu - Lphiu, u, op.grid).real)
        thd.append(inner(comm, ut, op.grid).real)
        thdd.append(-inner(comm, Lu, op.grid).real)
        if with_explicit:
            g = covariant_gradient(u, op)
            w = 2 * np.einsum("k...,kc...->c...", ms.grad, g) + ms.lap * u
            thd_x.append(-inner(w, ut, op.grid).real)
    if with_explicit:
        terms = virial_terms(traj, ms, refine_factor=1).terms.sum(axis=0)
    else:
        terms = np.full(len(th), np.nan)
        thd_x = [np.nan] * len(th)
    return ThetaSeries(traj.times, np.array(th), np.array(thd), np.array(thdd), np.array(thd_x), terms)


def central_difference(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Second-order central differences at interior samples; NaN at both ends."""
    t = np.asarray(times, dtype=float)
    steps = np.diff(t)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ValueError("central differences need uniform time samples")
    out = np.full(values.shape, np.nan)
    out[1:-1] = (values[2:] - values[:-2]) / (2 * steps[0])
    return out


def fd_consistency(series: np.ndarray, derivative: np.ndarray, times: np.ndarray) -> float:
    """max |FD(series) - derivative| / max |derivative| over interior samples."""
    fd = central_difference(series, times)
    scale = np.abs(derivative).max()
    if scale == 0:
        return float(np.nanmax(np.abs(fd[1:-1])))
    return float(np.nanmax(np.abs(fd[1:-1] - derivative[1:-1])) / scale)


# ------------------------------------------------------------------ virial terms

TERM_NAMES = ("hessian", "bilaplacian", "tangential", "spin")


@dataclass(frozen=True)
class VirialReport:
    times: np.ndarray
    terms: np.ndarray          # (4, nt) in TERM_NAMES order
    momentum: np.ndarray
    dmomentum: np.ndarray      # central differences, NaN at the ends
    scale: np.ndarray
    residual: np.ndarray       # NaN at the ends
    radial_form_residual: float
    meta: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    @property
    def lhs(self) -> np.ndarray:
        return self.terms.sum(axis=0)

    def max_residual(self) -> float:
        return float(np.nanmax(self.residual))

    def rows(self):
        for i, t in enumerate(self.times):
            yield {"time": t, **{n: self.terms[k, i] for k, n in enumerate(TERM_NAMES)},
                   "momentum": self.momentum[i], "dmomentum": self.dmomentum[i],
                   "scale": self.scale[i], "residual": self.residual[i]}


def _refined_operator(op: OperatorHandle, factor: int) -> OperatorHandle:
    if factor == 1:
        return op
    A, fine = refine(op.A, op.grid, factor)
    return make_operator(fine, A=A, m=op.m, basis=op.basis, spin=op.spin)


def _term_values(u, ut, op, ms: MultiplierSamples, DB, distributional=None):
    g = covariant_gradient(u, op)
    h3 = _h3(op.grid)
    if ms.radial_weights is not None:
        # phi'' |grad_A^r u|^2 + phi'/r |grad_A^tau u|^2
        rad, tan = radial_tangential(g, op.grid)
        d2, d1r = ms.radial_weights
        hess = 2 * h3 * float((d2 * (np.abs(rad) ** 2).sum(axis=0)
                               + d1r * (np.abs(tan) ** 2).sum(axis=(0, 1))).sum())
    else:
        hess = 2 * h3 * np.einsum("ijxyz,icxyz,jcxyz->", ms.hess, g, g.conj()).real
    if ms.bilap is not None:
        bilap = -0.5 * h3 * float((ms.bilap * (np.abs(u) ** 2).sum(axis=0)).sum())
    else:
        bilap = distributional
    cross = np.cross(ms.grad, op.B, axis=0)
    tang = TANGENTIAL_SIGN * h3 * np.einsum("jxyz,cxyz,jcxyz->", cross, u, g.conj()).imag
    DBg = np.einsum("ij...,j...->i...", DB, ms.grad)
    spin = 2 * h3 * float((DBg * spin_density(u, op.spin)).sum())
    w = 2 * np.einsum("k...,kc...->c...", ms.grad, g) + ms.lap * u
    momentum = inner(ut, w, op.grid).real
    return (hess, bilap, tang, spin), momentum


def virial_terms(traj: Trajectory, mult: Multiplier | MultiplierSamples,
                 geometry: FieldGeometry | None = None, profile: str = "periodic",
                 refine_factor: int = 2, cutoff_fraction: float = 0.4) -> VirialReport:
    """Evaluate the four virial terms, the momentum and the residual series.

    ``profile="periodic"`` uses the band-limited surrogate of phi_R on the
    (optionally zero-padded) grid; ``profile="exact"`` uses the piecewise
    profile with the bilaplacian as 4 pi M |u(0)|^2 + (1/2R^2) int_{|x|=R} |u|^2.
    """
    if traj.dstates is None:
        raise MissingDerivativeError("trajectory carries no time derivatives")
    op0 = traj.op
    op = _refined_operator(op0, refine_factor)
    grid = op.grid
    notes = []
    if isinstance(mult, MultiplierSamples):
        ms, mobj = mult, None
        if ms.grid != grid:
            raise ValueError("multiplier samples live on a different grid")
    else:
        mobj = mult
        if profile == "periodic":
            ms = periodic_samples(mult, grid)
        elif profile == "exact":
            ms = exact_samples(mult, grid)
        else:
            raise ValueError(f"unknown multiplier profile {profile!r}")
        if mult.R >= cutoff_fraction * grid.L:
            notes.append(f"R = {mult.R} lies in the cutoff zone (>= {cutoff_fraction} L)")
    DB = field_jacobian(op.B, grid)

    if mobj is not None and ms.bilap is None:
        point = lambda u: 4 * math.pi * mobj.M * point_abs2(u, op0.grid) if mobj.M else 0.0
        sphere = lambda u: sphere_integral_abs2(u, op0.grid, mobj.R) / (2 * mobj.R ** 2)
    else:
        point = sphere = None

    terms, mom = [], []
    for u, ut in zip(traj.states, traj.dstates):
        # interpolation is exact, so the distributional pieces use the coarse samples
        dist = point(u) + sphere(u) if point is not None else None
        if refine_factor != 1:
            u = refine(u, op0.grid, refine_factor)[0]
            ut = refine(ut, op0.grid, refine_factor)[0]
        vals, p = _term_values(u, ut, op, ms, DB, dist)
        terms.append(vals)
        mom.append(p)
    terms = np.array(terms).T
    mom = np.array(mom)
    dmom = central_difference(mom, traj.times) if traj.times.size >= 3 else np.full(mom.shape, np.nan)
    f = traj.states[0]
    energy = norm2(massless_apply(f, op0), op0.grid)
    scale = np.maximum(np.abs(terms).max(axis=0), energy)
    residual = np.abs(terms.sum(axis=0) + dmom) / np.where(scale > 0, scale, 1.0)

    radial_form = radial_form_check(traj.states[0], op0, mobj, geometry) if (geometry is not None and mobj) else math.nan
    for n in notes:
        warnings.warn(n, RuntimeWarning)
    meta = {"profile": ms.profile, "refine_factor": refine_factor, "grid_N": op0.grid.N, "grid_L": op0.grid.L,
            "mass": op0.m}
    if mobj is not None:
        meta.update(R=mobj.R, M=mobj.M)
    return VirialReport(times=traj.times, terms=terms, momentum=mom, dmomentum=dmom, scale=scale,
                        residual=residual, radial_form_residual=radial_form, meta=meta, warnings=tuple(notes))


def radial_form_check(u: np.ndarray, op: OperatorHandle, mult: Multiplier, geometry: FieldGeometry) -> float:
    """|2 int phi' <S.d_rB u, u> - 2 int <S.(DB grad phi) u, u>| / scale, with the
    field geometry's finite differences on both sides (origin excluded)."""
    grid = op.grid
    x = grid.points()
    r = grid.radius()
    mask = r > 0
    xs = x[:, mask]
    rs = r[mask]
    dphi = mult.dphi(rs)
    grad = dphi * (grid.offsets()[:, mask] / rs)
    dens = spin_density(u, op.spin)[:, mask]
    DB = geometry.DB(xs)
    full = 2 * grid.cell_volume * float((np.einsum("ij...,j...->i...", DB, grad) * dens).sum())
    radial = 2 * grid.cell_volume * float((dphi * geometry.dB_r(xs) * dens).sum())
    scale = max(abs(full), abs(radial), norm2(massless_apply(u, op), grid), 1e-300)
    return abs(full - radial) / scale


# ------------------------------------------------------------------ momentum bound

@dataclass(frozen=True)
class MomentumBoundReport:
    times: np.ndarray
    momentum: np.ndarray           # |P(t)|
    young_bound: np.ndarray        # 3/2||D_A u||^2 + ||grad phi.grad_A u||^2 + 1/2||u Delta phi||^2
    chain_bound: np.ndarray        # chain_constant * ||D_A u||^2 (B2 = 0), general form otherwise
    displayed_bound: np.ndarray    # 3/2 + (M + 1/2)/eps + 2(1 + 2M)/eps, unsquared constants
    epsilon: float
    chain_constant: float
    displayed_constant: float

    @property
    def margin(self) -> np.ndarray:
        return self.chain_bound - self.momentum

    @property
    def young_margin(self) -> np.ndarray:
        return self.young_bound - self.momentum

    @property
    def displayed_margin(self) -> np.ndarray:
        return self.displayed_bound - self.momentum


def rhs_bound_check(traj: Trajectory, mult: Multiplier, constants: FieldConstants) -> MomentumBoundReport:
    """Compare |P(t)| with the Young bound and the Hardy chain with eps = 1 - 4 C0.

    The chain uses the squared pointwise bounds phi' <= M + 1/2 and
    |Delta phi| <= (1 + 2M)/|x| together with 1/4 int |u|^2/|x|^2 <= int |grad_A u|^2.
    """
    if not constants.C0 < 0.25:
        raise AdmissibilityError(f"C0 = {constants.C0:.6g} must be < 1/4 for eps = 1 - 4 C0 > 0")
    op = traj.op
    if op.m == 0 and constants.B2_sup > 0:
        raise AdmissibilityError("massless momentum bound requires B2 = 0")
    eps = 1.0 - 4.0 * constants.C0
    M = mult.M
    b2 = constants.B2_sup / op.m ** 2 if op.m else 0.0
    ms = exact_samples(mult, op.grid)
    chain_c = 1.5 + ((M + 0.5) ** 2 + 2 * (1 + 2 * M) ** 2) / eps
    shown_c = 1.5 + ((M + 0.5) + 2 * (1 + 2 * M)) / eps
    mom, young, chain, shown = [], [], [], []
    for u, ut in zip(traj.states, traj.dstates):
        g = covariant_gradient(u, op)
        dg = np.einsum("k...,kc...->c...", ms.grad, g)
        w = 2 * dg + ms.lap * u
        mom.append(abs(inner(ut, w, op.grid).real))
        e = norm2(massless_apply(u, op), op.grid)
        young.append(1.5 * e + norm2(dg, op.grid) + 0.5 * norm2(ms.lap * u, op.grid))
        mass = op.m ** 2 * norm2(u, op.grid)
        grad_bound = ((1 + b2) * (e + mass) - mass) / eps
        chain.append(1.5 * e + ((M + 0.5) ** 2 + 2 * (1 + 2 * M) ** 2) * grad_bound)
        shown.append(1.5 * e + ((M + 0.5) + 2 * (1 + 2 * M)) * grad_bound)
    return MomentumBoundReport(traj.times, np.array(mom), np.array(young), np.array(chain), np.array(shown),
                               eps, chain_c, shown_c)
