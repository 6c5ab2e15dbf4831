"""Fixed field x datum batteries shared by the verification suite and the tests."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import FieldSpec, compute_constants, example_field, field_geometry, lattice_potential
from .lattice import (Grid, OperatorHandle, bandlimit, commutator_identity_residual, dirac_apply,
                      gaussian_spinor, make_operator, random_spinor, square_identity_residual)
from .multiplier import make_multiplier
from .norms import hardy_check
from .propagator import Trajectory
from .virial import periodic_samples, theta_functionals

BATTERY_FIELDS = {
    "constant": ("constant", {"b": 0.5}),
    "decaying": ("decaying", {"a": 0.3, "w": 1.5}),
    "perturbed_ex2": ("perturbed_ex2", {"epsilon": 0.5, "delta": 1.0}),
}
BATTERY_DATA = ("gaussian", "moving", "random")


@dataclass(frozen=True)
class BatteryEntry:
    field: str
    datum: str
    values: tuple[float, ...]


def battery_field(name: str) -> FieldSpec:
    kind, params = BATTERY_FIELDS[name]
    return example_field(kind, params)


def battery_datum(name: str, grid: Grid, seed: int = 7) -> np.ndarray:
    if name == "gaussian":
        return gaussian_spinor(grid, 1.5, spinor=(1, 0, 0.5, 0))
    if name == "moving":
        return gaussian_spinor(grid, 1.2, offset=(0.5, -0.3, 0.2), spinor=(0.3, 1j, 0, 0.8), momentum=(0.6, 0, -0.4))
    if name == "random":
        return random_spinor(grid, np.random.default_rng(seed))
    raise KeyError(name)


def battery_operator(field: str, grid: Grid, m: float = 1.0, bandlimited: bool = True,
                     max_mode: int | None = None, spin=None) -> OperatorHandle:
    A = lattice_potential(battery_field(field), grid)
    if bandlimited:
        A = bandlimit(A, grid, max_mode)
    return make_operator(grid, A=A, m=m, spin=spin)


def square_battery(N: int = 16, L: float = 12.0, compliant: bool = True, spin=None) -> list[BatteryEntry]:
    """H^2 u against (m^2 - Delta_A - 2 S.B) u; compliant members band-limit A and u to N/4 - 1."""
    grid = Grid(N, L)
    out = []
    for fname in BATTERY_FIELDS:
        op = battery_operator(fname, grid, bandlimited=compliant, spin=spin)
        for dname in BATTERY_DATA:
            u = battery_datum(dname, grid)
            if compliant:
                u = bandlimit(u, grid)
            out.append(BatteryEntry(fname, dname, (square_identity_residual(u, op),)))
    return out


def commutator_battery(N: int = 16, L: float = 12.0, R: float = 2.0, M: float = 0.1, spin=None) -> list[BatteryEntry]:
    """Residuals of [H^2, phi], 2[S.B, [Delta_A, phi]], the four-term double commutator
    and the radial form DB grad phi = phi' d_r B, for each field x datum.

    phi is the mollified multiplier (width 2h) band-limited to N/8 together
    with the data, and A to N/16, so every product is alias free.
    """
    grid = Grid(N, L)
    mode = N // 8
    mult = make_multiplier(R, M, s=2 * grid.h)
    ms = periodic_samples(mult, grid, mode)
    out = []
    for fname in BATTERY_FIELDS:
        op = battery_operator(fname, grid, max_mode=max(1, N // 16), spin=spin)
        for dname in BATTERY_DATA:
            u = bandlimit(battery_datum(dname, grid), grid, mode)
            r1, r2 = commutator_identity_residual(u, op, ms.phi, ms.grad, ms.lap)
            ut = -1j * dirac_apply(u, op)
            traj = Trajectory(np.array([0.0]), u[None], ut[None], "single", op)
            th = theta_functionals(traj, ms)
            r3 = abs(th.theta_ddot[0] - th.theta_ddot_explicit[0]) / max(abs(th.theta_ddot[0]), 1e-300)
            out.append(BatteryEntry(fname, dname, (r1, r2, r3)))
    return out


def radial_form_battery(n_points: int = 200, seed: int = 3, R: float = 2.0, M: float = 0.1) -> dict[str, float]:
    """max |DB grad phi - phi' d_r B| / max |DB grad phi| at sample points, per field."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((3, n_points))
    x *= rng.uniform(0.2, 5.0, n_points) / np.linalg.norm(x, axis=0)
    mult = make_multiplier(R, M)
    r = np.linalg.norm(x, axis=0)
    dphi = mult.dphi(r)
    out = {}
    for fname in BATTERY_FIELDS:
        geom = field_geometry(battery_field(fname))
        full = np.einsum("ij...,j...->i...", geom.DB(x), dphi * x / r)
        radial = dphi * geom.dB_r(x)
        scale = max(np.abs(full).max(), 1e-300)
        out[fname] = float(np.abs(full - radial).max() / scale)
    return out


def hardy_battery_members():
    """(field name, FieldSpec) pairs with 0 < C0 < 1/4 used for the Hardy checks."""
    return [("decaying_wide", example_field("decaying", {"a": 0.1, "w": 1.5})),
            ("perturbed_ex2", example_field("perturbed_ex2", {"epsilon": 1.0, "delta": 1.0})),
            ("decaying_weak", example_field("decaying", {"a": 0.1, "w": 1.0}))]


def hardy_battery(N: int = 16, L: float = 12.0, m: float = 1.0, spin=None) -> list[BatteryEntry]:
    """(identity residual, inequality margin, eps) with eps = 1 - 4 C0 for every member x datum.

    A and the data are band-limited to N/4 - 1 so the discrete identity is exact.
    """
    grid = Grid(N, L)
    out = []
    for fname, spec in hardy_battery_members():
        consts = compute_constants(spec)
        op = make_operator(grid, A=bandlimit(lattice_potential(spec, grid), grid), m=m, spin=spin)
        eps = 1.0 - 4.0 * consts.C0
        for dname in BATTERY_DATA:
            f = bandlimit(battery_datum(dname, grid), grid)
            rep = hardy_check(f, op, consts, eps)
            out.append(BatteryEntry(fname, dname, (rep.identity_residual, rep.margin, eps)))
    return out
