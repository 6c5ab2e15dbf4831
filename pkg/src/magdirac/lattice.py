"""Fourier spectral discretisation of the magnetic Dirac operator on a periodic box.

A spinor field is an array of shape ``(4, N, N, N)``; scalar fields are
``(N, N, N)`` and vector fields ``(3, N, N, N)``. Grid point ``j`` on each
axis sits at ``center + (j - N/2) h`` so the box center is itself a node.

Derivatives use the symmetric wavenumber set: the Nyquist mode is given
wavenumber 0 for every first derivative, and second-order operators are
built by composing first derivatives, so discrete integration by parts is
exact and every operator below is Hermitian for the discrete L2 product.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import fft

from .algebra import DiracBasis, build_dirac_basis, spin_operator


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    N: int
    L: float
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 4 or self.N % 2:
            raise ValueError(f"grid.N must be an even integer >= 4, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"grid.L must be positive, got {self.L}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.N, self.N, self.N)

    @property
    def cell_volume(self) -> float:
        return self.h ** 3

    def axis(self) -> np.ndarray:
        """Node offsets from the center along one axis."""
        return (np.arange(self.N) - self.N // 2) * self.h

    def offsets(self) -> np.ndarray:
        """(3, N, N, N) array of node positions relative to the center."""
        a = self.axis()
        return np.stack(np.meshgrid(a, a, a, indexing="ij"))

    def points(self) -> np.ndarray:
        """(3, N, N, N) array of absolute node positions."""
        return self.offsets() + np.asarray(self.center)[:, None, None, None]

    def radius(self) -> np.ndarray:
        return np.sqrt((self.offsets() ** 2).sum(axis=0))

    def regularized_radius(self) -> np.ndarray:
        """|x - center| floored at h/2; the single regularisation used for singular weights."""
        return np.maximum(self.radius(), 0.5 * self.h)

    def wavenumbers(self) -> np.ndarray:
        """1-D symmetric wavenumber set (Nyquist entry set to zero)."""
        k = fft.fftfreq(self.N, d=self.h) * 2.0 * np.pi
        k[self.N // 2] = 0.0
        return k

    def kvectors(self) -> np.ndarray:
        k = self.wavenumbers()
        return np.stack(np.meshgrid(k, k, k, indexing="ij"))

    def mode_indices(self) -> np.ndarray:
        """Integer mode numbers in FFT order, Nyquist included as -N/2."""
        return np.rint(fft.fftfreq(self.N) * self.N).astype(int)


def _spatial_axes(arr: np.ndarray) -> tuple[int, int, int]:
    return (arr.ndim - 3, arr.ndim - 2, arr.ndim - 1)


def to_fourier(arr: np.ndarray) -> np.ndarray:
    return fft.fftn(arr, axes=_spatial_axes(arr))


def from_fourier(arr_hat: np.ndarray) -> np.ndarray:
    return fft.ifftn(arr_hat, axes=_spatial_axes(arr_hat))


def gradient(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectral gradient; returns shape ``(3,) + u.shape``."""
    u_hat = to_fourier(u)
    kv = grid.kvectors()
    return np.stack([from_fourier(1j * kv[j] * u_hat) for j in range(3)])


def partial(u: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    k = grid.wavenumbers()
    shape = [1, 1, 1]
    shape[axis] = grid.N
    return from_fourier(1j * k.reshape(shape) * to_fourier(u))


def laplacian(u: np.ndarray, grid: Grid) -> np.ndarray:
    k2 = (grid.kvectors() ** 2).sum(axis=0)
    return from_fourier(-k2 * to_fourier(u))


def real_gradient(f: np.ndarray, grid: Grid) -> np.ndarray:
    return gradient(f, grid).real


def curl(A: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectral curl of a real vector field."""
    d = lambda comp, ax: partial(A[comp], grid, ax).real
    return np.stack([d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)])


def divergence(A: np.ndarray, grid: Grid) -> np.ndarray:
    return sum(partial(A[j], grid, j).real for j in range(3))


def bandlimit(arr: np.ndarray, grid: Grid, max_mode: int | None = None) -> np.ndarray:
    """Zero every Fourier mode with |n| > max_mode along any axis.

    The default ``max_mode = N/4 - 1`` makes pointwise products of two
    band-limited fields alias free, so the discrete product rule is exact.
    """
    if max_mode is None:
        max_mode = grid.N // 4 - 1
    n = np.abs(grid.mode_indices())
    keep1 = n <= max_mode
    mask = keep1[:, None, None] & keep1[None, :, None] & keep1[None, None, :]
    out = from_fourier(to_fourier(arr) * mask)
    return out.real if np.isrealobj(arr) else out


def inner(u: np.ndarray, v: np.ndarray, grid: Grid) -> complex:
    """Discrete L2 product (u, v) = h^3 sum u . conj(v)."""
    return complex(np.vdot(v, u) * grid.cell_volume)


def norm2(u: np.ndarray, grid: Grid) -> float:
    """Squared discrete L2 norm."""
    return float(np.vdot(u, u).real * grid.cell_volume)


def norm(u: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt(norm2(u, grid)))


def norm2_fourier(u: np.ndarray, grid: Grid) -> float:
    """Squared L2 norm computed from Fourier coefficients (Parseval)."""
    u_hat = to_fourier(u)
    return float((np.abs(u_hat) ** 2).sum() * grid.cell_volume / grid.N ** 3)


def matrix_apply(M: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Apply a constant 4x4 matrix to a spinor field."""
    return np.einsum("ij,j...->i...", M, u)


def field_matrix_apply(M: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Apply a pointwise 4x4 matrix field of shape (4, 4, N, N, N)."""
    return np.einsum("ij...,j...->i...", M, u)


def sample_vector_field(func: Callable[[np.ndarray], np.ndarray], grid: Grid) -> np.ndarray:
    """Evaluate ``func`` (maps (3, ...) points to (3, ...) values) on the grid nodes."""
    return np.asarray(func(grid.points()), dtype=float)


@dataclass(frozen=True, eq=False)
class OperatorHandle:
    """Immutable discretised H = -i alpha.(grad - iA) + m beta on a grid."""

    grid: Grid
    A: np.ndarray
    m: float
    basis: DiracBasis
    B: np.ndarray
    spin: np.ndarray = field(repr=False)

    @property
    def S_dot_B(self) -> np.ndarray:
        """Pointwise matrix field S.B of shape (4, 4, N, N, N)."""
        return np.einsum("kij,k...->ij...", self.spin, self.B)

    def with_mass(self, m: float) -> "OperatorHandle":
        return OperatorHandle(self.grid, self.A, float(m), self.basis, self.B, self.spin)


def make_operator(grid: Grid, A=None, m: float = 0.0, bandlimited: bool = False,
                  basis: DiracBasis | None = None, spin: np.ndarray | None = None) -> OperatorHandle:
    """Build an operator handle.

    ``A`` may be None (free operator), a ``(3, N, N, N)`` array, or a callable
    evaluated at the grid nodes. B is always the spectral curl of the
    (possibly band-limited) sampled potential, so the two stay consistent.
    """
    basis = basis or build_dirac_basis()
    if A is None:
        A_arr = np.zeros((3,) + grid.shape)
    elif callable(A):
        A_arr = sample_vector_field(A, grid)
    else:
        A_arr = np.asarray(A, dtype=float)
    if A_arr.shape != (3,) + grid.shape:
        raise GridMismatchError(f"A has shape {A_arr.shape}, grid needs {(3,) + grid.shape}")
    if not np.all(np.isfinite(A_arr)):
        raise ValueError("vector potential has non-finite samples")
    if bandlimited:
        A_arr = bandlimit(A_arr, grid)
    B = curl(A_arr, grid)
    S = spin_operator(basis) if spin is None else spin
    return OperatorHandle(grid=grid, A=A_arr, m=float(m), basis=basis, B=B, spin=S)


def _check(u: np.ndarray, op: OperatorHandle):
    if u.shape != (4,) + op.grid.shape:
        raise GridMismatchError(f"spinor shape {u.shape} does not match grid {(4,) + op.grid.shape}")


def covariant_partial(u: np.ndarray, op: OperatorHandle, axis: int) -> np.ndarray:
    return partial(u, op.grid, axis) - 1j * op.A[axis] * u


def covariant_gradient(u: np.ndarray, op: OperatorHandle) -> np.ndarray:
    """(grad - iA) u, shape ``(3,) + u.shape``."""
    _check(u, op)
    return gradient(u, op.grid) - 1j * op.A[(slice(None), None)] * u[None]


def radial_tangential(grad_u: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Split a gradient into radial part x/|x|.grad u and tangential remainder.

    The center node has no direction; there both parts are set so that the
    radial part is zero and the tangential part is the full gradient.
    """
    x = grid.offsets()
    r = grid.radius()
    with np.errstate(invalid="ignore", divide="ignore"):
        n = np.where(r > 0, x / np.where(r > 0, r, 1.0), 0.0)
    radial = np.einsum("k...,kc...->c...", n, grad_u)
    tangential = grad_u - n[:, None] * radial[None]
    return radial, tangential


def alpha_dot_grad(u: np.ndarray, op: OperatorHandle) -> np.ndarray:
    """alpha . grad_A u."""
    g = covariant_gradient(u, op)
    return sum(matrix_apply(a, g[k]) for k, a in enumerate(op.basis.alpha))


def massless_apply(u: np.ndarray, op: OperatorHandle) -> np.ndarray:
    """D_A u = -i alpha . grad_A u."""
    return -1j * alpha_dot_grad(u, op)


def dirac_apply(u: np.ndarray, op: OperatorHandle) -> np.ndarray:
    """H u = -i alpha . grad_A u + m beta u."""
    out = massless_apply(u, op)
    if op.m != 0.0:
        out = out + op.m * matrix_apply(op.basis.beta, u)
    return out


def magnetic_laplacian(u: np.ndarray, op: OperatorHandle) -> np.ndarray:
    """-Delta_A u = -sum_k (d_k - iA_k)^2 u, composed from discrete covariant derivatives."""
    _check(u, op)
    return -sum(covariant_partial(covariant_partial(u, op, k), op, k) for k in range(3))


def squared_formula_apply(u: np.ndarray, op: OperatorHandle) -> np.ndarray:
    """(m^2 - Delta_A) u - 2 (S.B) u."""
    return op.m ** 2 * u + magnetic_laplacian(u, op) - 2.0 * field_matrix_apply(op.S_dot_B, u)


def square_identity_residual(u: np.ndarray, op: OperatorHandle) -> float:
    """||H(Hu) - [(m^2 - Delta_A) - 2 S.B] u|| / ||u||."""
    nu = norm(u, op.grid)
    if nu == 0.0:
        return 0.0
    diff = dirac_apply(dirac_apply(u, op), op) - squared_formula_apply(u, op)
    return norm(diff, op.grid) / nu


def field_jacobian(B: np.ndarray, grid: Grid) -> np.ndarray:
    """DB[i, j] = d_j B_i by spectral differentiation, shape (3, 3, N, N, N)."""
    return np.stack([np.stack([partial(B[i], grid, j).real for j in range(3)]) for i in range(3)])


def commutator_identity_residual(u: np.ndarray, op: OperatorHandle, phi: np.ndarray,
                                 grad_phi: np.ndarray, lap_phi: np.ndarray,
                                 DB: np.ndarray | None = None) -> tuple[float, float]:
    """Residuals of [H^2, phi] = -2 grad phi . grad_A - Delta phi and
    2 [S.B, [Delta_A, phi]] = -4 S.(DB grad phi), both over ||u||.

    ``phi`` must be smooth on the grid (use the mollified multiplier);
    ``DB`` defaults to the spectral Jacobian of ``op.B``.
    """
    grid = op.grid
    nu = norm(u, grid)
    if nu == 0.0:
        return 0.0, 0.0
    H2 = lambda v: dirac_apply(dirac_apply(v, op), op)
    lhs1 = H2(phi * u) - phi * H2(u)
    g = covariant_gradient(u, op)
    rhs1 = -2.0 * np.einsum("k...,kc...->c...", grad_phi, g) - lap_phi * u
    res1 = norm(lhs1 - rhs1, grid) / nu

    lapA = lambda v: -magnetic_laplacian(v, op)
    comm = lambda v: lapA(phi * v) - phi * lapA(v)
    SB = op.S_dot_B
    lhs2 = 2.0 * (field_matrix_apply(SB, comm(u)) - comm(field_matrix_apply(SB, u)))
    if DB is None:
        DB = field_jacobian(op.B, grid)
    DBgrad = np.einsum("ij...,j...->i...", DB, grad_phi)
    rhs2 = -4.0 * field_matrix_apply(np.einsum("kij,k...->ij...", op.spin, DBgrad), u)
    res2 = norm(lhs2 - rhs2, grid) / nu
    return res1, res2


def plane_wave(grid: Grid, mode: tuple[int, int, int], spinor) -> np.ndarray:
    """exp(i k.x) v for the lattice wavevector with integer mode numbers ``mode``."""
    k = 2.0 * np.pi * np.asarray(mode, dtype=float) / grid.L
    phase = np.exp(1j * np.einsum("k,k...->...", k, grid.offsets()))
    return np.asarray(spinor, dtype=complex)[:, None, None, None] * phase[None]


def gaussian_spinor(grid: Grid, width: float, offset=(0.0, 0.0, 0.0), spinor=(1, 0, 0, 0),
                    momentum=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Gaussian wave packet exp(-|x-x0|^2/(2 w^2) + i p.x) v, unnormalised."""
    x = grid.offsets() - np.asarray(offset, dtype=float)[:, None, None, None]
    env = np.exp(-(x ** 2).sum(axis=0) / (2.0 * width ** 2))
    phase = np.exp(1j * np.einsum("k,k...->...", np.asarray(momentum, dtype=float), x))
    return np.asarray(spinor, dtype=complex)[:, None, None, None] * (env * phase)[None]


def random_spinor(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    shape = (4,) + grid.shape
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def smooth_cutoff(r: np.ndarray, radius: float, width: float | None = None) -> np.ndarray:
    """C-infinity radial cutoff: 1 for r <= radius - width, 0 for r >= radius."""
    width = 0.5 * radius if width is None else width
    t = np.clip((np.asarray(r, dtype=float) - (radius - width)) / width, 0.0, 1.0)

    def bump(s):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)

    return bump(1.0 - t) / (bump(1.0 - t) + bump(t))
