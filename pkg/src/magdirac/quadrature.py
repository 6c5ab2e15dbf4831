"""Evaluation of lattice fields off the grid: trigonometric interpolation,
zero-padded refinement, and quadrature rules on spheres."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .lattice import Grid, from_fourier, to_fourier


def _axis_factors(grid: Grid, coords: np.ndarray) -> np.ndarray:
    """(P, N) matrix e^{i k_n (x_p - x_0)} / N with the Nyquist column as a cosine."""
    n = grid.mode_indices()
    k = 2.0 * np.pi * n / grid.L
    x0 = -0.5 * grid.N * grid.h
    d = coords[:, None] - x0
    E = np.exp(1j * k[None, :] * d)
    nyq = grid.N // 2
    E[:, nyq] = np.cos(np.pi * d[:, 0] / grid.h)
    return E / grid.N


def spectral_interpolate(values: np.ndarray, grid: Grid, offsets: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of grid samples at arbitrary points.

    ``values`` has shape ``lead + (N, N, N)``; ``offsets`` has shape (P, 3),
    positions relative to the grid center. Returns ``lead + (P,)``.
    """
    offsets = np.atleast_2d(np.asarray(offsets, dtype=float))
    v_hat = to_fourier(values)
    Ex, Ey, Ez = (_axis_factors(grid, offsets[:, j]) for j in range(3))
    out = np.einsum("pa,pb,pc,...abc->...p", Ex, Ey, Ez, v_hat, optimize=True)
    return out.real if np.isrealobj(values) else out


def refine(values: np.ndarray, grid: Grid, factor: int) -> tuple[np.ndarray, Grid]:
    """Zero-pad the spectrum to an ``factor``-times finer grid with the same nodes.

    The Nyquist coefficient is split symmetrically between +-N/2 so the
    interpolant agrees with ``spectral_interpolate``.
    """
    if factor == 1:
        return values, grid
    N, Nf = grid.N, grid.N * factor
    fine = Grid(Nf, grid.L, grid.center)
    v_hat = to_fourier(values)
    n = grid.mode_indices()
    P = np.zeros((Nf, N))
    for i, ni in enumerate(n):
        if i == N // 2:
            P[ni % Nf, i] += 0.5
            P[(-ni) % Nf, i] += 0.5
        else:
            P[ni % Nf, i] = 1.0
    out = np.einsum("ia,...abc->...ibc", P, v_hat)
    out = np.einsum("jb,...ibc->...ijc", P, out)
    out = np.einsum("kc,...ijc->...ijk", P, out)
    out = from_fourier(out) * factor ** 3
    return (out.real if np.isrealobj(values) else out), fine


@lru_cache(maxsize=8)
def sphere_rule(n_polar: int = 16, n_azimuth: int = 26) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre (cos theta) x trapezoid (azimuth) rule on the unit sphere.

    Returns unit directions (P, 3) and weights summing to 4 pi. The default
    16 x 26 = 416 nodes integrates spherical harmonics of degree <= 25 exactly.
    """
    z, wz = np.polynomial.legendre.leggauss(n_polar)
    az = 2.0 * np.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
    Z, AZ = np.meshgrid(z, az, indexing="ij")
    s = np.sqrt(1.0 - Z ** 2)
    dirs = np.stack([s * np.cos(AZ), s * np.sin(AZ), Z], axis=-1).reshape(-1, 3)
    w = (wz[:, None] * np.full(n_azimuth, 2.0 * np.pi / n_azimuth)[None, :]).reshape(-1)
    return dirs, w


def sphere_integral(density: np.ndarray, grid: Grid, radius: float, rule=None) -> np.ndarray:
    """Integral over |x - center| = radius of the interpolant of ``density``.

    ``density`` has shape ``lead + (N, N, N)`` and is interpolated directly
    (pass |u|^2 only if it is resolved; prefer ``sphere_integral_abs2``).
    """
    dirs, w = rule or sphere_rule()
    vals = spectral_interpolate(density, grid, radius * dirs)
    return radius ** 2 * np.tensordot(vals, w, axes=([-1], [0]))


def sphere_integral_abs2(u: np.ndarray, grid: Grid, radius: float, rule=None) -> float:
    """Integral of |u|^2 over the sphere, interpolating the spinor components first."""
    dirs, w = rule or sphere_rule()
    vals = spectral_interpolate(u, grid, radius * dirs)
    dens = (np.abs(vals) ** 2).sum(axis=0)
    return float(radius ** 2 * np.dot(dens, w))


def point_abs2(u: np.ndarray, grid: Grid, offset=(0.0, 0.0, 0.0)) -> float:
    vals = spectral_interpolate(u, grid, np.asarray(offset, dtype=float)[None, :])
    return float((np.abs(vals[..., 0]) ** 2).sum())


@lru_cache(maxsize=8)
def cube_directions(refinement: int = 0) -> np.ndarray:
    """26 face/edge/corner directions of the cube, optionally refined.

    Each refinement level adds normalised midpoints between every pair of
    directions at the minimal angular distance.
    """
    dirs = [np.array(v, dtype=float) for v in np.ndindex(3, 3, 3) if v != (1, 1, 1)]
    dirs = [(d - 1.0) / np.linalg.norm(d - 1.0) for d in dirs]
    D = np.array(dirs)
    for _ in range(refinement):
        G = D @ D.T
        np.fill_diagonal(G, -2.0)
        best = G.max()
        i, j = np.nonzero(np.isclose(G, best))
        mids = D[i] + D[j]
        mids /= np.linalg.norm(mids, axis=1, keepdims=True)
        D = np.unique(np.round(np.vstack([D, mids]), 12), axis=0)
    return D
