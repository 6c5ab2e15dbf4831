import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magdirac.algebra import build_dirac_basis
from magdirac.lattice import (Grid, GridMismatchError, bandlimit, covariant_gradient, curl, dirac_apply, divergence,
                              gradient, inner, magnetic_laplacian, make_operator, norm2, norm2_fourier, plane_wave,
                              radial_tangential, random_spinor, smooth_cutoff, square_identity_residual)

basis = build_dirac_basis()
G = Grid(8, 12.0)


def test_grid_validation():
    with pytest.raises(ValueError, match="grid.N"):
        Grid(7, 1.0)
    with pytest.raises(ValueError, match="grid.L"):
        Grid(8, 0.0)
    g = Grid(8, 4.0, (1, 2, 3))
    assert g.h == 0.5 and g.points()[:, 4, 4, 4].tolist() == [1.0, 2.0, 3.0]
    assert g.radius()[4, 4, 4] == 0 and g.regularized_radius()[4, 4, 4] == 0.25


def test_nyquist_mode_is_not_differentiated():
    g = Grid(8, 2 * np.pi)
    x = g.offsets()[0]
    u = np.cos(4 * x)   # Nyquist
    assert np.abs(gradient(u, g)).max() < 1e-12


@pytest.mark.parametrize("mode", [(1, 0, 0), (0, -2, 1), (3, 3, -3)])
def test_plane_wave_symbol(mode):
    """H on e^{ik.x} v equals (alpha.k + m beta) v e^{ik.x}."""
    m = 0.7
    op = make_operator(G, m=m)
    v = np.array([0.3, 1j, -0.2, 0.5])
    u = plane_wave(G, mode, v)
    k = 2 * np.pi * np.array(mode) / G.L
    symbol = sum(kk * a for kk, a in zip(k, basis.alpha)) + m * basis.beta
    expect = plane_wave(G, mode, symbol @ v)
    assert np.abs(dirac_apply(u, op) - expect).max() < 1e-12


def test_free_square_is_helmholtz():
    op = make_operator(G, m=1.3)
    u = plane_wave(G, (1, 2, 0), [1, 0, 0, 1j])
    k2 = (2 * np.pi / G.L) ** 2 * 5
    assert np.abs(dirac_apply(dirac_apply(u, op), op) - (k2 + 1.69) * u).max() < 1e-11


def test_constant_potential_is_a_lattice_gauge():
    """A = -k0 constant: the free operator on e^{ik0.x} u equals e^{ik0.x} times the magnetic one on u."""
    k0 = 2 * np.pi / G.L * np.array([1.0, 0, 0])
    A = np.broadcast_to(-k0[:, None, None, None], (3,) + G.shape).copy()
    opA = make_operator(G, A=A, m=0.5)
    op0 = make_operator(G, m=0.5)
    u = bandlimit(random_spinor(G, np.random.default_rng(1)), G, 2)
    phase = np.exp(1j * np.einsum("k,k...->...", k0, G.offsets()))
    lhs = dirac_apply(phase * u, op0)
    rhs = phase * dirac_apply(u, opA)
    assert np.abs(lhs - rhs).max() < 1e-11
    assert np.abs(opA.B).max() < 1e-12


def test_field_is_curl_and_divergence_free(rng):
    A = bandlimit(rng.standard_normal((3,) + G.shape), G)
    op = make_operator(G, A=A)
    assert np.allclose(op.B, curl(A, G))
    assert np.abs(divergence(op.B, G)).max() < 1e-12


def test_operator_is_hermitian(rng):
    A = bandlimit(rng.standard_normal((3,) + G.shape), G)
    op = make_operator(G, A=A, m=0.4)
    u, v = random_spinor(G, rng), random_spinor(G, rng)
    assert abs(inner(dirac_apply(u, op), v, G) - inner(u, dirac_apply(v, op), G)) < 1e-10


def test_magnetic_laplacian_matches_gradient_energy(rng):
    A = bandlimit(rng.standard_normal((3,) + G.shape), G)
    op = make_operator(G, A=A)
    u = random_spinor(G, rng)
    lhs = inner(magnetic_laplacian(u, op), u, G).real
    assert lhs == pytest.approx(norm2(covariant_gradient(u, op), G), rel=1e-12)


def test_square_identity_exact_when_alias_free(rng):
    g = Grid(16, 12.0)
    A = bandlimit(0.3 * rng.standard_normal((3,) + g.shape), g)
    op = make_operator(g, A=A, m=1.0)
    u = bandlimit(random_spinor(g, rng), g)
    assert square_identity_residual(u, op) < 1e-10


def test_radial_tangential_split():
    g = Grid(8, 4.0)
    x = g.offsets()
    u = np.stack([x[0], x[1], x[2], np.zeros_like(x[0])]).astype(complex)
    grad = np.stack([np.broadcast_to(np.eye(4, 3)[:, k][:, None, None, None], u.shape) for k in range(3)])
    rad, tan = radial_tangential(grad, g)
    assert np.allclose(rad + 0, np.einsum("k...,kc...->c...", np.where(g.radius() > 0, x / np.maximum(g.radius(), 1e-300), 0), grad))
    assert np.allclose(tan[:, :, 4, 4, 4], grad[:, :, 4, 4, 4])


def test_shape_mismatch_is_reported():
    op = make_operator(G)
    with pytest.raises(GridMismatchError):
        dirac_apply(np.zeros((4, 4, 4, 4), complex), op)
    with pytest.raises(GridMismatchError):
        make_operator(G, A=np.zeros((3, 4, 4, 4)))


def test_smooth_cutoff_profile():
    r = np.linspace(0, 3, 301)
    c = smooth_cutoff(r, 2.0)
    assert np.all(c[r <= 1.0] == 1) and np.all(c[r >= 2.0] == 0)
    assert np.all(np.diff(c) <= 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 3))
def test_parseval_and_bandlimit_idempotent(seed, mode):
    u = random_spinor(G, np.random.default_rng(seed))
    assert norm2(u, G) == pytest.approx(norm2_fourier(u, G), rel=1e-12)
    b = bandlimit(u, G, mode)
    assert np.allclose(bandlimit(b, G, mode), b)
    assert norm2(b, G) <= norm2(u, G) * (1 + 1e-12)
