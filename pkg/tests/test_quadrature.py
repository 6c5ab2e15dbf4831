import numpy as np
import pytest

from magdirac.lattice import Grid, gaussian_spinor, plane_wave
from magdirac.quadrature import (cube_directions, point_abs2, refine, spectral_interpolate, sphere_integral_abs2,
                                 sphere_rule)


def test_sphere_rule_integrates_polynomials():
    d, w = sphere_rule()
    assert w.sum() == pytest.approx(4 * np.pi)
    assert np.dot(w, d[:, 2] ** 2) == pytest.approx(4 * np.pi / 3)
    assert np.dot(w, d[:, 0] ** 4) == pytest.approx(4 * np.pi / 5)


def test_interpolation_exact_for_trig_polynomials():
    g = Grid(8, 6.0)
    u = plane_wave(g, (1, -2, 3), [1, 0, 0, 0])
    pts = np.array([[0.1, 0.2, -0.3], [1.7, -2.2, 0.9]])
    k = 2 * np.pi * np.array([1, -2, 3]) / g.L
    expect = np.exp(1j * pts @ k)
    assert np.allclose(spectral_interpolate(u, g, pts)[0], expect, atol=1e-12)


def test_refine_keeps_nodes():
    g = Grid(8, 6.0)
    u = gaussian_spinor(g, 1.0)
    f, fine = refine(u, g, 2)
    assert fine.N == 16
    assert np.allclose(f[:, ::2, ::2, ::2], u, atol=1e-12)


def test_sphere_and_point_values_of_plane_wave():
    g = Grid(8, 6.0)
    u = plane_wave(g, (1, 0, 0), [1, 0, 0, 0])
    assert sphere_integral_abs2(u, g, 1.3) == pytest.approx(4 * np.pi * 1.3 ** 2)
    assert point_abs2(u, g, (0.4, 0.1, 0)) == pytest.approx(1.0)


def test_cube_directions_unit():
    for lev in (0, 1):
        d = cube_directions(lev)
        assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    assert cube_directions(0).shape == (26, 3) and cube_directions(1).shape[0] > 26
