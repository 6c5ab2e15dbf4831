import math

import numpy as np
import pytest

from magdirac.fields import FieldConstants, compute_constants, example_field, lattice_potential
from magdirac.lattice import Grid, bandlimit, gaussian_spinor, make_operator, plane_wave
from magdirac.norms import (AdmissibilityRelationError, HardyInputError, check_admissible, dyadic_radii, hardy_check,
                            lq_norm, smoothing_norms, sobolev_image, sphere_abs2_spline, strichartz_ratio)
from magdirac.propagator import Trajectory, evolve_dense

G = Grid(8, 12.0)
ZERO = FieldConstants(0.0, 0.0, 0.0, 0.0, 0.0, 1e-3, 1e3, 1, 26, -10, 10)


def test_dyadic_radii():
    assert np.allclose(dyadic_radii(G), [1.5, 3.0])
    assert np.allclose(dyadic_radii(Grid(32, 12.0)), [0.375, 0.75, 1.5, 3.0])


def test_sphere_spline_of_constant():
    u = plane_wave(G, (0, 0, 0), [1, 0, 0, 0])
    assert sphere_abs2_spline(u, G, 2.0) == pytest.approx(16 * np.pi)


def test_smoothing_of_stationary_state():
    op = make_operator(G, m=1.0)
    u = gaussian_spinor(G, 1.5)
    t = np.linspace(0, 2, 5)
    traj = Trajectory(t, np.repeat(u[None], 5, axis=0), np.zeros((5,) + u.shape), "x", op)
    rep = smoothing_norms(traj, horizons=[1.0, 2.0])
    ball = G.cell_volume * (np.abs(u) ** 2).sum(axis=0)[G.radius() <= 1.5].sum()
    assert rep.X[0, 0] == pytest.approx(ball / 1.5)
    assert rep.X[1, 0] == pytest.approx(2 * ball / 1.5)
    assert rep.center[1] == pytest.approx(2 * (np.abs(u[:, 4, 4, 4]) ** 2).sum())
    with pytest.raises(ValueError):
        smoothing_norms(traj, horizons=[0.7])


def test_hardy_free_identity_and_verdict(packet8):
    op = make_operator(G, m=1.0)
    rep = hardy_check(packet8, op, ZERO, 0.5)
    assert rep.identity_residual < 1e-12
    assert rep.margin >= 0 and rep.verdict == "pass"
    assert rep.lhs == pytest.approx(rep.mass_term + rep.weighted_term + rep.gradient_term)


def test_hardy_magnetic_identity_sign():
    g = Grid(16, 12.0)
    spec = example_field("decaying", {"a": 0.1, "w": 1.5})
    op = make_operator(g, A=bandlimit(lattice_potential(spec, g), g), m=1.0)
    f = bandlimit(gaussian_spinor(g, 1.2, offset=(0.6, -0.8, 0.3), spinor=(1, 1, 0, 0.2)), g)
    rep = hardy_check(f, op, compute_constants(spec), 0.6)
    assert rep.identity_residual < 1e-10
    assert rep.displayed_sign_residual > 1e3 * max(rep.identity_residual, 1e-16)


def test_hardy_input_errors(packet8):
    op = make_operator(G, m=1.0)
    for eps in (0.0, 1.0, -0.2):
        with pytest.raises(HardyInputError):
            hardy_check(packet8, op, ZERO, eps)
    c = FieldConstants(0.0, 0.0, 0.0, 0.3, 0.0, 1e-3, 1e3, 1, 26, -10, 10)
    with pytest.raises(HardyInputError, match="B2"):
        hardy_check(packet8, op.with_mass(0.0), c, 0.5)


@pytest.mark.parametrize("p,q,kind", [(4, 4, "wave"), (math.inf, 2, "wave"), (math.inf, 2, "schrodinger"),
                                      (2, 6, "schrodinger"), (4, 3, "schrodinger")])
def test_admissible_pairs(p, q, kind):
    check_admissible(p, q, kind)


@pytest.mark.parametrize("p,q,kind,needle", [(3, 3, "wave", "2/p + 2/q"), (2, math.inf, "wave", "2 < p"),
                                             (4, 4, "schrodinger", "2/p + 3/q"),
                                             (1.6, 12, "schrodinger", "2 <= p")])
def test_inadmissible_pairs_cite_relation(p, q, kind, needle):
    with pytest.raises(AdmissibilityRelationError, match=needle.replace("+", r"\+")):
        check_admissible(p, q, kind)


def test_sobolev_image_and_lq():
    u = plane_wave(G, (1, 0, 0), [1, 0, 0, 0])
    k = 2 * np.pi / G.L
    assert np.allclose(sobolev_image(u, G, -0.5, True), k ** -0.5 * u)
    assert np.allclose(sobolev_image(u, G, 2.0, False), (1 + k ** 2) * u)
    c = plane_wave(G, (0, 0, 0), [1, 0, 0, 0])
    assert np.abs(sobolev_image(c, G, 1.0, True)).max() < 1e-14
    assert lq_norm(u, G, math.inf) == pytest.approx(1.0)
    assert lq_norm(u, G, 4) == pytest.approx(G.L ** 0.75)


def test_strichartz_energy_pair_is_unitary(free_dense8, packet8):
    traj = evolve_dense(free_dense8, packet8, np.linspace(0, 2, 9))
    rep = strichartz_ratio(traj, math.inf, 2)
    assert rep.admissibility == "schrodinger" and rep.s == 0.0
    assert abs(rep.ratio - 1) < 1e-10
    with pytest.raises(AdmissibilityRelationError):
        strichartz_ratio(traj, 4, 4)
