import numpy as np
import pytest

from magdirac.lattice import Grid, bandlimit, dirac_apply, gaussian_spinor, make_operator, plane_wave, random_spinor
from magdirac.propagator import (DenseSizeError, KrylovConvergenceError, assemble_dense, evolve, evolve_dense,
                                 evolve_krylov, lanczos_expm, transport_residual, wave_residual)

g4 = Grid(4, 6.0)


@pytest.fixture(scope="module")
def small():
    op = make_operator(g4, A=bandlimit(0.2 * np.random.default_rng(3).standard_normal((3,) + g4.shape), g4, 1), m=0.8)
    return op, assemble_dense(op)


def test_plane_wave_eigenstate_phase():
    """A positive-energy free eigen-spinor evolves as exp(-iEt) with E = sqrt(k^2 + m^2)."""
    m = 0.5
    op = make_operator(g4, m=m)
    from magdirac.algebra import build_dirac_basis
    b = build_dirac_basis()
    k = 2 * np.pi / g4.L * np.array([1.0, 0, 0])
    symbol = k[0] * b.alpha[0] + m * b.beta
    w, V = np.linalg.eigh(symbol)
    f = plane_wave(g4, (1, 0, 0), V[:, -1])
    E = w[-1]
    assert E == pytest.approx(np.hypot(k[0], m))
    t = np.array([0.0, 0.7, 2.0])
    for traj in (evolve(op, f, t, "dense"), evolve(op, f, t, "krylov", tol=1e-12)):
        for ti, u in zip(t, traj.states):
            assert np.abs(u - np.exp(-1j * E * ti) * f).max() < 1e-10


def test_dense_size_cap():
    with pytest.raises(DenseSizeError):
        assemble_dense(make_operator(Grid(8, 1.0)), dense_cap=2048)


def test_dense_and_krylov_agree(small):
    op, d = small
    f = random_spinor(g4, np.random.default_rng(0))
    t = np.linspace(0, 3, 7)
    a, b = evolve_dense(d, f, t), evolve_krylov(op, f, t, tol=1e-12)
    assert np.abs(a.states - b.states).max() < 1e-9 * np.abs(f).max()
    assert np.abs(a.dstates + 1j * np.array([dirac_apply(u, op) for u in a.states])).max() < 1e-10


def test_unitarity_and_energy_conservation(small):
    op, d = small
    assert d.unitarity_defect() < 1e-12
    f = random_spinor(g4, np.random.default_rng(1))
    traj = evolve_dense(d, f, np.linspace(0, 20, 11))
    assert traj.norm_drift() < 1e-11 and traj.energy_drift() < 1e-11


def test_wave_residual_is_second_order(small):
    op, d = small
    f = bandlimit(gaussian_spinor(g4, 1.2), g4, 1)
    r = [wave_residual(evolve_dense(d, f, np.arange(0, 0.5 + tau / 2, tau))).max() for tau in (0.02, 0.01)]
    assert 3.5 < r[0] / r[1] < 4.5


def test_transport_of_flipped_mass(small):
    op, _ = small
    flipped = op.with_mass(-op.m)
    f = bandlimit(random_spinor(g4, np.random.default_rng(2)), g4, 1)
    traj = evolve_dense(assemble_dense(flipped), f, np.linspace(0, 1, 3))
    assert transport_residual(traj, op).max() < 1e-10


def test_time_validation(small):
    op, d = small
    f = random_spinor(g4, np.random.default_rng(0))
    with pytest.raises(ValueError):
        evolve_dense(d, f, [0.0, 0.0])
    with pytest.raises(ValueError):
        evolve_krylov(op, f, [0.5, 0.2])
    with pytest.raises(ValueError):
        evolve(op, f, [0.1], method="euler")


def test_lanczos_reports_nonconvergence():
    op = make_operator(Grid(8, 1.0))
    v = random_spinor(op.grid, np.random.default_rng(0)).reshape(-1)
    apply = lambda x: dirac_apply(x.reshape(4, 8, 8, 8), op).reshape(-1)
    with pytest.raises(KrylovConvergenceError):
        lanczos_expm(apply, v, 5.0, 1e-14, max_dim=3)
