"""Time evolution u(t) = exp(-i t H) f (so that i u_t = H u).

Two independent routes: a dense eigendecomposition of the assembled
operator (small grids only) and matrix-free Lanczos exponentiation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, expm

from .lattice import OperatorHandle, dirac_apply, massless_apply, norm, norm2

log = logging.getLogger(__name__)

EVOLUTION_CONVENTION = "u(t) = exp(-i t H) f, i u_t = H u"
DENSE_CAP = 16384


class DenseSizeError(ValueError):
    pass


class AssemblyError(RuntimeError):
    pass


class KrylovConvergenceError(RuntimeError):
    pass


@dataclass(eq=False)
class DensePropagator:
    op: OperatorHandle
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    asymmetry: float

    @property
    def dimension(self) -> int:
        return self.eigenvalues.size

    def unitarity_defect(self) -> float:
        V = self.eigenvectors
        return float(np.abs(V.conj().T @ V - np.eye(V.shape[1])).max())

    def coordinates(self, f: np.ndarray) -> np.ndarray:
        return self.eigenvectors.conj().T @ f.reshape(-1)


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    dstates: np.ndarray
    method: str
    op: OperatorHandle
    meta: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.op.grid

    def norms(self) -> np.ndarray:
        return np.array([norm(u, self.grid) for u in self.states])

    def energies(self) -> np.ndarray:
        """||H u(t)||; equals ||u_t|| along an exact flow."""
        return np.array([norm(dirac_apply(u, self.op), self.grid) for u in self.states])

    def norm_drift(self) -> float:
        n = self.norms()
        return float(np.abs(n - n[0]).max())

    def energy_drift(self) -> float:
        e = self.energies()
        return float(np.abs(e - e[0]).max())


def assemble_matrix(op: OperatorHandle, apply=dirac_apply) -> np.ndarray:
    shape = (4,) + op.grid.shape
    dim = int(np.prod(shape))
    H = np.empty((dim, dim), dtype=complex)
    e = np.zeros(dim, dtype=complex)
    for j in range(dim):
        e[j] = 1.0
        H[:, j] = apply(e.reshape(shape), op).reshape(-1)
        e[j] = 0.0
    return H


def assemble_dense(op: OperatorHandle, dense_cap: int = DENSE_CAP, asymmetry_tol: float = 1e-8) -> DensePropagator:
    """Materialise H column by column through ``dirac_apply`` and diagonalise it."""
    dim = 4 * op.grid.N ** 3
    if dim >= dense_cap:
        raise DenseSizeError(f"dense assembly needs 4N^3 = {dim} < dense_cap = {dense_cap}")
    H = assemble_matrix(op)
    asym = float(np.abs(H - H.conj().T).max())
    if asym > asymmetry_tol:
        raise AssemblyError(f"assembled operator not Hermitian: max |H_ij - conj(H_ji)| = {asym:.3e}")
    w, V = eigh(0.5 * (H + H.conj().T))
    log.debug("dense assembly: dim=%d asymmetry=%.2e", dim, asym)
    return DensePropagator(op=op, eigenvalues=w, eigenvectors=V, asymmetry=asym)


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-D array")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    return times


def evolve_dense(p: DensePropagator, f: np.ndarray, times) -> Trajectory:
    times = _check_times(times)
    shape = (4,) + p.op.grid.shape
    if f.shape != shape:
        raise ValueError(f"initial datum has shape {f.shape}, expected {shape}")
    c = p.coordinates(f)
    V, lam = p.eigenvectors, p.eigenvalues
    phases = np.exp(-1j * np.outer(times, lam))
    states = (phases * c) @ V.T
    dstates = (-1j * lam * phases * c) @ V.T
    states[times == 0.0] = f.reshape(-1)
    return Trajectory(times=times, states=states.reshape((-1,) + shape),
                      dstates=dstates.reshape((-1,) + shape), method="dense", op=p.op,
                      meta={"convention": EVOLUTION_CONVENTION})


def operator_norm_bound(op: OperatorHandle) -> float:
    """||H|| <= max|k| + max|A| + |m| (symbol bound of alpha.(p - A) + m beta)."""
    k = op.grid.kvectors()
    kmax = float(np.sqrt((k ** 2).sum(axis=0)).max())
    amax = float(np.sqrt((op.A ** 2).sum(axis=0)).max())
    return kmax + amax + abs(op.m)


def lanczos_expm(apply, v: np.ndarray, dt: float, tol: float, max_dim: int = 40):
    """Approximate exp(-i dt H) v; returns (w, subspace dimension, error estimate).

    Uses full reorthogonalisation and the standard a-posteriori estimate
    beta_m |[exp(-i dt T_m)]_{m,0}| ||v||.
    """
    nv = np.sqrt(np.vdot(v, v).real)
    if nv == 0.0:
        return np.zeros_like(v), 0, 0.0
    V = [v / nv]
    alpha, beta = [], []
    err = np.inf
    for j in range(max_dim):
        w = apply(V[j])
        a = np.vdot(V[j], w).real
        alpha.append(a)
        w = w - a * V[j] - (beta[-1] * V[j - 1] if j > 0 else 0)
        for q in V:
            w = w - np.vdot(q, w) * q
        b = np.sqrt(np.vdot(w, w).real)
        T = np.diag(alpha) + np.diag(beta, 1) + np.diag(beta, -1)
        E = expm(-1j * dt * T)
        err = b * abs(E[-1, 0]) * nv
        if err <= tol or b < 1e-14 * nv:
            y = E[:, 0]
            return nv * sum(yi * qi for yi, qi in zip(y, V)), j + 1, err
        beta.append(b)
        V.append(w / b)
    raise KrylovConvergenceError(
        f"Lanczos did not converge at subspace size {max_dim}: error estimate {err:.2e} > {tol:.2e} "
        f"for step {dt:.3e}; reduce the step")


def evolve_krylov(op: OperatorHandle, f: np.ndarray, times, tol: float = 1e-9,
                  max_dim: int = 40, max_phase: float = 5.0) -> Trajectory:
    """Lanczos propagation between output times, with substeps so ||H|| dt <= max_phase."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    times = _check_times(times)
    shape = (4,) + op.grid.shape
    apply = lambda x: dirac_apply(x.reshape(shape), op).reshape(-1)
    hnorm = operator_norm_bound(op)
    u = f.astype(complex).reshape(-1).copy()
    states = []
    t = 0.0
    dims = []
    if times[0] < 0:
        raise ValueError("krylov propagation starts at t = 0; times must be nonnegative")
    for t_out in times:
        span = t_out - t
        if span > 0:
            n_sub = max(1, int(np.ceil(span * hnorm / max_phase)))
            dt = span / n_sub
            for _ in range(n_sub):
                u, m_used, _ = lanczos_expm(apply, u, dt, tol * dt, max_dim)
                dims.append(m_used)
            t = t_out
        states.append(u.copy())
    states = np.array(states).reshape((-1,) + shape)
    dstates = np.array([-1j * dirac_apply(s, op) for s in states])
    return Trajectory(times=times, states=states, dstates=dstates, method="krylov", op=op,
                      meta={"convention": EVOLUTION_CONVENTION, "tol": tol,
                            "max_subspace": int(max(dims)) if dims else 0})


def evolve(op: OperatorHandle, f: np.ndarray, times, method: str = "dense", tol: float = 1e-9,
           dense: DensePropagator | None = None) -> Trajectory:
    if method == "dense":
        return evolve_dense(dense or assemble_dense(op), f, times)
    if method == "krylov":
        return evolve_krylov(op, f, times, tol=tol)
    raise ValueError(f"unknown propagation method {method!r}")


def wave_residual(traj: Trajectory) -> np.ndarray:
    """||(u_{n+1} - 2u_n + u_{n-1})/tau^2 + H^2 u_n|| / ||u_n|| at interior samples."""
    t = traj.times
    if t.size < 3:
        raise ValueError("wave residual needs at least three time samples")
    steps = np.diff(t)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise ValueError("wave residual needs uniform time steps")
    tau = steps[0]
    out = []
    for n in range(1, t.size - 1):
        u = traj.states[n]
        nu = norm(u, traj.grid)
        if nu == 0.0:
            out.append(0.0)
            continue
        acc = (traj.states[n + 1] - 2 * u + traj.states[n - 1]) / tau ** 2
        H2u = dirac_apply(dirac_apply(u, traj.op), traj.op)
        out.append(norm(acc + H2u, traj.grid) / nu)
    return np.array(out)


def transport_residual(flipped: Trajectory, op: OperatorHandle) -> np.ndarray:
    """For u solving i u_t = (D_A - m beta) u, check v = D_A u solves i v_t = H v.

    ``flipped`` is a trajectory of the mass-flipped operator; ``op`` carries
    the original mass.
    """
    out = []
    for u, ut in zip(flipped.states, flipped.dstates):
        v = massless_apply(u, op)
        vt = massless_apply(ut, op)
        nv = np.sqrt(norm2(v, op.grid))
        res = norm(1j * vt - dirac_apply(v, op), op.grid)
        out.append(res / nv if nv > 0 else res)
    return np.array(out)
