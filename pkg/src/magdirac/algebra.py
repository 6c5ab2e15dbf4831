"""Dirac, Pauli and spin matrices in the standard (Dirac) representation.

All matrices are dense 4x4 complex arrays. Basis-level identities hold
exactly since every entry is one of 0, +-1, +-i.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)

# tolerance for composite products of exact matrices with float data
TOL_MACHINE = 1e-12


@dataclass(frozen=True)
class DiracBasis:
    alpha: tuple[np.ndarray, np.ndarray, np.ndarray]
    beta: np.ndarray
    identity: np.ndarray

    @property
    def alpha_stack(self) -> np.ndarray:
        """The three alpha matrices as a (3, 4, 4) array."""
        return np.stack(self.alpha)


def build_dirac_basis() -> DiracBasis:
    zero = np.zeros((2, 2), dtype=complex)
    alpha = tuple(np.block([[zero, s], [s, zero]]) for s in PAULI)
    beta = np.block([[I2, zero], [zero, -I2]])
    return DiracBasis(alpha=alpha, beta=beta, identity=I4.copy())


def wedge_commutators(basis: DiracBasis) -> np.ndarray:
    """alpha ^ alpha in the cyclic ordering (a2a3-a3a2, a3a1-a1a3, a1a2-a2a1)."""
    a1, a2, a3 = basis.alpha
    return np.stack([a2 @ a3 - a3 @ a2, a3 @ a1 - a1 @ a3, a1 @ a2 - a2 @ a1])


def spin_operator(basis: DiracBasis) -> np.ndarray:
    """Spin triple S = (S^1, S^2, S^3) as a (3, 4, 4) array.

    Normalised so that (a.F)(a.G) = F.G + 2i S.(F ^ G) and
    H^2 = (m^2 - Delta_A) - 2 S.B hold; this is S = diag(sigma, sigma)/2,
    i.e. minus (i/4) times the cyclic wedge alpha ^ alpha.
    """
    return -0.25j * wedge_commutators(basis)


def literal_wedge_spin(basis: DiracBasis) -> np.ndarray:
    """(i/4) alpha ^ alpha taken literally; equals -spin_operator(basis)."""
    return 0.25j * wedge_commutators(basis)


def _as_matrix_triple(F) -> np.ndarray:
    F = np.asarray(F, dtype=complex)
    if F.shape == (3,):
        return F[:, None, None] * I4
    if F.shape != (3, 4, 4):
        raise ValueError(f"expected a scalar triple or (3, 4, 4) array, got shape {F.shape}")
    return F


def alpha_dot(F, basis: DiracBasis) -> np.ndarray:
    F = _as_matrix_triple(F)
    return sum(a @ f for a, f in zip(basis.alpha, F))


def matrix_dot(F, G) -> np.ndarray:
    F, G = _as_matrix_triple(F), _as_matrix_triple(G)
    return sum(f @ g for f, g in zip(F, G))


def matrix_cross(F, G) -> np.ndarray:
    """Operator-ordered cross product (F2 G3 - F3 G2, ...)."""
    F, G = _as_matrix_triple(F), _as_matrix_triple(G)
    return np.stack([F[(k + 1) % 3] @ G[(k + 2) % 3] - F[(k + 2) % 3] @ G[(k + 1) % 3] for k in range(3)])


def clifford_product_check(F, G, basis: DiracBasis, spin: np.ndarray | None = None) -> float:
    """Max-entry residual of (a.F)(a.G) - [F.G + 2i S.(F ^ G)].

    The identity requires the entries of F and G to commute with the alpha
    matrices (scalar multiples of I4, or scalar operators acting on fields).
    """
    S = spin_operator(basis) if spin is None else spin
    lhs = alpha_dot(F, basis) @ alpha_dot(G, basis)
    cross = matrix_cross(F, G)
    rhs = matrix_dot(F, G) + 2j * sum(s @ c for s, c in zip(S, cross))
    return float(np.abs(lhs - rhs).max())


def _max_abs(M: np.ndarray) -> float:
    return float(np.abs(M).max())


def algebra_self_test(basis: DiracBasis, spin: np.ndarray | None = None, seed: int = 0,
                      n_random: int = 20) -> list[tuple[str, float]]:
    """Residuals of every basis identity, spin property and Clifford product check.

    ``spin`` overrides the spin triple (used to inject faults).
    """
    S = spin_operator(basis) if spin is None else np.asarray(spin)
    a, b, one = basis.alpha, basis.beta, basis.identity
    report = []
    for k in range(3):
        for l in range(3):
            target = 2.0 * one if k == l else np.zeros((4, 4))
            report.append((f"anticomm(alpha{k + 1},alpha{l + 1})", _max_abs(a[l] @ a[k] + a[k] @ a[l] - target)))
    for k in range(3):
        report.append((f"anticomm(alpha{k + 1},beta)", _max_abs(a[k] @ b + b @ a[k])))
    report.append(("beta^2", _max_abs(b @ b - one)))
    for k in range(3):
        report.append((f"hermitian(alpha{k + 1})", _max_abs(a[k] - a[k].conj().T)))
    report.append(("hermitian(beta)", _max_abs(b - b.conj().T)))
    for k in range(3):
        report.append((f"hermitian(S{k + 1})", _max_abs(S[k] - S[k].conj().T)))
        report.append((f"opnorm(S{k + 1})-1/2", abs(np.linalg.norm(S[k], 2) - 0.5)))
        eig = np.linalg.eigvalsh(0.5 * (S[k] + S[k].conj().T))
        report.append((f"spectrum(S{k + 1})", float(np.abs(eig - np.array([-0.5, -0.5, 0.5, 0.5])).max())))
        report.append((f"literal_wedge_S{k + 1}=-S{k + 1}", _max_abs(literal_wedge_spin(basis)[k] + S[k])))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_random):
        F = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        G = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        worst = max(worst, clifford_product_check(F, G, basis, spin=S))
    report.append(("clifford_product(random)", worst))
    return report
