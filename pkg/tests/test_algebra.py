import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from magdirac.algebra import (TOL_MACHINE, algebra_self_test, alpha_dot, build_dirac_basis, clifford_product_check,
                              literal_wedge_spin, matrix_cross, spin_operator, wedge_commutators)

basis = build_dirac_basis()
S = spin_operator(basis)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
cvec = st.tuples(arrays(float, 3, elements=finite), arrays(float, 3, elements=finite)).map(lambda t: t[0] + 1j * t[1])


def test_standard_representation_blocks():
    a, b = basis.alpha, basis.beta
    assert np.allclose(b, np.diag([1, 1, -1, -1]))
    for k in range(3):
        assert np.allclose(a[k][:2, :2], 0) and np.allclose(a[k][2:, 2:], 0)
        assert np.allclose(a[k][:2, 2:], a[k][2:, :2])


def test_self_test_all_exact():
    for name, res in algebra_self_test(basis):
        assert res < TOL_MACHINE, name


def test_spin_is_half_block_pauli():
    for k in range(3):
        assert np.allclose(S[k][:2, :2], S[k][2:, 2:])
        assert np.allclose(S[k][:2, 2:], 0)
    # [S1, S2] = i S3
    assert np.allclose(S[0] @ S[1] - S[1] @ S[0], 1j * S[2])


def test_literal_wedge_has_opposite_sign():
    assert np.allclose(literal_wedge_spin(basis), -S)
    assert wedge_commutators(basis).shape == (3, 4, 4)


def test_alpha_dot_of_unit_vectors():
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1
        assert np.allclose(alpha_dot(e, basis), basis.alpha[k])


@settings(max_examples=60, deadline=None)
@given(cvec, cvec)
def test_clifford_product_property(F, G):
    scale = 1 + np.abs(F).max() * np.abs(G).max()
    assert clifford_product_check(F, G, basis) < TOL_MACHINE * scale


@settings(max_examples=30, deadline=None)
@given(cvec, cvec)
def test_matrix_cross_antisymmetric_for_commuting_scalars(F, G):
    assert np.allclose(matrix_cross(F, G), -matrix_cross(G, F))


def test_flipped_spin_breaks_product_check():
    F, G = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    assert clifford_product_check(F, G, basis, spin=-S) > 0.1
    bad = [n for n, r in algebra_self_test(basis, spin=-S) if r >= TOL_MACHINE]
    assert "clifford_product(random)" in bad


def test_rejects_malformed_triples():
    with pytest.raises(ValueError):
        clifford_product_check(np.ones(2), np.ones(3), basis)
