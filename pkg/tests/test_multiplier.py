import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from magdirac.fields import condition_lhs
from magdirac.lattice import Grid
from magdirac.multiplier import make_multiplier, optimal_M, quadratic_form, quadratic_form_check

r = np.linspace(1e-4, 30, 6001)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 10), st.floats(0, 3))
def test_pointwise_bounds(R, M):
    m = make_multiplier(R, M)
    d1, d2, lap = m.dphi(r), m.d2phi(r), m.laplacian(r)
    assert np.all(d1 >= M - 1e-12) and np.all(d1 <= M + 0.5 + 1e-12)
    assert np.all(d2 >= 0) and np.all(d2 <= 1 / (3 * R) + 1e-12)
    assert np.all(lap * r <= 1 + 2 * M + 1e-12)


def test_profile_closed_forms():
    m = make_multiplier(2.0, 0.25)
    inside, outside = np.array([0.5, 1.9]), np.array([2.1, 7.0])
    assert np.allclose(m.phi(inside), 0.25 * inside + inside ** 2 / 12)
    assert np.allclose(m.laplacian(inside), 0.5 + 0.5 / inside)
    assert np.allclose(m.laplacian(outside), 1.5 / outside)
    # C^1 across r = R
    eps = 1e-9
    assert m.phi(2 + eps) == pytest.approx(m.phi(2 - eps), abs=1e-8)
    assert m.dphi(2 + eps) == pytest.approx(m.dphi(2 - eps), abs=1e-8)


def test_distributional_masses():
    m = make_multiplier(2.0, 0.3)
    assert m.point_mass == pytest.approx(-8 * np.pi * 0.3)
    assert m.sphere_mass == pytest.approx(-0.25)


def test_derivatives_match_finite_differences():
    for s in (0.0, 0.4):
        m = make_multiplier(1.5, 0.2, s=s)
        x = np.linspace(0.3, 5, 200)
        x = x[np.abs(x - 1.5) > 0.05] if s == 0 else x
        h = 1e-5
        assert np.allclose((m.phi(x + h) - m.phi(x - h)) / (2 * h), m.dphi(x), atol=1e-6)
        assert np.allclose((m.dphi(x + h) - m.dphi(x - h)) / (2 * h), m.d2phi(x), atol=1e-5)


def test_mollified_profile_is_finite_at_origin():
    m = make_multiplier(2.0, 0.1, s=0.3)
    gm = m.on_grid(Grid(8, 8.0))
    assert np.all(np.isfinite(gm.lap)) and np.all(np.isfinite(gm.dphi_over_r))


def test_invalid_parameters():
    for args in ((0.0, 0.1), (1.0, -0.1), (1.0, 0.0, -1.0)):
        with pytest.raises(ValueError):
            make_multiplier(*args)


def test_optimal_M_formula():
    assert optimal_M(0.0, 0.0) == 0.0
    assert optimal_M(0.3, 0.05) == pytest.approx(0.3 / (2 * np.sqrt(0.09 + 0.3)))


@settings(max_examples=60, deadline=None)
@example(7.49525011573103e-265, 0.0)
@given(st.floats(0, 0.6), st.floats(0, 0.3))
def test_quadratic_form_nonnegative_when_condition_holds(C1, C2):
    if condition_lhs(C1, C2) > 1:
        return
    M = optimal_M(C1, C2)
    res = quadratic_form_check(M, C1, C2)
    assert res.minimum >= -1e-12
    assert res.psd


def test_quadratic_form_failing_case():
    res = quadratic_form_check(optimal_M(1.0, 0.0), 1.0, 0.0)
    assert res.minimum < 0 and not res.psd
    assert quadratic_form(0.5, 1.0, 0.0, 1.0, 1.0) == pytest.approx(1.0 + 0.5 - 2.0)
