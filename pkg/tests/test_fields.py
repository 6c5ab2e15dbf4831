import math

import numpy as np
import pytest

from magdirac.fields import (ExcludedPointError, FieldConfigError, FieldConstants, NonSolenoidalFieldError,
                             QuadratureSettings, InvalidQuadratureError, admissibility_check, compute_constants,
                             condition_lhs, default_sample_points, ex2_amplitude, example_field, fd_curl,
                             fd_divergence, field_geometry, lattice_potential, poincare_gauge)
from magdirac.lattice import Grid

pts = default_sample_points(32, seed=5, scale=2.0)


@pytest.mark.parametrize("kind,params", [("constant", {"b": 0.7}), ("decaying", {"a": 0.3, "w": 1.2}),
                                         ("perturbed_ex2", {"epsilon": 0.5, "delta": 1.0})])
def test_potential_reproduces_field(kind, params):
    spec = example_field(kind, params)
    assert np.allclose(fd_curl(spec.A, pts), spec.B(pts), atol=1e-6)
    # Poincare gauge: x . A = 0
    assert np.abs((pts * spec.A(pts)).sum(axis=0)).max() < 1e-12
    assert np.abs(fd_divergence(spec.B, pts)).max() < 1e-6


def test_constant_field_gauge_is_half_cross():
    spec = example_field("constant", {"b": 2.0})
    x = pts
    expect = 0.5 * np.cross(np.array([0, 0, 2.0])[:, None], x, axis=0)
    assert np.allclose(spec.A(x), expect, atol=1e-12)


def test_non_solenoidal_field_rejected():
    spec = example_field("radial_omega", {"omega0": 1.0})
    assert spec.A is None
    with pytest.raises(NonSolenoidalFieldError):
        poincare_gauge(spec.B)
    with pytest.raises(NonSolenoidalFieldError):
        lattice_potential(spec, Grid(8, 4.0))


@pytest.mark.parametrize("kind,params,key", [
    ("nope", {}, "field.kind"), ("constant", {}, "field.params.b"),
    ("perturbed_ex2", {"epsilon": 0.1, "delta": 2.5}, "field.params.delta"),
    ("decaying", {"a": 1.0, "w": -1.0}, "field.params.w"), ("radial_omega", {}, "field.params.omega0")])
def test_config_errors_name_the_key(kind, params, key):
    with pytest.raises(FieldConfigError) as exc:
        example_field(kind, params)
    assert exc.value.key == key


def test_split_declared_not_inferred():
    spec = example_field("decaying", {"a": 0.2, "w": 1.0}, split="B2")
    assert np.allclose(spec.B1(pts), 0) and np.allclose(spec.B2(pts), spec.B(pts))


def test_geometry_excludes_origin():
    geom = field_geometry(example_field("decaying", {"a": 0.2, "w": 1.0}))
    with pytest.raises(ExcludedPointError):
        geom.B_tau(np.zeros((3, 1)))


def test_radial_field_has_no_tangential_or_radial_derivative():
    geom = field_geometry(example_field("radial_omega", {"omega0": 1.0, "omega1": 0.5}))
    assert np.abs(geom.B_tau(pts)).max() < 1e-10
    assert np.abs(geom.dB_r(pts)).max() < 1e-10


def test_ex2_amplitude_respects_decay_bounds():
    c = ex2_amplitude(1.0)
    assert 0.1 < c < 1.0


def test_constants_scale_linearly():
    spec = example_field("decaying", {"a": 0.1, "w": 1.0})
    c1, c2 = compute_constants(spec), compute_constants(spec.scaled(2.0))
    for name in ("C0", "C1", "C2", "decay_sum"):
        assert getattr(c2, name) == pytest.approx(2 * getattr(c1, name), rel=1e-6)


def test_constant_field_is_inadmissible():
    c = compute_constants(example_field("constant", {"b": 1.0}))
    assert math.isinf(c.C1)
    res = admissibility_check(c, 1.0)
    assert res.verdict == "fail" and any("C1" in s for s in res.reasons)


def test_massless_needs_zero_B2():
    c = FieldConstants(0.0, 0.0, 0.0, 0.5, 0.0, 1e-3, 1e3, 10, 26, -10, 10)
    assert admissibility_check(c, 1.0).verdict == "pass_strict"
    assert admissibility_check(c, 0.0).verdict == "fail"


def test_condition_and_verdict_boundaries():
    assert condition_lhs(0.0, 0.0) == 0.0
    c = FieldConstants(0.3, 0.0, 0.0, 0.0, 0.0, 1e-3, 1e3, 10, 26, -10, 10)
    assert admissibility_check(c, 1.0).verdict == "fail"
    c = FieldConstants(0.0, 0.0, 1 / 3, 0.0, 0.0, 1e-3, 1e3, 10, 26, -10, 10)
    res = admissibility_check(c, 1.0)
    assert res.verdict == "pass" and res.margin == pytest.approx(0.0, abs=1e-15)


def test_quadrature_settings_validation():
    with pytest.raises(InvalidQuadratureError):
        QuadratureSettings(r_min=0.0)
    with pytest.raises(InvalidQuadratureError):
        QuadratureSettings(j_min=3, j_max=1)


def test_lattice_potential_vanishes_past_cutoff():
    g = Grid(16, 10.0)
    A = lattice_potential(example_field("constant", {"b": 1.0}), g)
    assert np.abs(A[:, g.radius() >= 4.0]).max() == 0.0
