"""Numerical laboratory for the magnetic Dirac flow on a periodic grid."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .algebra import algebra_self_test, build_dirac_basis, clifford_product_check, spin_operator
from .fields import admissibility_check, compute_constants, example_field, field_geometry, poincare_gauge
from .lattice import Grid, bandlimit, covariant_gradient, dirac_apply, gaussian_spinor, make_operator
from .multiplier import make_multiplier, optimal_M, quadratic_form_check
from .norms import hardy_check, smoothing_norms, strichartz_ratio
from .propagator import assemble_dense, evolve, evolve_dense, evolve_krylov
from .virial import rhs_bound_check, theta_functionals, virial_terms

__all__ = [
    "__version__", "algebra_self_test", "build_dirac_basis", "clifford_product_check", "spin_operator",
    "admissibility_check", "compute_constants", "example_field", "field_geometry", "poincare_gauge",
    "Grid", "bandlimit", "covariant_gradient", "dirac_apply", "gaussian_spinor", "make_operator",
    "make_multiplier", "optimal_M", "quadratic_form_check", "hardy_check", "smoothing_norms",
    "strichartz_ratio", "assemble_dense", "evolve", "evolve_dense", "evolve_krylov", "rhs_bound_check",
    "theta_functionals", "virial_terms",
]
