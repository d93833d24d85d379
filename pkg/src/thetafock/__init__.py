"""Theta Fock-Bargmann spaces over isotropic lattices.

Public surface: geometry validation and lattice construction, Riemann
theta evaluation with certified truncation, the weighted holomorphic
function space (basis, norms, reproducing kernel), and the independent
quadrature oracle used to verify every closed form.
"""

from . import errors
from .geometry import (
    Character,
    HermitianSpace,
    IsotropicLattice,
    PointCoordinates,
    ambient_measure_factor,
    b_form,
    build_lattice,
    check_rdq,
    coordinates,
    symplectic_form,
    to_ambient,
    validate_space,
)
from .quadrature import build_grid, gaussian_integral, gram_matrix, inner_product
from .space import (
    BasisIndex,
    CoefficientField,
    SpaceConfig,
    basis_eval,
    basis_norm_sq,
    basis_norm_sq_log,
    evaluation_bound_check,
    growth_functional,
    kernel_diagonal,
    kernel_eval,
    make_config,
    series_indices,
    synthesize,
    weight_factor,
)
from .theta import (
    ThetaParameters,
    ThetaResult,
    TruncationPlan,
    theta_eval,
    theta_quasiperiodicity_defect,
    truncation_plan,
    validate_parameters,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "Character",
    "HermitianSpace",
    "IsotropicLattice",
    "PointCoordinates",
    "ambient_measure_factor",
    "b_form",
    "build_lattice",
    "check_rdq",
    "coordinates",
    "symplectic_form",
    "to_ambient",
    "validate_space",
    "build_grid",
    "gaussian_integral",
    "gram_matrix",
    "inner_product",
    "BasisIndex",
    "CoefficientField",
    "SpaceConfig",
    "basis_eval",
    "basis_norm_sq",
    "basis_norm_sq_log",
    "evaluation_bound_check",
    "growth_functional",
    "kernel_diagonal",
    "kernel_eval",
    "make_config",
    "series_indices",
    "synthesize",
    "weight_factor",
    "ThetaParameters",
    "ThetaResult",
    "TruncationPlan",
    "theta_eval",
    "theta_quasiperiodicity_defect",
    "truncation_plan",
    "validate_parameters",
    "__version__",
]
