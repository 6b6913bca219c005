"""Sparse identification of rational-function dynamics through the null space
of a state/derivative library."""

from .benchmarks import extract_parameters, make_benchmark, sample_ics
from .config import RunConfig, default_config
from .differentiation import DiffConfig, central_difference, tv_derivative
from .dynamics import (
    Dataset,
    IntegratorConfig,
    OdeModel,
    RationalStateModel,
    Trajectory,
    evaluate_rhs,
    generate_dataset,
    simulate,
)
from .library import (
    EvaluatedLibrary,
    LibrarySpec,
    LibraryTerm,
    build_explicit_library,
    build_implicit_library,
    build_library,
    build_mixed_library,
    count_monomials,
    count_polynomial_structures,
    enumerate_monomials,
    normalize_columns,
)
from .pipeline import identify_dataset, identify_state
from .selection import (
    IdentifiedModel,
    ParetoFront,
    assemble_rational_model,
    implicit_coefficients,
    pareto_front,
    select_knee,
    validate_model,
)
from .sparse import (
    AdmConfig,
    NullSpaceBasis,
    SparseCoefficients,
    adm_sparsest_vector,
    lambda_sweep,
    lasso_cd,
    null_space_basis,
    soft_threshold,
    stlsq,
)

__version__ = "0.1.0"
