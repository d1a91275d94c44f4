"""Quadrature-form linear system models and their symplectic Kalman decomposition."""

__version__ = "0.1.0"

from .errors import (
    ConsistencyError,
    DegenerateDimensionError,
    DocumentError,
    PairingDegeneracyError,
    RankAmbiguityError,
    RefinementRejectedError,
    StructureError,
    SymkalError,
    ValidationError,
)
from .linalg import (
    SkewCanonicalForm,
    SubspaceBasis,
    SymplecticCheck,
    TolerancePolicy,
    is_symplectic,
    jmat,
    numerical_rank,
    principal_angles,
    sharp_adjoint,
    skew_canonical,
    symplectic_complete,
)
from .model import (
    KrylovMatrices,
    PhysicalSpec,
    QuadratureSystem,
    build_system,
    from_physical,
    krylov_matrices,
    random_system,
    t0_matrix,
    transfer_matrix,
)
from .factorization import (
    CanonicalE,
    FactorizationChecks,
    SymplecticFactorization,
    factor_count_oracles,
    one_sided_symplectic_svd,
    verify_factorization,
)
from .kalman import (
    LABEL_MEANINGS,
    DecompositionChecks,
    KalmanDecomposition,
    RefinementPair,
    StateClassification,
    class_dimension_oracles,
    classify_states,
    kalman_decompose,
    refine,
    state_labels,
    verify_decomposition,
)
from . import optomech

__all__ = [
    "__version__",
    # errors
    "SymkalError", "StructureError", "DegenerateDimensionError", "ValidationError",
    "DocumentError", "PairingDegeneracyError", "RankAmbiguityError",
    "RefinementRejectedError", "ConsistencyError",
    # linear algebra
    "TolerancePolicy", "SubspaceBasis", "SkewCanonicalForm", "SymplecticCheck",
    "jmat", "sharp_adjoint", "is_symplectic", "numerical_rank", "skew_canonical",
    "symplectic_complete", "principal_angles",
    # model
    "QuadratureSystem", "PhysicalSpec", "KrylovMatrices", "build_system",
    "from_physical", "krylov_matrices", "t0_matrix", "random_system", "transfer_matrix",
    # factorization
    "CanonicalE", "SymplecticFactorization", "FactorizationChecks",
    "one_sided_symplectic_svd", "verify_factorization", "factor_count_oracles",
    # kalman
    "KalmanDecomposition", "RefinementPair", "DecompositionChecks",
    "StateClassification", "LABEL_MEANINGS", "kalman_decompose",
    "verify_decomposition", "refine", "classify_states", "state_labels",
    "class_dimension_oracles",
    # demo
    "optomech",
]
