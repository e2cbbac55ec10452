"""
Λ-versal unfoldings of linear retarded functional differential equations.

The package reduces a linear RFDE onto the generalized eigenspace of a finite
set Λ of characteristic roots, checks whether a parametrized family unfolds
the reduced matrix versally, and synthesizes mini-versal unfoldings.
"""

from .errors import (
    AmbiguousRankError,
    CoefficientSolveError,
    DelaySelectionError,
    DimensionMismatchError,
    InvalidBasisError,
    NewtonDivergenceError,
    NotACharacteristicRootError,
    ProblemFormatError,
    RealnessError,
    ResonanceError,
    SingularPairingError,
    SynthesisError,
    UnfoldingError,
)
from .matalg import (
    build_E_map,
    build_kerTstar_basis,
    build_Pi,
    build_rangeT_basis,
    build_W_basis,
    gamma_project,
    oblique_indices,
)
from .model import (
    DelayAtom,
    DirectionOperator,
    LinearRFDE,
    ParametrizedFamily,
    apply_to_basis,
    char_matrix,
)
from .settings import UnfoldSettings, configure_logging
from .spectral import (
    JordanSpec,
    SpectralBases,
    basis_change,
    bilinear_form,
    compute_bases,
    jordan_structure,
    left_basis,
    normalize,
    right_basis,
)
from .synthesis import (
    RealUnfoldingFamily,
    UnfoldingFamily,
    decomplexify,
    select_delays,
    simplify_scalar,
    solve_coefficients,
    synthesize,
)
from .versality import VersalityReport, build_S_and_check, direction_matrices, theta_flatten

__version__ = "1.0.0"

__all__ = [
    "AmbiguousRankError",
    "CoefficientSolveError",
    "DelaySelectionError",
    "DimensionMismatchError",
    "InvalidBasisError",
    "NewtonDivergenceError",
    "NotACharacteristicRootError",
    "ProblemFormatError",
    "RealnessError",
    "ResonanceError",
    "SingularPairingError",
    "SynthesisError",
    "UnfoldingError",
    "build_E_map",
    "build_kerTstar_basis",
    "build_Pi",
    "build_rangeT_basis",
    "build_W_basis",
    "gamma_project",
    "oblique_indices",
    "DelayAtom",
    "DirectionOperator",
    "LinearRFDE",
    "ParametrizedFamily",
    "apply_to_basis",
    "char_matrix",
    "UnfoldSettings",
    "configure_logging",
    "JordanSpec",
    "SpectralBases",
    "basis_change",
    "bilinear_form",
    "compute_bases",
    "jordan_structure",
    "left_basis",
    "normalize",
    "right_basis",
    "RealUnfoldingFamily",
    "UnfoldingFamily",
    "decomplexify",
    "select_delays",
    "simplify_scalar",
    "solve_coefficients",
    "synthesize",
    "VersalityReport",
    "build_S_and_check",
    "direction_matrices",
    "theta_flatten",
]
