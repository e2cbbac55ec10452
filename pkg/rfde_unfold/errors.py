"""
Exception hierarchy for the unfolding library.

Every error raised by the library derives from UnfoldingError, which is a
ValueError so callers that only guard against bad input keep working.
"""


class UnfoldingError(ValueError):
    """Base class for all library errors."""


class DimensionMismatchError(UnfoldingError):
    """Matrices or operators with incompatible shapes were combined."""


class NotACharacteristicRootError(UnfoldingError):
    """A requested eigenvalue is not a root of det Δ(λ)."""


class AmbiguousRankError(UnfoldingError):
    """A singular value fell inside the ambiguity band around the rank threshold."""


class SingularPairingError(UnfoldingError):
    """The bilinear form between the left and right bases is not invertible."""


class InvalidBasisError(UnfoldingError):
    """A basis violates a structural property (e.g. rank-deficient block-end rows)."""


class DelaySelectionError(UnfoldingError):
    """No set of grid points gives col(Φ(τ_j)) full column rank."""


class CoefficientSolveError(UnfoldingError):
    """The coefficient system for a direction operator could not be solved."""


class SynthesisError(UnfoldingError):
    """A synthesized family failed one of its postconditions."""


class RealnessError(UnfoldingError):
    """Decomplexification preconditions failed or a real block had imaginary residue."""


class ResonanceError(UnfoldingError):
    """A double Hopf candidate has resonant frequencies."""


class NewtonDivergenceError(UnfoldingError):
    """A Newton iteration did not converge."""


class ProblemFormatError(UnfoldingError):
    """A problem file is not valid JSON or does not follow the schema."""
