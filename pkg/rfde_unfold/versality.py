"""
Sufficient criterion for Λ-versality of a parametrized family.

S stacks the c² commutator rows Θ([B, E_ij]) on top of the p direction rows
Θ(Ψ(0)∂ℒ/∂α_i(Φ)); the family is Λ-versal when S has rank c² and mini-versal
when, in addition, the commutator rows alone have rank c² − p.
"""

from typing import List, Optional, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, Field

from .matalg import commutator
from .model import ParametrizedFamily, apply_to_basis
from .numerics import numerical_rank
from .spectral import SpectralBases

logger = structlog.get_logger()

NOT_SHOWN = "not shown versal by this criterion"


class VersalityReport(BaseModel):
    """Outcome of the rank test on S."""

    c: int = Field(..., description="Dimension of the reduced system")
    p: int = Field(..., description="Number of parameters")
    rank_S: int = Field(..., description="Numerical rank of S")
    commutator_rank: int = Field(..., description="Rank of the first c² rows of S")
    versal: bool = Field(..., description="rank_S == c²")
    miniversal: bool = Field(..., description="versal and commutator_rank == c² − p")
    codim: int = Field(..., description="c² − commutator_rank, the codimension of the orbit of B")
    singular_value_gap: float = Field(..., description="Smallest kept over largest dropped singular value of S")
    ambiguous: bool = Field(False, description="Whether a singular value of S lies near the threshold")
    rank_tol: float = Field(..., description="Relative tolerance used for the decisions")
    verdict: str = Field(..., description="Human-readable verdict")


def theta_flatten(M: np.ndarray) -> np.ndarray:
    """Θ(E_ij) = e_{(i−1)c+j}: row-major flattening."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"theta_flatten expects a square matrix, got shape {M.shape}")
    return M.reshape(-1).copy()


def direction_matrices(family: ParametrizedFamily, bases: SpectralBases) -> List[np.ndarray]:
    """Ψ(0)·L_i(Φ) for every direction operator L_i of the family."""
    if family.base.n != bases.n:
        raise ValueError(f"family has n={family.base.n} but the bases have n={bases.n}")
    return [bases.psi0 @ apply_to_basis(direction, bases) for direction in family.directions]


def commutator_rows(B: np.ndarray) -> np.ndarray:
    """The c²×c² block of S: Θ([B, E_ij]) for (i, j) in row-major order."""
    B = np.asarray(B)
    c = B.shape[0]
    rows = np.zeros((c * c, c * c), dtype=complex)
    for i in range(c):
        for j in range(c):
            unit = np.zeros((c, c), dtype=complex)
            unit[i, j] = 1.0
            rows[i * c + j] = theta_flatten(commutator(B, unit))
    return rows


def build_S(B: np.ndarray, directions: Sequence[np.ndarray]) -> np.ndarray:
    c = np.asarray(B).shape[0]
    direction_rows = [theta_flatten(D) for D in directions]
    if direction_rows:
        return np.vstack([commutator_rows(B), np.array(direction_rows)])
    return commutator_rows(B).reshape(c * c, c * c)


def build_S_and_check(
    B: np.ndarray,
    directions: Sequence[np.ndarray],
    rank_tol: float = 1e-8,
    ambiguity_factor: float = 100.0,
) -> VersalityReport:
    """
    Assemble S and decide versality and mini-versality.

    Args:
        B: Reduced matrix
        directions: The c×c matrices Ψ(0)·L_i(Φ)
        rank_tol: Relative singular-value threshold

    Returns:
        VersalityReport
    """
    B = np.asarray(B)
    c = B.shape[0]
    for D in directions:
        if np.asarray(D).shape != (c, c):
            raise ValueError(f"direction matrices must be {c}x{c}")
    p = len(directions)

    S = build_S(B, directions)
    decision = numerical_rank(S, rank_tol, "S", ambiguity_factor)
    commutator_decision = numerical_rank(S[: c * c], rank_tol, "commutator rows", ambiguity_factor)

    versal = decision.rank == c * c
    miniversal = versal and commutator_decision.rank == c * c - p
    if miniversal:
        verdict = "mini-versal"
    elif versal:
        verdict = "versal"
    else:
        verdict = NOT_SHOWN

    report = VersalityReport(
        c=c,
        p=p,
        rank_S=decision.rank,
        commutator_rank=commutator_decision.rank,
        versal=versal,
        miniversal=miniversal,
        codim=c * c - commutator_decision.rank,
        singular_value_gap=decision.gap,
        ambiguous=decision.ambiguous or commutator_decision.ambiguous,
        rank_tol=rank_tol,
        verdict=verdict,
    )
    logger.info("Versality checked", rank_S=report.rank_S, c=c, p=p, verdict=verdict, gap=report.singular_value_gap)
    return report


def check_family(
    family: ParametrizedFamily,
    bases: SpectralBases,
    rank_tol: float = 1e-8,
    ambiguity_factor: float = 100.0,
) -> VersalityReport:
    """direction_matrices followed by build_S_and_check."""
    return build_S_and_check(bases.B, direction_matrices(family, bases), rank_tol, ambiguity_factor)
