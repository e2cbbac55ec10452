"""
Rank-revealing helpers shared by the spectral, matrix-algebra and synthesis code.

All rank decisions go through numerical_rank so that every decision is logged
together with its singular-value gap and ambiguous gaps are never resolved
silently.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
import structlog

from .errors import AmbiguousRankError

logger = structlog.get_logger()


@dataclass(frozen=True, eq=False)
class RankDecision:
    """Outcome of a singular-value based rank decision."""

    label: str
    rank: int
    singular_values: np.ndarray
    threshold: float
    smallest_kept: float
    largest_dropped: float
    ambiguous: bool

    @property
    def gap(self) -> float:
        """Ratio between the smallest kept and the largest dropped singular value."""
        if self.largest_dropped == 0.0:
            return float("inf")
        return self.smallest_kept / self.largest_dropped

    def summary(self) -> dict:
        return {
            "label": self.label,
            "rank": self.rank,
            "threshold": self.threshold,
            "smallest_kept": self.smallest_kept,
            "largest_dropped": self.largest_dropped,
            "gap": self.gap,
            "ambiguous": self.ambiguous,
        }


def numerical_rank(
    matrix: np.ndarray,
    rank_tol: float,
    label: str = "",
    ambiguity_factor: float = 100.0,
    strict: bool = False,
) -> RankDecision:
    """
    Decide the numerical rank of a matrix from its singular values.

    A singular value counts when it exceeds rank_tol * σ_max. Values within a
    factor ambiguity_factor of that threshold (on either side) flag the
    decision as ambiguous.

    Args:
        matrix: Matrix to inspect (any shape, may be empty)
        rank_tol: Relative threshold
        label: Name used in log events
        ambiguity_factor: Width of the ambiguous band
        strict: Raise AmbiguousRankError instead of only flagging

    Returns:
        RankDecision with the rank and gap data
    """
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        return RankDecision(label, 0, np.zeros(0), 0.0, float("inf"), 0.0, False)

    singular_values = scipy.linalg.svd(matrix, compute_uv=False)
    sigma_max = float(singular_values[0]) if singular_values.size else 0.0
    if sigma_max == 0.0:
        decision = RankDecision(label, 0, singular_values, 0.0, float("inf"), 0.0, False)
        logger.debug("Rank decided", **decision.summary())
        return decision

    threshold = rank_tol * sigma_max
    rank = int(np.sum(singular_values > threshold))
    smallest_kept = float(singular_values[rank - 1]) if rank > 0 else float("inf")
    largest_dropped = float(singular_values[rank]) if rank < singular_values.size else 0.0

    low, high = threshold / ambiguity_factor, threshold * ambiguity_factor
    ambiguous = bool(np.any((singular_values > low) & (singular_values < high)))

    decision = RankDecision(
        label=label,
        rank=rank,
        singular_values=singular_values,
        threshold=threshold,
        smallest_kept=smallest_kept,
        largest_dropped=largest_dropped,
        ambiguous=ambiguous,
    )

    if ambiguous:
        logger.warning("Ambiguous rank decision", **decision.summary())
        if strict:
            raise AmbiguousRankError(
                f"rank of {label or 'matrix'} is ambiguous at rank_tol={rank_tol}: "
                f"kept {smallest_kept:.3e}, dropped {largest_dropped:.3e}"
            )
    else:
        logger.debug("Rank decided", **decision.summary())

    return decision


def null_space(
    matrix: np.ndarray,
    rank_tol: float,
    label: str = "",
    ambiguity_factor: float = 100.0,
    strict: bool = False,
) -> Tuple[np.ndarray, RankDecision]:
    """
    Orthonormal basis of the null space, consistent with numerical_rank.

    Returns:
        (columns spanning ker(matrix), the rank decision used)
    """
    matrix = np.asarray(matrix)
    decision = numerical_rank(matrix, rank_tol, label, ambiguity_factor, strict)
    _, _, vh = scipy.linalg.svd(matrix, full_matrices=True)
    basis = vh[decision.rank:].conj().T
    return basis, decision


def min_norm_solve(
    matrix: np.ndarray,
    rhs: np.ndarray,
    rank_tol: float,
) -> Tuple[np.ndarray, int, float]:
    """
    Minimal-norm least-squares solution of matrix @ x = rhs.

    Returns:
        (solution, effective rank, relative residual)
    """
    matrix = np.asarray(matrix)
    rhs = np.asarray(rhs)
    solution, _, rank, _ = scipy.linalg.lstsq(matrix, rhs, cond=rank_tol)
    residual = float(np.linalg.norm(matrix @ solution - rhs))
    scale = max(float(np.linalg.norm(rhs)), 1.0)
    return solution, int(rank), residual / scale


def orthonormal_span(columns: np.ndarray, rank_tol: float) -> np.ndarray:
    """Orthonormal basis of the column space at the given relative tolerance."""
    columns = np.asarray(columns)
    if columns.size == 0:
        return np.zeros((columns.shape[0], 0), dtype=complex)
    return scipy.linalg.orth(columns, rcond=rank_tol)


def stack_flattened(matrices, columns: bool = True) -> np.ndarray:
    """Stack row-major flattenings of equally sized matrices as columns (or rows)."""
    matrices = list(matrices)
    if not matrices:
        return np.zeros((0, 0), dtype=complex)
    flat = np.array([np.asarray(m).reshape(-1) for m in matrices])
    return flat.T if columns else flat


def max_abs(matrix: Optional[np.ndarray]) -> float:
    if matrix is None:
        return 0.0
    matrix = np.asarray(matrix)
    return float(np.max(np.abs(matrix))) if matrix.size else 0.0
