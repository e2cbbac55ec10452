"""
Combinatorics and linear algebra of Mat_{c×c} around the commutator map 𝒯(M) = [B, M].

Inside the diagonal block of one eigenvalue, every pair of Jordan blocks
(ξ, λ) contributes min(n_ξ, n_λ) oblique segments: diagonals of the
(n_ξ × n_λ) sub-block on which matrices commuting with B* are constant. A
segment is identified by the column label m ∈ 𝒬(ξ, λ) of its bottom entry,
which sits in the last row of block ξ and column n_λ − m + 1 (1-based) of
block λ. Ordering of every basis below is (j, ξ, λ, m) lexicographic.
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import structlog

from .errors import InvalidBasisError
from .numerics import RankDecision, min_norm_solve, numerical_rank, stack_flattened
from .settings import UnfoldSettings
from .spectral import JordanSpec

logger = structlog.get_logger()


@dataclass(frozen=True)
class ObliqueIndex:
    """Label of one oblique segment (all indices 1-based, as in the layout of B)."""

    j: int
    xi: int
    lam: int
    m: int

    def sizes(self, spec: JordanSpec) -> Tuple[int, int]:
        return spec.block_sizes[self.j - 1][self.xi - 1], spec.block_sizes[self.j - 1][self.lam - 1]

    def origin(self, spec: JordanSpec) -> Tuple[int, int]:
        """Global (row, column) of the top-left corner of sub-block (ξ, λ)."""
        return spec.block_start(self.j - 1, self.xi - 1), spec.block_start(self.j - 1, self.lam - 1)

    def bottom(self, spec: JordanSpec) -> Tuple[int, int]:
        """Global 0-based position of the segment's bottom entry."""
        n_xi, n_lam = self.sizes(spec)
        row0, col0 = self.origin(spec)
        return row0 + n_xi - 1, col0 + n_lam - self.m

    def entries(self, spec: JordanSpec) -> List[Tuple[int, int]]:
        """Global 0-based positions along the segment, bottom entry first."""
        n_xi, n_lam = self.sizes(spec)
        row, col = self.bottom(spec)
        length = min(n_xi, n_lam - self.m + 1)
        return [(row - t, col - t) for t in range(length)]

    def label(self) -> str:
        return f"j={self.j},xi={self.xi},lam={self.lam},m={self.m}"


@dataclass(frozen=True, eq=False)
class MatrixBasis:
    """A list of c×c matrices with a tag naming the subspace they span."""

    elements: Tuple[np.ndarray, ...]
    tag: str
    labels: Tuple[object, ...] = ()

    def __len__(self) -> int:
        return len(self.elements)

    def as_columns(self) -> np.ndarray:
        """c²×count matrix of row-major flattenings."""
        return stack_flattened(self.elements)


def column_labels(n_xi: int, n_lam: int) -> List[int]:
    """𝒬(ξ, λ): {1..n_λ} if n_ξ ≥ n_λ, else {n_λ − n_ξ + 1..n_λ}."""
    if n_xi >= n_lam:
        return list(range(1, n_lam + 1))
    return list(range(n_lam - n_xi + 1, n_lam + 1))


def oblique_indices(spec: JordanSpec) -> List[ObliqueIndex]:
    """Every oblique segment in (j, ξ, λ, m) order; there are δ of them."""
    indices = []
    for j, sizes in enumerate(spec.block_sizes, start=1):
        for xi, n_xi in enumerate(sizes, start=1):
            for lam, n_lam in enumerate(sizes, start=1):
                for m in column_labels(n_xi, n_lam):
                    indices.append(ObliqueIndex(j, xi, lam, m))
    return indices


def commutator(B: np.ndarray, M: np.ndarray) -> np.ndarray:
    """𝒯(M) = BM − MB."""
    B = np.asarray(B)
    M = np.asarray(M)
    if B.shape != M.shape or B.shape[0] != B.shape[1]:
        raise ValueError(f"commutator needs equal square matrices, got {B.shape} and {M.shape}")
    return B @ M - M @ B


def _unit(c: int, row: int, col: int) -> np.ndarray:
    E = np.zeros((c, c), dtype=complex)
    E[row, col] = 1.0
    return E


def build_W_basis(spec: JordanSpec) -> MatrixBasis:
    """Complement 𝒲 of range(𝒯): one unit matrix at the bottom of each segment."""
    indices = oblique_indices(spec)
    elements = tuple(_unit(spec.c, *index.bottom(spec)) for index in indices)
    return MatrixBasis(elements, "W", tuple(indices))


def build_kerTstar_basis(spec: JordanSpec) -> MatrixBasis:
    """ker(𝒯*) for 𝒯*(M) = [B*, M]: ones along each oblique segment."""
    elements = []
    indices = oblique_indices(spec)
    for index in indices:
        M = np.zeros((spec.c, spec.c), dtype=complex)
        for row, col in index.entries(spec):
            M[row, col] = 1.0
        elements.append(M)
    return MatrixBasis(tuple(elements), "kerTstar", tuple(indices))


def _segment_map(spec: JordanSpec):
    """Map each in-segment position to (segment index, is_bottom, bottom position)."""
    lookup = {}
    for index in oblique_indices(spec):
        bottom = index.bottom(spec)
        for position in index.entries(spec):
            lookup[position] = (index, position == bottom, bottom)
    return lookup


def _eigenvalue_of_rows(spec: JordanSpec) -> np.ndarray:
    owner = np.zeros(spec.c, dtype=int)
    offsets = spec.offsets
    for j in range(spec.r):
        owner[offsets[j]:offsets[j + 1]] = j
    return owner


def build_rangeT_basis(spec: JordanSpec) -> MatrixBasis:
    """
    Basis of range(𝒯): matrices whose segment sums all vanish.

    Elements are unit matrices off the segments (including every entry of the
    off-diagonal eigenvalue blocks) and, for each segment entry other than its
    bottom, the difference E_entry − E_bottom. There are c² − δ of them.
    """
    c = spec.c
    owner = _eigenvalue_of_rows(spec)
    segments = _segment_map(spec)
    elements, labels = [], []
    for row in range(c):
        for col in range(c):
            if owner[row] != owner[col] or (row, col) not in segments:
                elements.append(_unit(c, row, col))
                labels.append(("single", row, col))
                continue
            _, is_bottom, bottom = segments[(row, col)]
            if is_bottom:
                continue
            element = _unit(c, row, col)
            element[bottom] = -1.0
            elements.append(element)
            labels.append(("pair", row, col))
    return MatrixBasis(tuple(elements), "rangeT", tuple(labels))


def gamma_project(Z: np.ndarray, spec: JordanSpec) -> np.ndarray:
    """
    Γ(Z): the 𝒲-component of Z in Mat = range(𝒯) ⊕ 𝒲.

    Off-diagonal eigenvalue blocks are dropped and each segment's entries are
    summed into its bottom entry.
    """
    Z = np.asarray(Z)
    if Z.shape != (spec.c, spec.c):
        raise ValueError(f"expected a {spec.c}x{spec.c} matrix, got {Z.shape}")
    projected = np.zeros((spec.c, spec.c), dtype=complex)
    for index in oblique_indices(spec):
        total = sum(Z[position] for position in index.entries(spec))
        projected[index.bottom(spec)] = total
    return projected


def build_Pi(psi0: np.ndarray, spec: JordanSpec, settings: Optional[UnfoldSettings] = None) -> List[np.ndarray]:
    """
    Π_j: the block-end rows of Ψ(0) for eigenvalue j stacked into a k_j×n matrix.

    Raises:
        InvalidBasisError: if some Π_j is not of full row rank k_j
    """
    settings = settings or UnfoldSettings()
    psi0 = np.asarray(psi0)
    projections = []
    for j in range(spec.r):
        Pi = psi0[spec.block_end_rows(j), :]
        decision = numerical_rank(Pi, settings.rank_tol, f"Pi_{j + 1}", settings.ambiguity_factor)
        if decision.rank < Pi.shape[0]:
            raise InvalidBasisError(
                f"Π_{j + 1} has rank {decision.rank} < k_{j + 1}={Pi.shape[0]}: "
                "block-end rows of Ψ(0) are dependent"
            )
        projections.append(Pi)
    return projections


@dataclass(frozen=True, eq=False)
class EMap:
    """ℰ: 𝒲 → ℛ(Ψ(0)), Ω ↦ Ψ(0)R, with the R matrices and vectors v_{j,ℓ}."""

    w_basis: MatrixBasis
    w_hat: MatrixBasis
    r_matrices: Tuple[np.ndarray, ...]
    v_vectors: Tuple[np.ndarray, ...]
    span_decision: RankDecision

    @property
    def indices(self) -> Tuple[ObliqueIndex, ...]:
        return self.w_basis.labels


def build_E_map(spec: JordanSpec, psi0: np.ndarray, settings: Optional[UnfoldSettings] = None) -> EMap:
    """
    Build R_{j;ξ,λ,m} and Ŵ = {Ψ(0)R} for every Ω_{j;ξ,λ,m} ∈ 𝒲.

    v_{j,ℓ} is the minimal-norm solution of Π_j v = e_ℓ. R carries v_{j,ξ} in
    the column of Ω's bottom entry and zeros elsewhere.

    Raises:
        InvalidBasisError: if range(𝒯) + Ŵ does not span Mat_{c×c}
    """
    settings = settings or UnfoldSettings()
    psi0 = np.asarray(psi0, dtype=complex)
    n = psi0.shape[1]
    projections = build_Pi(psi0, spec, settings)

    v_per_eigenvalue = []
    for j, Pi in enumerate(projections):
        k = Pi.shape[0]
        solution, _, residual = min_norm_solve(Pi, np.eye(k, dtype=complex), settings.rank_tol)
        if residual > settings.residual_tol:
            raise InvalidBasisError(f"Π_{j + 1} v = e_ℓ has residual {residual:.3e}")
        v_per_eigenvalue.append([solution[:, ell] for ell in range(k)])

    w_basis = build_W_basis(spec)
    r_matrices, w_hat, v_vectors = [], [], []
    for index in w_basis.labels:
        v = v_per_eigenvalue[index.j - 1][index.xi - 1]
        R = np.zeros((n, spec.c), dtype=complex)
        R[:, index.bottom(spec)[1]] = v
        r_matrices.append(R)
        v_vectors.append(v)
        w_hat.append(psi0 @ R)

    range_basis = build_rangeT_basis(spec)
    columns = [block for block in (range_basis.as_columns(), stack_flattened(w_hat)) if block.size]
    combined = np.hstack(columns) if columns else np.zeros((spec.c ** 2, 0), dtype=complex)
    decision = numerical_rank(combined, settings.rank_tol, "rangeT+What", settings.ambiguity_factor)
    if decision.rank < spec.c ** 2:
        raise InvalidBasisError(
            f"range(T) + Ŵ has rank {decision.rank} < c²={spec.c ** 2} (gap {decision.gap:.3e})"
        )

    logger.info("E map built", delta=len(w_hat), span_rank=decision.rank, gap=decision.gap)
    return EMap(
        w_basis=w_basis,
        w_hat=MatrixBasis(tuple(w_hat), "What", w_basis.labels),
        r_matrices=tuple(r_matrices),
        v_vectors=tuple(v_vectors),
        span_decision=decision,
    )


def direct_sum_rank(first: MatrixBasis, second: MatrixBasis, rank_tol: float) -> int:
    """Numerical rank of the two bases side by side (c² means a direct sum spanning Mat)."""
    columns = [basis.as_columns() for basis in (first, second) if len(basis)]
    if not columns:
        return 0
    return numerical_rank(np.hstack(columns), rank_tol, f"{first.tag}+{second.tag}").rank


def check_gamma_residual(Z: np.ndarray, spec: JordanSpec, rank_tol: float = 1e-12) -> float:
    """Least-squares residual of Z − Γ(Z) against span(range basis)."""
    difference = (np.asarray(Z) - gamma_project(Z, spec)).reshape(-1)
    basis = build_rangeT_basis(spec).as_columns()
    if basis.size == 0:
        return float(np.linalg.norm(difference))
    _, _, residual = min_norm_solve(basis, difference, rank_tol)
    return residual

