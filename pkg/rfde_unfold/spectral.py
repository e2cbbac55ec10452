"""
Spectral reduction of a linear RFDE onto the generalized eigenspace of Λ.

The Jordan structure at each λ ∈ Λ is read off the kernels of the block
lower-triangular Toeplitz chain matrices built from Δ(λ)/0!, Δ′(λ)/1!, ...;
right chains give Φ(0), right chains of the transposed equation give the
left basis Ψ*(0), and the adjoint bilinear form normalizes the pair.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import structlog

from .errors import InvalidBasisError, NotACharacteristicRootError, SingularPairingError
from .model import LinearRFDE, char_matrix, taylor_coefficients
from .numerics import RankDecision, max_abs, null_space, numerical_rank, orthonormal_span
from .settings import UnfoldSettings

logger = structlog.get_logger()

# roots supplied to this accuracy are kept as given
_EXACT_ROOT = 1e-13


@dataclass(frozen=True, eq=False)
class JordanSpec:
    """
    Jordan structure of the reduced matrix B.

    Block sizes are stored per eigenvalue in nonincreasing order. Offsets
    follow N_0 = 0, N_j = N_{j−1} + Σ_ℓ n_{j,ℓ} (0-based here: offsets[j] is the
    first row of eigenvalue j).
    """

    eigenvalues: Tuple[complex, ...]
    block_sizes: Tuple[Tuple[int, ...], ...]
    rank_decisions: Tuple[RankDecision, ...] = field(default=(), repr=False)

    def __post_init__(self):
        eigenvalues = tuple(complex(lam) for lam in self.eigenvalues)
        block_sizes = tuple(tuple(int(size) for size in sizes) for sizes in self.block_sizes)
        if not eigenvalues:
            raise ValueError("at least one eigenvalue is required")
        if len(eigenvalues) != len(block_sizes):
            raise ValueError("one list of block sizes per eigenvalue is required")
        for sizes in block_sizes:
            if not sizes or any(size < 1 for size in sizes):
                raise ValueError("block sizes must be positive and nonempty")
            if any(a < b for a, b in zip(sizes, sizes[1:])):
                raise ValueError(f"block sizes must be nonincreasing, got {sizes}")
        if len(set(eigenvalues)) != len(eigenvalues):
            raise ValueError("eigenvalues must be distinct")
        object.__setattr__(self, "eigenvalues", eigenvalues)
        object.__setattr__(self, "block_sizes", block_sizes)
        object.__setattr__(self, "rank_decisions", tuple(self.rank_decisions))

    @property
    def r(self) -> int:
        return len(self.eigenvalues)

    @property
    def k(self) -> List[int]:
        return [len(sizes) for sizes in self.block_sizes]

    @property
    def c(self) -> int:
        return sum(sum(sizes) for sizes in self.block_sizes)

    @property
    def offsets(self) -> List[int]:
        offsets = [0]
        for sizes in self.block_sizes:
            offsets.append(offsets[-1] + sum(sizes))
        return offsets

    @property
    def delta(self) -> int:
        return sum(
            (2 * ell - 1) * size
            for sizes in self.block_sizes
            for ell, size in enumerate(sizes, start=1)
        )

    def block_start(self, j: int, ell: int) -> int:
        """First global row of block ell (0-based) of eigenvalue j."""
        return self.offsets[j] + sum(self.block_sizes[j][:ell])

    def block_end_rows(self, j: int) -> List[int]:
        """Last row of every block of eigenvalue j, in block order."""
        return [self.block_start(j, ell) + size - 1 for ell, size in enumerate(self.block_sizes[j])]

    def blocks(self):
        """Yield (j, ell, start, size) for every Jordan block in layout order."""
        for j, sizes in enumerate(self.block_sizes):
            for ell, size in enumerate(sizes):
                yield j, ell, self.block_start(j, ell), size

    def jordan_matrix(self) -> np.ndarray:
        B = np.zeros((self.c, self.c), dtype=complex)
        for j, _, start, size in self.blocks():
            for i in range(size):
                B[start + i, start + i] = self.eigenvalues[j]
                if i + 1 < size:
                    B[start + i, start + i + 1] = 1.0
        return B

    def summary(self) -> dict:
        return {
            "eigenvalues": list(self.eigenvalues),
            "block_sizes": [list(sizes) for sizes in self.block_sizes],
            "c": self.c,
            "k": self.k,
            "offsets": self.offsets,
            "delta": self.delta,
        }


@dataclass(frozen=True, eq=False)
class SpectralBases:
    """Φ(0), Ψ(0) and B with Φ(θ) = Φ(0)e^{Bθ} and Ψ(s) = e^{−Bs}Ψ(0)."""

    phi0: np.ndarray
    psi0: np.ndarray
    B: np.ndarray
    spec: JordanSpec
    pairing_condition: float = float("nan")

    @property
    def n(self) -> int:
        return self.phi0.shape[0]

    @property
    def c(self) -> int:
        return self.phi0.shape[1]

    def phi_at(self, theta: float) -> np.ndarray:
        return self.phi0 @ matrix_exp_jordan(self.B, theta)

    def psi_at(self, s: float) -> np.ndarray:
        return matrix_exp_jordan(self.B, -s) @ self.psi0


def _jordan_blocks_of(B: np.ndarray) -> Optional[List[Tuple[int, int]]]:
    """(start, size) of each Jordan block when B is in Jordan form, else None."""
    c = B.shape[0]
    off = B - np.diag(np.diag(B)) - np.diag(np.diag(B, 1), 1)
    if np.any(off != 0):
        return None
    superdiagonal = np.diag(B, 1)
    if np.any((superdiagonal != 0) & (superdiagonal != 1)):
        return None
    blocks, start = [], 0
    for i in range(c):
        if i == c - 1 or superdiagonal[i] == 0:
            blocks.append((start, i - start + 1))
            start = i + 1
        elif B[i, i] != B[i + 1, i + 1]:
            return None
    return blocks


def matrix_exp_jordan(B: np.ndarray, t: float) -> np.ndarray:
    """
    e^{Bt} in closed form when B is a Jordan matrix.

    Each block contributes e^{λt}·Σ_m (tN)^m/m!. Matrices not in Jordan form
    (for instance transported bases) fall back to scipy.linalg.expm.
    """
    B = np.asarray(B, dtype=complex)
    c = B.shape[0]
    blocks = _jordan_blocks_of(B)
    if blocks is None:
        return scipy.linalg.expm(B * t)

    result = np.zeros((c, c), dtype=complex)
    for start, size in blocks:
        scale = np.exp(B[start, start] * t)
        term = 1.0
        for m in range(size):
            if m:
                term = term * t / m
            idx = np.arange(start, start + size - m)
            result[idx, idx + m] = scale * term
    return result


def root_smallness(rfde: LinearRFDE, lam: complex) -> float:
    """σ_min(Δ(λ)) relative to max(σ_max, 1)."""
    singular_values = scipy.linalg.svd(char_matrix(rfde, lam), compute_uv=False)
    return float(singular_values[-1] / max(singular_values[0], 1.0))


def newton_step(rfde: LinearRFDE, lam: complex) -> Optional[complex]:
    """Newton correction for det Δ: 1 / tr(Δ^{-1}Δ′), or None when Δ is singular."""
    try:
        trace = np.trace(np.linalg.solve(char_matrix(rfde, lam), char_matrix(rfde, lam, 1)))
    except np.linalg.LinAlgError:
        return None
    if trace == 0 or not np.isfinite(trace):
        return None
    return 1.0 / trace


def newton_root(rfde: LinearRFDE, lam: complex, max_iter: int = 50, step_tol: float = 1e-14) -> complex:
    """Newton iteration on det Δ(λ) = 0 from lam."""
    current = complex(lam)
    for _ in range(max_iter):
        step = newton_step(rfde, current)
        if step is None:
            break
        current -= step
        if abs(step) <= step_tol * max(1.0, abs(current)):
            break
    return current


def refine_root(rfde: LinearRFDE, lam: complex, settings: UnfoldSettings) -> complex:
    """
    Return lam if it is a characteristic root to root_tol, else its Newton refinement.

    Raises:
        NotACharacteristicRootError: if refinement does not reach a root
    """
    lam = complex(lam)
    smallness = root_smallness(rfde, lam)
    if smallness <= _EXACT_ROOT:
        return lam

    refined = newton_root(rfde, lam, settings.newton_max_iter)
    refined_smallness = root_smallness(rfde, refined)
    if refined_smallness < settings.root_tol and refined_smallness <= smallness:
        logger.info("Eigenvalue refined", requested=lam, refined=refined, residual=refined_smallness)
        return refined
    if smallness < settings.root_tol:
        return lam

    raise NotACharacteristicRootError(
        f"{lam} is not a characteristic root: σ_min(Δ) ratio {smallness:.3e} "
        f"(after Newton {refined_smallness:.3e}) exceeds root_tol={settings.root_tol}"
    )


def canonical_order(rfde: LinearRFDE, lambdas: Sequence[complex], tol: float) -> List[complex]:
    """
    Order Λ for a real equation: real eigenvalues by descending real part, then
    the upper half plane by ascending imaginary part, then their conjugates in
    the same order. Sets that are not closed under conjugation, or complex
    equations, keep the given order.
    """
    lambdas = [complex(lam) for lam in lambdas]
    if not rfde.is_real:
        return lambdas

    def is_real(lam):
        return abs(lam.imag) <= tol * max(1.0, abs(lam))

    reals = [complex(lam.real, 0.0) for lam in lambdas if is_real(lam)]
    uppers = [lam for lam in lambdas if not is_real(lam) and lam.imag > 0]
    lowers = [lam for lam in lambdas if not is_real(lam) and lam.imag < 0]
    if len(uppers) != len(lowers):
        return lambdas

    unmatched = list(lowers)
    for upper in uppers:
        distances = [abs(upper.conjugate() - lower) for lower in unmatched]
        if not distances or min(distances) > tol * max(1.0, abs(upper)):
            return lambdas
        unmatched.pop(int(np.argmin(distances)))

    reals.sort(key=lambda lam: -lam.real)
    uppers.sort(key=lambda lam: (lam.imag, lam.real))
    return reals + uppers + [lam.conjugate() for lam in uppers]


def chain_matrix(rfde: LinearRFDE, lam: complex, length: int) -> np.ndarray:
    """
    Block lower-triangular Toeplitz matrix T_m = [Δ^{(i−j)}(λ)/(i−j)!].

    Its kernel holds the Jordan chains (φ_0, …, φ_{m−1}) truncated at length m,
    so dim ker T_m = Σ_ℓ min(m, n_ℓ).
    """
    n = rfde.n
    coefficients = taylor_coefficients(rfde, lam, length)
    T = np.zeros((n * length, n * length), dtype=complex)
    for i in range(length):
        for j in range(i + 1):
            T[i * n:(i + 1) * n, j * n:(j + 1) * n] = coefficients[i - j]
    return T


def _block_sizes_at(rfde: LinearRFDE, lam: complex, settings: UnfoldSettings):
    decisions = []
    kernel_dims = [0]
    length = 0
    while True:
        length += 1
        if length > settings.max_chain_length:
            raise InvalidBasisError(f"Jordan chains at {lam} exceed max_chain_length={settings.max_chain_length}")
        decision = numerical_rank(
            chain_matrix(rfde, lam, length),
            settings.rank_tol,
            label=f"T_{length}({lam})",
            ambiguity_factor=settings.ambiguity_factor,
            strict=True,
        )
        decisions.append(decision)
        kernel_dims.append(rfde.n * length - decision.rank)
        if kernel_dims[-1] - kernel_dims[-2] == 0:
            break

    # at_least[m] = number of blocks of size ≥ m
    at_least = [kernel_dims[m] - kernel_dims[m - 1] for m in range(1, len(kernel_dims))] + [0]
    sizes = []
    for m in range(len(at_least) - 1, 0, -1):
        sizes.extend([m] * (at_least[m - 1] - at_least[m]))
    return tuple(sizes), decisions


def jordan_structure(
    rfde: LinearRFDE,
    lambdas: Sequence[complex],
    rank_tol: Optional[float] = None,
    settings: Optional[UnfoldSettings] = None,
) -> JordanSpec:
    """
    Recover the Jordan structure of the reduced matrix at each λ ∈ Λ.

    Args:
        rfde: The delay equation
        lambdas: Characteristic roots to reduce onto
        rank_tol: Overrides settings.rank_tol when given
        settings: Tolerances (defaults from the environment)

    Returns:
        JordanSpec with eigenvalues in canonical order

    Raises:
        NotACharacteristicRootError: if some λ is not a root
        AmbiguousRankError: if a chain-matrix rank is ambiguous
    """
    settings = (settings or UnfoldSettings()).merged({"rank_tol": rank_tol})
    if not lambdas:
        raise ValueError("Λ must contain at least one eigenvalue")

    refined = [refine_root(rfde, lam, settings) for lam in lambdas]
    ordered = canonical_order(rfde, refined, settings.root_tol)
    for a in range(len(ordered)):
        for b in range(a):
            if abs(ordered[a] - ordered[b]) <= settings.root_tol * max(1.0, abs(ordered[a])):
                raise ValueError(f"eigenvalues {ordered[b]} and {ordered[a]} coincide")

    all_sizes, all_decisions = [], []
    for lam in ordered:
        sizes, decisions = _block_sizes_at(rfde, lam, settings)
        all_sizes.append(sizes)
        all_decisions.extend(decisions)
        logger.info("Jordan structure found", eigenvalue=lam, block_sizes=list(sizes))

    return JordanSpec(tuple(ordered), tuple(all_sizes), tuple(all_decisions))


def _scale_chain(chain: np.ndarray) -> np.ndarray:
    """Scale so the first eigenvector entry of at least half the maximal modulus is 1."""
    eigenvector = chain[0]
    moduli = np.abs(eigenvector)
    pivot = int(np.argmax(moduli >= 0.5 * moduli.max()))
    return chain / eigenvector[pivot]


def _canonical_chains(
    rfde: LinearRFDE,
    lam: complex,
    sizes: Sequence[int],
    settings: UnfoldSettings,
) -> List[np.ndarray]:
    """
    A canonical system of Jordan chains at lam, longest first.

    Each chain is returned as a (size × n) array (φ_0, …, φ_{size−1}). Chains of
    one length are projections of the kernel of T_size chosen so that their
    eigenvectors are independent of the eigenvectors already selected.
    """
    n = rfde.n
    real = rfde.is_real and complex(lam).imag == 0
    chains: List[np.ndarray] = []
    eigenvectors = np.zeros((n, 0), dtype=float if real else complex)

    for size in sorted(set(sizes), reverse=True):
        count = list(sizes).count(size)
        T = chain_matrix(rfde, lam, size)
        if real:
            T = T.real
        kernel, _ = null_space(
            T,
            settings.rank_tol,
            label=f"chains({lam}, {size})",
            ambiguity_factor=settings.ambiguity_factor,
        )
        leading = kernel[:n, :]
        if eigenvectors.shape[1]:
            span = orthonormal_span(eigenvectors, settings.rank_tol)
            leading = leading - span @ (span.conj().T @ leading)

        _, singular_values, vh = scipy.linalg.svd(leading)
        if singular_values.size < count or singular_values[count - 1] <= settings.rank_tol * max(singular_values[0], 1.0):
            raise InvalidBasisError(f"cannot find {count} independent chains of length {size} at {lam}")

        coefficients = vh[:count].conj().T
        for column in range(count):
            chain = _scale_chain((kernel @ coefficients[:, column]).reshape(size, n))
            chains.append(chain)
            eigenvectors = np.hstack([eigenvectors, chain[0][:, None]])

    return chains


def _chains_per_eigenvalue(rfde: LinearRFDE, spec: JordanSpec, settings: UnfoldSettings):
    """Chains for every eigenvalue, reusing conjugates for real equations."""
    per_eigenvalue: List[List[np.ndarray]] = []
    for j, lam in enumerate(spec.eigenvalues):
        partner = None
        if rfde.is_real and lam.imag != 0:
            for i in range(j):
                if spec.eigenvalues[i] == lam.conjugate() and spec.block_sizes[i] == spec.block_sizes[j]:
                    partner = i
                    break
        if partner is not None:
            per_eigenvalue.append([chain.conj() for chain in per_eigenvalue[partner]])
        else:
            per_eigenvalue.append(_canonical_chains(rfde, lam, spec.block_sizes[j], settings))
    return per_eigenvalue


def right_basis(rfde: LinearRFDE, spec: JordanSpec, settings: Optional[UnfoldSettings] = None) -> np.ndarray:
    """
    Φ(0): Jordan chains of Δ as columns, block by block in the layout of B.

    Returns:
        Complex n×c matrix
    """
    settings = settings or UnfoldSettings()
    columns = []
    for chains in _chains_per_eigenvalue(rfde, spec, settings):
        for chain in chains:
            columns.extend(chain)
    return np.array(columns, dtype=complex).T


def left_basis(rfde: LinearRFDE, spec: JordanSpec, settings: Optional[UnfoldSettings] = None) -> np.ndarray:
    """
    Ψ*(0): left chains of Δ as rows, unnormalized.

    Left chains are right chains of the transposed equation read in reverse,
    so the last row of each block is a left eigenvector ψΔ(λ) = 0.

    Returns:
        Complex c×n matrix
    """
    settings = settings or UnfoldSettings()
    rows = []
    for chains in _chains_per_eigenvalue(rfde.transposed(), spec, settings):
        for chain in chains:
            rows.extend(chain[::-1])
    return np.array(rows, dtype=complex)


def bilinear_form(psi_rows: np.ndarray, phi_cols: np.ndarray, rfde: LinearRFDE, B: np.ndarray) -> np.ndarray:
    """
    Adjoint bilinear form (Ψ, Φ)_n for Ψ(s) = e^{−Bs}Ψ(0), Φ(θ) = Φ(0)e^{Bθ}.

    (Ψ,Φ)_n = Ψ(0)Φ(0) + Σ_k ∫_{−τ_k}^0 e^{−B(ξ+τ_k)} Ψ(0)A_kΦ(0) e^{Bξ} dξ, each
    integral being the top-right block of expm([[−B, M], [0, −B]]·τ_k).
    """
    psi_rows = np.asarray(psi_rows, dtype=complex)
    phi_cols = np.asarray(phi_cols, dtype=complex)
    B = np.asarray(B, dtype=complex)
    c = B.shape[0]
    if psi_rows.shape != (c, rfde.n) or phi_cols.shape != (rfde.n, c):
        raise ValueError(
            f"basis shapes {psi_rows.shape} and {phi_cols.shape} do not match n={rfde.n}, c={c}"
        )

    form = psi_rows @ phi_cols
    zero = np.zeros((c, c), dtype=complex)
    for atom in rfde.atoms:
        if atom.tau == 0:
            continue
        coupling = psi_rows @ atom.A @ phi_cols
        generator = np.block([[-B, coupling], [zero, -B]]) * atom.tau
        form = form + scipy.linalg.expm(generator)[:c, c:]
    return form


def normalize(
    psi_star0: np.ndarray,
    phi0: np.ndarray,
    rfde: LinearRFDE,
    spec: JordanSpec,
    settings: Optional[UnfoldSettings] = None,
    verify: bool = True,
) -> SpectralBases:
    """
    Ψ(0) = (Ψ*, Φ)^{-1} Ψ*(0), so that (Ψ, Φ)_n = I_c.

    Args:
        psi_star0: Unnormalized left basis at s = 0
        phi0: Right basis at θ = 0
        rfde: The delay equation
        spec: Jordan structure (defines B)
        settings: Tolerances
        verify: Recompute the form on the result and require the identity

    Raises:
        SingularPairingError: if (Ψ*, Φ) is singular or the recheck fails
    """
    settings = settings or UnfoldSettings()
    B = spec.jordan_matrix()
    pairing = bilinear_form(psi_star0, phi0, rfde, B)
    decision = numerical_rank(pairing, settings.rank_tol, "pairing", settings.ambiguity_factor)
    if decision.rank < spec.c:
        raise SingularPairingError(f"(Ψ*, Φ) has rank {decision.rank} < c={spec.c}")

    condition = float(np.linalg.cond(pairing))
    psi0 = scipy.linalg.solve(pairing, np.asarray(psi_star0, dtype=complex))
    logger.info("Bases normalized", c=spec.c, pairing_condition=condition)

    if verify:
        deviation = max_abs(bilinear_form(psi0, phi0, rfde, B) - np.eye(spec.c))
        if deviation > settings.pairing_tol:
            raise SingularPairingError(
                f"normalized pairing deviates from identity by {deviation:.3e} (> {settings.pairing_tol})"
            )

    return SpectralBases(
        phi0=np.asarray(phi0, dtype=complex),
        psi0=psi0,
        B=B,
        spec=spec,
        pairing_condition=condition,
    )


def compute_bases(
    rfde: LinearRFDE,
    lambdas: Sequence[complex],
    settings: Optional[UnfoldSettings] = None,
) -> SpectralBases:
    """Jordan structure, right and left chains and normalization in one call."""
    settings = settings or UnfoldSettings()
    spec = jordan_structure(rfde, lambdas, settings=settings)
    phi0 = right_basis(rfde, spec, settings)
    psi_star0 = left_basis(rfde, spec, settings)
    return normalize(psi_star0, phi0, rfde, spec, settings)


def basis_change(bases: SpectralBases, U: np.ndarray) -> SpectralBases:
    """Transported bases Φ·U, U^{-1}Ψ with B replaced by U^{-1}BU."""
    U = np.asarray(U, dtype=complex)
    U_inv = np.linalg.inv(U)
    return SpectralBases(
        phi0=bases.phi0 @ U,
        psi0=U_inv @ bases.psi0,
        B=U_inv @ bases.B @ U,
        spec=bases.spec,
        pairing_condition=bases.pairing_condition,
    )
