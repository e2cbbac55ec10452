"""
Construction of Λ-mini-versal unfoldings.

For every element Ω_m of the complement 𝒲 the map ℰ gives an n×c matrix R_m
with Ψ(0)R_m = ℰ(Ω_m). Choosing delay points θ_0 = 0 > θ_1 > ... for which
col(Φ(θ_j)) has rank c, each R_m is written as Σ_j A^m_j Φ(θ_j), and the
operator L_m(z) = Σ_j A^m_j z(θ_j) is one direction of the unfolding
ℒ(α) = ℒ₀ + Σ_m α_m L_m.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from .errors import (
    CoefficientSolveError,
    DelaySelectionError,
    RealnessError,
    SynthesisError,
)
from .matalg import ObliqueIndex, build_E_map
from .model import DelayAtom, DirectionOperator, LinearRFDE, ParametrizedFamily, apply_to_basis
from .numerics import max_abs, min_norm_solve, numerical_rank
from .settings import UnfoldSettings
from .spectral import JordanSpec, SpectralBases, left_basis, normalize, right_basis
from .versality import VersalityReport, check_family

logger = structlog.get_logger()


@dataclass(frozen=True, eq=False)
class UnfoldingFamily:
    """
    ℒ(α) = ℒ₀ + Σ_m α_m L_m with L_m(z) = Σ_j A^m_j z(θ_j).

    coefficients[m][j] is A^m_j; delays[j] is θ_j ≤ 0 (the atom delay is −θ_j).
    """

    base: LinearRFDE
    delays: Tuple[float, ...]
    coefficients: Tuple[Tuple[np.ndarray, ...], ...]
    indices: Tuple[ObliqueIndex, ...] = ()
    realness: str = "complex"
    targets: Tuple[np.ndarray, ...] = field(default=(), repr=False)
    bases: Optional[SpectralBases] = field(default=None, repr=False)
    report: Optional[VersalityReport] = None

    @property
    def delta(self) -> int:
        return len(self.coefficients)

    @property
    def labels(self) -> List[str]:
        if self.indices:
            return [index.label() for index in self.indices]
        return [f"z({theta:g})" for theta in self.delays][: self.delta]

    @property
    def param_names(self) -> List[str]:
        return [f"alpha_{m}" for m in range(1, self.delta + 1)]

    @property
    def operators(self) -> Tuple[DirectionOperator, ...]:
        return tuple(
            DirectionOperator(
                atoms=tuple(DelayAtom(-theta, A) for theta, A in zip(self.delays, matrices)),
                name=name,
            )
            for name, matrices in zip(self.param_names, self.coefficients)
        )

    def to_parametrized_family(self) -> ParametrizedFamily:
        return ParametrizedFamily(self.base, self.operators, real_flag=self.realness == "real")


@dataclass(frozen=True, eq=False)
class RealUnfoldingFamily:
    """
    Real-coefficient unfolding over a conjugation-closed Λ.

    The first δ₀ operators come from real eigenvalues. They are followed by
    Re L_1..Re L_δh and then Im L_1..Im L_δh for the operators of the upper
    half plane.
    """

    base: LinearRFDE
    delays: Tuple[float, ...]
    real_operators: Tuple[Tuple[np.ndarray, ...], ...]
    param_names: Tuple[str, ...]
    partition: Dict[str, List[complex]]
    delta_real: int
    delta_pairs: int
    source: Optional[UnfoldingFamily] = field(default=None, repr=False)
    report: Optional[VersalityReport] = None

    @property
    def delta(self) -> int:
        return len(self.real_operators)

    @property
    def operators(self) -> Tuple[DirectionOperator, ...]:
        return tuple(
            DirectionOperator(
                atoms=tuple(DelayAtom(-theta, A) for theta, A in zip(self.delays, matrices)),
                name=name,
            )
            for name, matrices in zip(self.param_names, self.real_operators)
        )

    def to_parametrized_family(self) -> ParametrizedFamily:
        return ParametrizedFamily(self.base, self.operators, real_flag=True)


def select_delays(
    bases: SpectralBases,
    tau_max: float,
    grid_size: int = 64,
    rank_tol: float = 1e-8,
) -> List[float]:
    """
    Greedy choice of delay points θ_j ∈ [−tau_max, 0] with rank col(Φ(θ_j)) = c.

    θ_0 = 0 is always taken. Each further point maximizes (rank, smallest kept
    singular value) of the stacked matrix; ties go to the candidate with the
    smallest |θ|. If the uniform grid does not reach rank c it is refined once.

    Args:
        bases: Spectral bases supplying Φ(θ)
        tau_max: Horizon of the equation
        grid_size: Number of uniform grid points on [−tau_max, 0]
        rank_tol: Relative singular-value threshold

    Returns:
        Delay points, starting with 0

    Raises:
        DelaySelectionError: if rank c is not reached on the refined grid
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    c = bases.c
    for size in (grid_size, 2 * grid_size - 1):
        selected = _greedy_delays(bases, tau_max, size, rank_tol)
        if selected is not None:
            logger.info("Delays selected", delays=selected, grid=size, c=c)
            return selected
        logger.warning("Delay grid too coarse", grid=size, c=c)
    raise DelaySelectionError(f"rank c={c} not reached on a {2 * grid_size - 1}-point grid over [−{tau_max}, 0]")


def _greedy_delays(bases: SpectralBases, tau_max: float, size: int, rank_tol: float) -> Optional[List[float]]:
    c = bases.c
    candidates = sorted(np.linspace(-tau_max, 0.0, size)[:-1], key=abs)
    selected = [0.0]
    stacked = bases.phi_at(0.0)
    rank = numerical_rank(stacked, rank_tol, "col(Phi)").rank

    while rank < c:
        best = None
        for theta in candidates:
            if theta in selected:
                continue
            trial = np.vstack([stacked, bases.phi_at(theta)])
            decision = numerical_rank(trial, rank_tol, "col(Phi)")
            score = (decision.rank, decision.smallest_kept if decision.rank else 0.0)
            if best is None or score > best[0]:
                best = (score, float(theta), trial)
        if best is None or best[0][0] <= rank:
            return None
        (rank, _), theta, stacked = best
        selected.append(theta)
    return selected


def solve_coefficients(
    R: np.ndarray,
    phi_at_delays: Sequence[np.ndarray],
    rank_tol: float = 1e-8,
    residual_tol: float = 1e-9,
) -> List[np.ndarray]:
    """
    Minimal-norm A_j with R = Σ_j A_j Φ(θ_j).

    Written as X·C = R with X = [A_0 … A_J] and C = col(Φ(θ_j)), the system is
    solved row by row through Cᵀ Xᵀ = Rᵀ.

    Raises:
        CoefficientSolveError: if col(Φ(θ_j)) is rank deficient or the residual is too large
    """
    R = np.asarray(R, dtype=complex)
    n, c = R.shape
    blocks = [np.asarray(phi, dtype=complex) for phi in phi_at_delays]
    if not blocks:
        raise CoefficientSolveError("no delay points given")
    for phi in blocks:
        if phi.shape != (n, c):
            raise CoefficientSolveError(f"Φ(θ) has shape {phi.shape}, expected {(n, c)}")
    C = np.vstack(blocks)

    decision = numerical_rank(C, rank_tol, "col(Phi)")
    if decision.rank < c:
        raise CoefficientSolveError(f"col(Φ(θ_j)) has rank {decision.rank} < c={c}")

    solution, _, residual = min_norm_solve(C.T, R.T, rank_tol)
    if residual > residual_tol:
        raise CoefficientSolveError(f"coefficient residual {residual:.3e} exceeds {residual_tol:.1e}")
    X = solution.T
    return [X[:, j * n:(j + 1) * n] for j in range(len(blocks))]


def synthesize(
    rfde: LinearRFDE,
    spec: JordanSpec,
    settings: Optional[UnfoldSettings] = None,
    bases: Optional[SpectralBases] = None,
    delays: Optional[Sequence[float]] = None,
    r_matrices: Optional[Sequence[np.ndarray]] = None,
) -> UnfoldingFamily:
    """
    Build a Λ-mini-versal unfolding of rfde.

    Args:
        rfde: Base equation ℒ₀
        spec: Jordan structure at Λ
        settings: Tolerances and grid size
        bases: Precomputed bases (computed from spec when omitted)
        delays: Delay points θ_j to use instead of select_delays
        r_matrices: R_m to use instead of the ℰ map (one per element of 𝒲)

    Returns:
        UnfoldingFamily whose Ψ(0)L_m(Φ) reproduce the targets Ψ(0)R_m

    Raises:
        SynthesisError: if a postcondition fails
    """
    settings = settings or UnfoldSettings()
    if bases is None:
        phi0 = right_basis(rfde, spec, settings)
        bases = normalize(left_basis(rfde, spec, settings), phi0, rfde, spec, settings)

    e_map = build_E_map(spec, bases.psi0, settings)
    indices = tuple(e_map.indices)
    if r_matrices is None:
        r_matrices = e_map.r_matrices
    elif len(r_matrices) != len(e_map.r_matrices):
        raise SynthesisError(f"expected {len(e_map.r_matrices)} R matrices, got {len(r_matrices)}")

    if delays is None:
        delays = select_delays(bases, rfde.tau_max, settings.grid_size, settings.rank_tol)
    delays = tuple(float(theta) for theta in delays)
    if any(theta > 0 or -theta > rfde.tau_max for theta in delays):
        raise SynthesisError(f"delay points {delays} leave [−{rfde.tau_max}, 0]")

    phi_at_delays = [bases.phi_at(theta) for theta in delays]
    coefficients = tuple(
        tuple(solve_coefficients(R, phi_at_delays, settings.rank_tol, settings.residual_tol))
        for R in r_matrices
    )
    targets = tuple(bases.psi0 @ np.asarray(R, dtype=complex) for R in r_matrices)

    family = UnfoldingFamily(
        base=rfde,
        delays=delays,
        coefficients=coefficients,
        indices=indices,
        targets=targets,
        bases=bases,
    )
    worst = defining_residual(family)
    if worst > settings.residual_tol:
        raise SynthesisError(f"Ψ(0)L_m(Φ) misses its target by {worst:.3e}")

    report = check_family(family.to_parametrized_family(), bases, settings.rank_tol, settings.ambiguity_factor)
    if not report.miniversal:
        raise SynthesisError(f"synthesized family failed the versality check: {report.verdict}")

    logger.info("Unfolding synthesized", delta=family.delta, delays=list(delays), residual=worst)
    return UnfoldingFamily(
        base=rfde,
        delays=delays,
        coefficients=coefficients,
        indices=indices,
        targets=targets,
        bases=bases,
        report=report,
    )


def defining_residual(family: UnfoldingFamily) -> float:
    """max_m ‖Ψ(0)L_m(Φ) − target_m‖_max, relative to the size of the targets."""
    bases = family.bases
    if bases is None:
        raise ValueError("family carries no bases")
    worst = 0.0
    for operator, target in zip(family.operators, family.targets):
        achieved = bases.psi0 @ apply_to_basis(operator, bases)
        worst = max(worst, max_abs(achieved - target) / max(1.0, max_abs(target)))
    return worst


def simplify_scalar(
    family: UnfoldingFamily, settings: Optional[UnfoldSettings] = None
) -> Tuple[UnfoldingFamily, np.ndarray]:
    """
    β-form of a scalar unfolding: ℒ(β) = ℒ₀ + Σ_j β_j z(θ_j).

    The change matrix K has K[j, m] = A^m_j, so β = Kα.

    Returns:
        (family with unit coefficients, K)

    Raises:
        ValueError: if the equation is not scalar
        SynthesisError: if K is singular or the substitution does not recover the family
    """
    settings = settings or UnfoldSettings()
    if family.base.n != 1:
        raise ValueError(f"scalar simplification needs n = 1, got n = {family.base.n}")

    K = np.array([[matrices[j][0, 0] for matrices in family.coefficients] for j in range(len(family.delays))])
    decision = numerical_rank(K, settings.rank_tol, "change matrix")
    if K.shape[0] != K.shape[1] or decision.rank < K.shape[0]:
        raise SynthesisError(f"change matrix of shape {K.shape} has rank {decision.rank}; cannot reparametrize")

    units = tuple(
        tuple(np.eye(1, dtype=complex) * (1.0 if i == j else 0.0) for i in range(len(family.delays)))
        for j in range(len(family.delays))
    )
    bases = family.bases
    simplified_targets: Tuple[np.ndarray, ...] = ()
    if bases is not None:
        unit_family = UnfoldingFamily(family.base, family.delays, units, bases=bases)
        actions = [bases.psi0 @ apply_to_basis(op, bases) for op in unit_family.operators]
        for m, target in enumerate(family.targets):
            recovered = sum(K[j, m] * actions[j] for j in range(len(actions)))
            if max_abs(recovered - target) > settings.residual_tol * max(1.0, max_abs(target)):
                raise SynthesisError(f"β substitution does not recover operator {m + 1}")
        simplified_targets = tuple(actions)

    simplified = UnfoldingFamily(
        base=family.base,
        delays=family.delays,
        coefficients=units,
        realness=family.realness,
        targets=simplified_targets,
        bases=bases,
        report=family.report,
    )
    logger.info("Scalar family simplified", delays=list(family.delays))
    return simplified, K


def _partition(spec: JordanSpec) -> Tuple[List[int], List[int], Dict[int, int]]:
    """Split eigenvalue indices into real and upper ones and pair each upper with its conjugate."""
    reals = [j for j, lam in enumerate(spec.eigenvalues) if lam.imag == 0]
    uppers = [j for j, lam in enumerate(spec.eigenvalues) if lam.imag > 0]
    lowers = [j for j, lam in enumerate(spec.eigenvalues) if lam.imag < 0]
    partner: Dict[int, int] = {}
    for j in uppers:
        matches = [i for i in lowers if spec.eigenvalues[i] == spec.eigenvalues[j].conjugate()]
        if not matches or spec.block_sizes[matches[0]] != spec.block_sizes[j]:
            raise RealnessError(f"Λ is not closed under conjugation: no partner for {spec.eigenvalues[j]}")
        partner[j] = matches[0]
    if len(lowers) != len(uppers):
        raise RealnessError("Λ is not closed under conjugation")
    return reals, uppers, partner


def decomplexify(
    family: UnfoldingFamily,
    spec: JordanSpec,
    settings: Optional[UnfoldSettings] = None,
) -> RealUnfoldingFamily:
    """
    Real unfolding ℒ₀ + Σ α_p L_p + Σ_s (β_s Re L_s + β_{s+δ_h} Im L_s).

    Operators of real eigenvalues must already be real up to realness_tol and
    are truncated. Operators of lower eigenvalues are replaced by the
    conjugates of their upper partners before the split.

    Parameters are ordered α_1..α_δ₀, then β_1..β_δh (Re L_s in upper
    segment order), then β_{δh+1}..β_{2δh} (Im L_s in the same order).

    Raises:
        RealnessError: if the base is complex, Λ is not conjugation closed, or a
            real-block operator has imaginary residue above realness_tol
    """
    settings = settings or UnfoldSettings()
    if not family.base.is_real:
        raise RealnessError("decomplexification needs a real base equation")
    reals, uppers, partner = _partition(spec)

    indices = list(family.indices)
    if len(indices) != family.delta:
        raise RealnessError("family has no segment labels to partition its operators")
    position = {index: m for m, index in enumerate(indices)}

    real_operators: List[Tuple[np.ndarray, ...]] = []
    names: List[str] = []
    for m, index in enumerate(indices):
        if index.j - 1 not in reals:
            continue
        matrices = family.coefficients[m]
        residue = max(max_abs(A.imag) for A in matrices)
        if residue > settings.realness_tol:
            raise RealnessError(f"operator {m + 1} of a real eigenvalue has imaginary residue {residue:.3e}")
        real_operators.append(tuple(np.real(A).copy() for A in matrices))
        names.append(f"alpha_{len(names) + 1}")
    delta_real = len(real_operators)

    pairs = [(m, index) for m, index in enumerate(indices) if index.j - 1 in uppers]
    delta_pairs = len(pairs)
    for _, index in pairs:
        lower = ObliqueIndex(partner[index.j - 1] + 1, index.xi, index.lam, index.m)
        if lower not in position:
            raise RealnessError(f"segment {index.label()} has no conjugate partner")
    # the lower operator is conj(L_s) by construction
    for part, offset in ((np.real, 0), (np.imag, delta_pairs)):
        for s, (m, _) in enumerate(pairs, start=1):
            real_operators.append(tuple(part(A).copy() for A in family.coefficients[m]))
            names.append(f"beta_{s + offset}")

    partition = {
        "real": [spec.eigenvalues[j] for j in reals],
        "upper": [spec.eigenvalues[j] for j in uppers],
        "lower": [spec.eigenvalues[partner[j]] for j in uppers],
    }
    real_family = RealUnfoldingFamily(
        base=family.base,
        delays=family.delays,
        real_operators=tuple(real_operators),
        param_names=tuple(names),
        partition=partition,
        delta_real=delta_real,
        delta_pairs=delta_pairs,
        source=family,
    )

    report = None
    if family.bases is not None:
        report = check_family(
            real_family.to_parametrized_family(), family.bases, settings.rank_tol, settings.ambiguity_factor
        )
        if not report.miniversal:
            raise SynthesisError(f"real family failed the versality check: {report.verdict}")

    logger.info("Family decomplexified", delta_real=delta_real, delta_pairs=delta_pairs)
    return RealUnfoldingFamily(
        base=real_family.base,
        delays=real_family.delays,
        real_operators=real_family.real_operators,
        param_names=real_family.param_names,
        partition=partition,
        delta_real=delta_real,
        delta_pairs=delta_pairs,
        source=family,
        report=report,
    )
