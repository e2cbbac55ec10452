"""
Independent checks for the reduction and synthesis code.

Nothing here reuses the combinatorial constructions it is meant to check:
Sylvester spaces come from the dense c²×c² commutator matrix, the bilinear
form from adaptive quadrature, and root motion from Newton iterations on the
perturbed characteristic equation.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.integrate
import scipy.linalg
import structlog
from pydantic import BaseModel, Field

from .errors import NewtonDivergenceError, ResonanceError
from .model import DelayAtom, LinearRFDE, apply_to_basis
from .numerics import null_space, numerical_rank
from .settings import UnfoldSettings
from .spectral import JordanSpec, SpectralBases, newton_root, root_smallness
from .synthesis import RealUnfoldingFamily, UnfoldingFamily

logger = structlog.get_logger()

DENSE_ORACLE_LIMIT = 12


def commutator_matrix(B: np.ndarray) -> np.ndarray:
    """Dense matrix of M ↦ BM − MB acting on row-major flattenings."""
    B = np.asarray(B, dtype=complex)
    identity = np.eye(B.shape[0])
    return np.kron(B, identity) - np.kron(identity, B.T)


def adjoint_commutator_matrix(B: np.ndarray) -> np.ndarray:
    """Dense matrix of M ↦ B*M − MB* on row-major flattenings."""
    B = np.asarray(B, dtype=complex)
    identity = np.eye(B.shape[0])
    return np.kron(B.conj().T, identity) - np.kron(identity, B.conj())


def sylvester_spaces(B: np.ndarray, rank_tol: float = 1e-8) -> Tuple[np.ndarray, np.ndarray]:
    """
    Orthonormal bases of range(𝒯) and ker(𝒯*) from dense SVDs.

    Args:
        B: c×c matrix with c ≤ 12
        rank_tol: Relative singular-value threshold

    Returns:
        (c²×(c²−δ) range basis, c²×δ kernel basis), columns are flattenings
    """
    B = np.asarray(B, dtype=complex)
    c = B.shape[0]
    if c > DENSE_ORACLE_LIMIT:
        raise ValueError(f"dense Sylvester oracle is limited to c ≤ {DENSE_ORACLE_LIMIT}, got c={c}")

    T = commutator_matrix(B)
    decision = numerical_rank(T, rank_tol, "Sylvester T")
    U, _, _ = scipy.linalg.svd(T)
    range_basis = U[:, :decision.rank]
    kernel_basis, kernel_decision = null_space(adjoint_commutator_matrix(B), rank_tol, "Sylvester T*")
    logger.debug(
        "Sylvester spaces",
        c=c,
        range_dim=range_basis.shape[1],
        kernel_dim=kernel_basis.shape[1],
        ambiguous=decision.ambiguous or kernel_decision.ambiguous,
    )
    return range_basis, kernel_basis


def principal_angles(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Principal angles (radians, largest first) between two column spans."""
    return scipy.linalg.subspace_angles(np.asarray(first), np.asarray(second))


def bilinear_form_quadrature(
    psi_rows: np.ndarray,
    phi_cols: np.ndarray,
    rfde: LinearRFDE,
    B: np.ndarray,
    epsabs: float = 1e-13,
) -> np.ndarray:
    """(Ψ, Φ)_n with the delay integrals evaluated by scipy.integrate.quad_vec."""
    psi_rows = np.asarray(psi_rows, dtype=complex)
    phi_cols = np.asarray(phi_cols, dtype=complex)
    B = np.asarray(B, dtype=complex)
    c = B.shape[0]
    form = psi_rows @ phi_cols

    for atom in rfde.atoms:
        if atom.tau == 0:
            continue
        coupling = psi_rows @ atom.A @ phi_cols

        def integrand(xi, coupling=coupling, tau=atom.tau):
            value = scipy.linalg.expm(-B * (xi + tau)) @ coupling @ scipy.linalg.expm(B * xi)
            return np.concatenate([value.real.ravel(), value.imag.ravel()])

        integral, _ = scipy.integrate.quad_vec(integrand, -atom.tau, 0.0, epsabs=epsabs)
        form = form + (integral[: c * c] + 1j * integral[c * c:]).reshape(c, c)
    return form


class TrialResult(BaseModel):
    """Root motion for one random parameter direction."""

    alpha: List[float] = Field(..., description="Unit parameter direction")
    eps: float = Field(..., description="Step actually used after halving")
    mismatch: float = Field(..., description="Mismatch at eps")
    mismatch_half: float = Field(..., description="Mismatch at eps/2")
    slope: float = Field(..., description="log2(mismatch / mismatch_half)")
    passed: bool = Field(..., description="Whether the mismatch decays quadratically")
    error: Optional[str] = Field(None, description="Newton failure, if any")


class SpectrumCheckReport(BaseModel):
    """First-order spectral check over several trials."""

    trials: List[TrialResult] = Field(default_factory=list)
    max_mismatch: float = Field(0.0)
    min_slope: float = Field(float("inf"))
    passed: bool = Field(False)


def _family_parts(family: Union[UnfoldingFamily, RealUnfoldingFamily]) -> SpectralBases:
    bases = family.bases if isinstance(family, UnfoldingFamily) else family.source.bases if family.source else None
    if bases is None:
        raise ValueError("family carries no spectral bases")
    return bases


def _cluster(values: Sequence[complex], centers: Sequence[complex]) -> List[List[complex]]:
    clusters: List[List[complex]] = [[] for _ in centers]
    for value in values:
        clusters[int(np.argmin([abs(value - center) for center in centers]))].append(value)
    return clusters


def root_mismatch(
    refined: Sequence[complex],
    predicted: Sequence[complex],
    centers: Sequence[complex],
) -> float:
    """
    Compare two root sets cluster by cluster through their symmetric functions.

    Roots splitting off a Jordan block move like a fractional power of the
    step, while the coefficients of their cluster polynomial move smoothly, so
    clusters around each base eigenvalue are compared via np.poly.
    """
    worst = 0.0
    for left, right in zip(_cluster(refined, centers), _cluster(predicted, centers)):
        if len(left) != len(right):
            return float("inf")
        if not left:
            continue
        worst = max(worst, float(np.max(np.abs(np.poly(left) - np.poly(right)))))
    return worst


def _perturbed_roots(
    rfde: LinearRFDE,
    bases: SpectralBases,
    operators,
    alpha: np.ndarray,
    eps: float,
    settings: UnfoldSettings,
) -> Tuple[np.ndarray, List[complex]]:
    D = sum(a * (bases.psi0 @ apply_to_basis(op, bases)) for a, op in zip(alpha, operators))
    predicted = np.linalg.eigvals(bases.B + eps * D)

    extra = [atom.scaled(eps * a) for a, op in zip(alpha, operators) for atom in op.atoms]
    perturbed = rfde.perturbed(extra)
    refined = []
    for seed in predicted:
        root = newton_root(perturbed, seed, settings.newton_max_iter)
        if root_smallness(perturbed, root) > 1e-10:
            raise NewtonDivergenceError(f"Newton from {seed} did not reach a root of the perturbed equation")
        refined.append(root)
    scale = max(1.0, float(np.max(np.abs(refined))))
    for a in range(len(refined)):
        for b in range(a):
            if abs(refined[a] - refined[b]) < 1e-9 * scale:
                raise NewtonDivergenceError(f"two seeds converged to the same root {refined[a]}")
    return predicted, refined


def first_order_spectrum_check(
    rfde: LinearRFDE,
    family: Union[UnfoldingFamily, RealUnfoldingFamily],
    eps: float = 1e-3,
    trials: int = 3,
    seed: int = 0,
    settings: Optional[UnfoldSettings] = None,
    min_slope: float = 1.8,
) -> SpectrumCheckReport:
    """
    Compare characteristic roots of ℒ₀ + εΣα_mL_m with eig(B + εΣα_mΨ(0)L_m(Φ)).

    For random unit directions α the cluster mismatch at ε and ε/2 must shrink
    with a log-log slope of at least min_slope. When Newton fails, ε is halved
    up to three times before the trial is reported as failed.

    Args:
        rfde: Base equation
        family: Synthesized (complex or real) unfolding
        eps: Initial step
        trials: Number of random directions
        seed: Seed for numpy's default_rng

    Returns:
        SpectrumCheckReport
    """
    settings = settings or UnfoldSettings()
    bases = _family_parts(family)
    operators = family.operators
    centers = list(bases.spec.eigenvalues)
    rng = np.random.default_rng(seed)

    results = []
    for _ in range(trials):
        alpha = rng.standard_normal(len(operators))
        alpha /= np.linalg.norm(alpha)
        step, error = eps, None
        for _attempt in range(4):
            try:
                mismatches = []
                for size in (step, step / 2):
                    predicted, refined = _perturbed_roots(rfde, bases, operators, alpha, size, settings)
                    mismatches.append(root_mismatch(refined, predicted, centers))
                error = None
                break
            except NewtonDivergenceError as exc:
                error = str(exc)
                step /= 2

        if error is not None:
            logger.warning("Spectrum trial failed", error=error)
            results.append(
                TrialResult(
                    alpha=alpha.tolist(), eps=step, mismatch=float("inf"),
                    mismatch_half=float("inf"), slope=0.0, passed=False, error=error,
                )
            )
            continue

        mismatch, mismatch_half = mismatches
        if mismatch < 1e-12:
            slope, passed = float("inf"), True
        else:
            slope = float(np.log2(mismatch / max(mismatch_half, 1e-300)))
            passed = slope >= min_slope
        logger.info("Spectrum trial", eps=step, mismatch=mismatch, mismatch_half=mismatch_half, slope=slope)
        results.append(
            TrialResult(
                alpha=alpha.tolist(), eps=step, mismatch=mismatch,
                mismatch_half=mismatch_half, slope=slope, passed=passed,
            )
        )

    return SpectrumCheckReport(
        trials=results,
        max_mismatch=max((r.mismatch for r in results), default=0.0),
        min_slope=min((r.slope for r in results), default=float("inf")),
        passed=bool(results) and all(r.passed for r in results),
    )


@dataclass(frozen=True)
class DoubleHopfPoint:
    """ẋ(t) = A1 x(t − tau1) + A2 x(t − tau2) with roots ±iω1, ±iω2."""

    A1: float
    A2: float
    tau1: float
    tau2: float
    omega1: float
    omega2: float
    residual: float

    def to_rfde(self) -> LinearRFDE:
        return LinearRFDE(
            n=1,
            tau_max=max(self.tau1, self.tau2),
            atoms=(DelayAtom(self.tau1, [[self.A1]]), DelayAtom(self.tau2, [[self.A2]])),
        )

    def lambdas(self) -> List[complex]:
        return [1j * self.omega1, 1j * self.omega2, -1j * self.omega1, -1j * self.omega2]


def hopf_curve(omega: np.ndarray, tau1: float, tau2: float) -> Tuple[np.ndarray, np.ndarray]:
    """(A1, A2) for which iω is a root; nan where sin(ω(tau2 − tau1)) vanishes."""
    omega = np.asarray(omega, dtype=float)
    s = np.sin(omega * (tau2 - tau1))
    with np.errstate(divide="ignore", invalid="ignore"):
        A1 = omega * np.cos(omega * tau2) / s
        A2 = -omega * np.cos(omega * tau1) / s
    return A1, A2


def hopf_crossings(
    tau1: float,
    tau2: float,
    omega_max: float = 12.0,
    samples: int = 1500,
    bound: float = 50.0,
) -> List[Tuple[float, float]]:
    """
    Self-intersections of the Hopf curve, as (ω1, ω2) pairs with ω1 < ω2.

    The curve is sampled on (0.05, omega_max] and broken wherever
    |sin(ω(tau2 − tau1))| < 1e-3 or a coefficient exceeds bound. Crossings
    are returned closest to the origin of the (A1, A2) plane first.
    """
    omega = np.linspace(0.05, omega_max, samples)
    A1, A2 = hopf_curve(omega, tau1, tau2)
    valid = (np.abs(np.sin(omega * (tau2 - tau1))) >= 1e-3) & (np.abs(A1) <= bound) & (np.abs(A2) <= bound)
    segment_ok = valid[:-1] & valid[1:]

    P = np.stack([A1[:-1], A2[:-1]], axis=1)
    Q = np.stack([A1[1:], A2[1:]], axis=1)
    d = Q - P
    # parameters s, t of P_i + s d_i = P_j + t d_j
    cross = d[:, None, 0] * d[None, :, 1] - d[:, None, 1] * d[None, :, 0]
    diff = P[None, :, :] - P[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (diff[..., 0] * d[None, :, 1] - diff[..., 1] * d[None, :, 0]) / cross
        t = (diff[..., 0] * d[:, None, 1] - diff[..., 1] * d[:, None, 0]) / cross
    index = np.arange(len(d))
    mask = (
        segment_ok[:, None] & segment_ok[None, :]
        & (index[None, :] > index[:, None] + 1)
        & (s >= 0) & (s < 1) & (t >= 0) & (t < 1)
    )

    crossings = []
    for i, j in zip(*np.nonzero(mask)):
        w1 = omega[i] + s[i, j] * (omega[i + 1] - omega[i])
        w2 = omega[j] + t[i, j] * (omega[j + 1] - omega[j])
        point = P[i] + s[i, j] * d[i]
        crossings.append((float(np.hypot(*point)), float(w1), float(w2)))
    crossings.sort()
    return [(w1, w2) for _, w1, w2 in crossings]


def _hopf_residual(x: np.ndarray, tau1: float, tau2: float) -> Tuple[np.ndarray, np.ndarray]:
    A1, A2, w1, w2 = x
    F = np.zeros(4)
    J = np.zeros((4, 4))
    for row, (w, col) in enumerate(((w1, 2), (w2, 3))):
        c1, s1 = np.cos(w * tau1), np.sin(w * tau1)
        c2, s2 = np.cos(w * tau2), np.sin(w * tau2)
        F[2 * row] = -A1 * c1 - A2 * c2
        F[2 * row + 1] = w + A1 * s1 + A2 * s2
        J[2 * row, :2] = (-c1, -c2)
        J[2 * row, col] = A1 * tau1 * s1 + A2 * tau2 * s2
        J[2 * row + 1, :2] = (s1, s2)
        J[2 * row + 1, col] = 1 + A1 * tau1 * c1 + A2 * tau2 * c2
    return F, J


def check_resonance(omega1: float, omega2: float, max_order: int = 4, tol: float = 1e-3) -> None:
    """Raise ResonanceError if pω1 ≈ qω2 for some 1 ≤ p, q ≤ max_order."""
    scale = max(abs(omega1), abs(omega2))
    for p in range(1, max_order + 1):
        for q in range(1, max_order + 1):
            if abs(p * omega1 - q * omega2) < tol * scale:
                raise ResonanceError(f"frequencies {omega1:.6g} and {omega2:.6g} are in {q}:{p} resonance")


def find_double_hopf(
    tau1: float = 1.0,
    tau2: float = 2.0,
    guess: Optional[Tuple[float, float, float, float]] = None,
    max_iter: int = 50,
    tol: float = 1e-10,
) -> DoubleHopfPoint:
    """
    Locate (A1, A2, ω1, ω2) with Δ(iω1) = Δ(iω2) = 0 for ẋ = A1 x(t−tau1) + A2 x(t−tau2).

    Without a guess the Hopf curve is scanned for self-intersections; each
    crossing seeds a Newton iteration on the four real equations
    Re/Im Δ(iω_k) = 0 until one converges to a nonresonant point.

    Args:
        tau1, tau2: Fixed delays, 0 < tau1 < tau2
        guess: Optional (A1, A2, ω1, ω2) seed
        max_iter: Newton iteration cap
        tol: Required residual

    Raises:
        ResonanceError: if the guess has ω1 = ω2 or the point found is resonant
        NewtonDivergenceError: if no seed converges
    """
    if not 0 < tau1 < tau2:
        raise ValueError(f"need 0 < tau1 < tau2, got {tau1}, {tau2}")

    if guess is not None:
        if abs(guess[2] - guess[3]) <= 1e-12 * max(1.0, abs(guess[2])):
            raise ResonanceError("initial guess has ω1 = ω2")
        seeds = [np.asarray(guess, dtype=float)]
    else:
        seeds = []
        for w1, w2 in hopf_crossings(tau1, tau2):
            A1, A2 = hopf_curve(np.array([w1]), tau1, tau2)
            seeds.append(np.array([A1[0], A2[0], w1, w2]))
        if not seeds:
            raise NewtonDivergenceError(f"Hopf curve for delays ({tau1}, {tau2}) has no self-intersection in range")

    last_error: Optional[Exception] = None
    for x in seeds:
        for _ in range(max_iter):
            F, J = _hopf_residual(x, tau1, tau2)
            if np.max(np.abs(F)) < tol:
                break
            try:
                x = x - np.linalg.solve(J, F)
            except np.linalg.LinAlgError:
                break
        F, _ = _hopf_residual(x, tau1, tau2)
        residual = float(np.max(np.abs(F)))
        if residual >= tol or x[2] <= 0 or x[3] <= 0:
            last_error = NewtonDivergenceError(f"Newton from {x} stalled at residual {residual:.3e}")
            continue
        w1, w2 = sorted((float(x[2]), float(x[3])))
        try:
            check_resonance(w1, w2)
        except ResonanceError as exc:
            last_error = exc
            continue
        point = DoubleHopfPoint(float(x[0]), float(x[1]), tau1, tau2, w1, w2, residual)
        logger.info("Double Hopf point found", A1=point.A1, A2=point.A2, omega1=w1, omega2=w2, residual=residual)
        return point

    raise last_error or NewtonDivergenceError("no double Hopf point found")


def random_jordan_spec(rng: np.random.Generator, max_c: int = 8, max_eigenvalues: int = 3) -> JordanSpec:
    """Random Jordan structure with distinct complex eigenvalues and c ≤ max_c."""
    total_c = int(rng.integers(1, max_c + 1))
    r = int(rng.integers(1, min(max_eigenvalues, total_c) + 1))
    # split c into r positive parts
    cuts = np.sort(rng.choice(np.arange(1, total_c), size=r - 1, replace=False)) if r > 1 else np.array([], int)
    parts = np.diff(np.concatenate([[0], cuts, [total_c]]))

    block_sizes = []
    for total in parts:
        sizes, remaining = [], int(total)
        while remaining:
            size = int(rng.integers(1, remaining + 1))
            sizes.append(size)
            remaining -= size
        block_sizes.append(tuple(sorted(sizes, reverse=True)))

    eigenvalues = []
    while len(eigenvalues) < r:
        lam = complex(round(rng.normal(), 3), round(rng.normal(), 3))
        if all(abs(lam - other) > 1e-2 for other in eigenvalues):
            eigenvalues.append(lam)
    return JordanSpec(tuple(eigenvalues), tuple(block_sizes))
