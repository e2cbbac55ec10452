"""
Value types for linear delay operators.

A linear RFDE ẋ(t) = ℒ₀(x_t) is stored as a finite list of point-delay atoms,
ℒ₀(φ) = Σ_k A_k φ(−τ_k). Direction operators additionally carry atoms acting on
φ′, which is how a delay that is itself a parameter enters the first-order jet.
"""

from dataclasses import dataclass
from math import factorial
from typing import List, Literal, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionMismatchError

_TAU_SLACK = 1e-12


def _as_matrix(value) -> np.ndarray:
    matrix = np.atleast_2d(np.asarray(value, dtype=complex)).copy()
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"coefficient must be a square matrix, got shape {matrix.shape}")
    matrix.flags.writeable = False
    return matrix


@dataclass(frozen=True, eq=False)
class DelayAtom:
    """A single term A·φ(−tau) of a delay operator."""

    tau: float
    A: np.ndarray

    def __post_init__(self):
        tau = float(self.tau)
        if not np.isfinite(tau) or tau < 0:
            raise ValueError(f"delay must be a finite nonnegative number, got {self.tau}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "A", _as_matrix(self.A))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.A.imag == 0))

    def scaled(self, factor: complex) -> "DelayAtom":
        return DelayAtom(self.tau, factor * self.A)


def _check_atoms(atoms: Sequence[DelayAtom], n: int, tau_max: float, what: str) -> None:
    for atom in atoms:
        if atom.n != n:
            raise DimensionMismatchError(f"{what} atom at tau={atom.tau} is {atom.n}x{atom.n}, expected {n}x{n}")
        if atom.tau > tau_max + _TAU_SLACK:
            raise ValueError(f"{what} atom delay {atom.tau} exceeds the horizon {tau_max}")


@dataclass(frozen=True, eq=False)
class LinearRFDE:
    """ℒ₀(φ) = Σ_k A_k φ(−τ_k) on the history interval [−tau_max, 0]."""

    n: int
    tau_max: float
    atoms: Tuple[DelayAtom, ...]

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if int(self.n) < 1:
            raise ValueError("state dimension n must be positive")
        if not float(self.tau_max) > 0:
            raise ValueError("horizon tau_max must be positive")
        if not atoms:
            raise ValueError("a linear RFDE needs at least one atom")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "tau_max", float(self.tau_max))
        object.__setattr__(self, "atoms", atoms)
        _check_atoms(atoms, self.n, self.tau_max, "base")

    @property
    def is_real(self) -> bool:
        return all(atom.is_real for atom in self.atoms)

    def transposed(self) -> "LinearRFDE":
        """Equation with every coefficient transposed; its right chains are the left chains of this one."""
        return LinearRFDE(self.n, self.tau_max, tuple(DelayAtom(a.tau, a.A.T) for a in self.atoms))

    def perturbed(self, atoms: Sequence[DelayAtom]) -> "LinearRFDE":
        """ℒ₀ plus extra atoms (derivative-free perturbations only)."""
        return LinearRFDE(self.n, self.tau_max, self.atoms + tuple(atoms))


@dataclass(frozen=True, eq=False)
class DirectionOperator:
    """First-order direction ∂ℒ(α)/∂α_i at α = 0."""

    atoms: Tuple[DelayAtom, ...] = ()
    derivative_atoms: Tuple[DelayAtom, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "derivative_atoms", tuple(self.derivative_atoms))
        sizes = {atom.n for atom in self.atoms + self.derivative_atoms}
        if len(sizes) > 1:
            raise DimensionMismatchError(f"direction operator mixes dimensions {sorted(sizes)}")

    @property
    def n(self):
        for atom in self.atoms + self.derivative_atoms:
            return atom.n
        return None

    @property
    def is_real(self) -> bool:
        return all(atom.is_real for atom in self.atoms + self.derivative_atoms)


@dataclass(frozen=True, eq=False)
class ParametrizedFamily:
    """ℒ(α) through its first-order jet: base ℒ₀ plus p direction operators."""

    base: LinearRFDE
    directions: Tuple[DirectionOperator, ...] = ()
    real_flag: bool = False

    def __post_init__(self):
        directions = tuple(self.directions)
        object.__setattr__(self, "directions", directions)
        for index, direction in enumerate(directions):
            label = direction.name or f"direction {index}"
            _check_atoms(direction.atoms, self.base.n, self.base.tau_max, label)
            _check_atoms(direction.derivative_atoms, self.base.n, self.base.tau_max, label)
        if self.real_flag and not (self.base.is_real and all(d.is_real for d in directions)):
            raise ValueError("family is tagged real but has complex coefficients")

    @property
    def p(self) -> int:
        return len(self.directions)


Operator = Union[LinearRFDE, DirectionOperator]


def char_matrix(rfde: LinearRFDE, lam: complex, order: int = 0) -> np.ndarray:
    """
    Characteristic matrix Δ(λ) = λI − Σ_k A_k e^{−λτ_k} or one of its λ-derivatives.

    Args:
        rfde: The delay equation
        lam: Point of evaluation
        order: Derivative order (0 for Δ itself)

    Returns:
        Complex n×n matrix Δ^{(order)}(λ)
    """
    if order < 0:
        raise ValueError("derivative order must be nonnegative")
    lam = complex(lam)
    n = rfde.n
    result = np.zeros((n, n), dtype=complex)
    if order == 0:
        result += lam * np.eye(n)
    elif order == 1:
        result += np.eye(n)
    for atom in rfde.atoms:
        if atom.A.shape != (n, n):
            raise DimensionMismatchError("atom dimension differs from the equation dimension")
        weight = (-atom.tau) ** order if order else 1.0
        result -= atom.A * weight * np.exp(-lam * atom.tau)
    return result


def taylor_coefficients(rfde: LinearRFDE, lam: complex, count: int) -> List[np.ndarray]:
    """Δ^{(d)}(λ)/d! for d = 0..count−1, the blocks of the chain systems."""
    return [char_matrix(rfde, lam, d) / factorial(d) for d in range(count)]


def apply_to_basis(op: Operator, bases, which: Literal["right", "left"] = "right") -> np.ndarray:
    """
    Apply a delay operator to the spectral basis.

    With which="right" this is ℒ(Φ) = Σ A_k Φ(0)e^{−Bτ_k} + Σ Ã_k Φ(0)e^{−Bτ̃_k}B
    (n×c). With which="left" it is the transposed-equation action
    Σ_k e^{−Bτ_k}Ψ(0)A_k (c×n), which equals B·Ψ(0) for ℒ₀.

    Args:
        op: Base equation or direction operator
        bases: SpectralBases (anything with phi0, psi0, B and phi_at/psi_at)
        which: Side of the pairing

    Returns:
        The evaluated matrix
    """
    from .spectral import matrix_exp_jordan

    atoms = op.atoms
    derivative_atoms = getattr(op, "derivative_atoms", ())
    n, c = bases.phi0.shape
    for atom in tuple(atoms) + tuple(derivative_atoms):
        if atom.n != n:
            raise DimensionMismatchError(f"operator is {atom.n}x{atom.n} but the basis has n={n}")

    if which == "right":
        result = np.zeros((n, c), dtype=complex)
        for atom in atoms:
            result += atom.A @ bases.phi0 @ matrix_exp_jordan(bases.B, -atom.tau)
        for atom in derivative_atoms:
            result += atom.A @ bases.phi0 @ matrix_exp_jordan(bases.B, -atom.tau) @ bases.B
        return result

    if which == "left":
        if derivative_atoms:
            raise ValueError("derivative atoms have no left action")
        result = np.zeros((c, n), dtype=complex)
        for atom in atoms:
            result += matrix_exp_jordan(bases.B, -atom.tau) @ bases.psi0 @ atom.A
        return result

    raise ValueError(f"unknown side: {which}")
