"""
JSON problem files and machine-readable reports.

Problem files are versioned ("format": 1). Complex numbers are either plain
JSON numbers or {"re": ..., "im": ...} objects; matrices are row-major nested
arrays. List orderings come from the library and dumps() sorts keys, so
identical inputs give byte-identical outputs.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ProblemFormatError
from .model import DelayAtom, DirectionOperator, LinearRFDE, ParametrizedFamily

FORMAT_VERSION = 1


class ComplexValue(BaseModel):
    model_config = ConfigDict(extra="forbid")

    re: float = 0.0
    im: float = 0.0


Number = Union[float, ComplexValue]


def _to_complex(value: Number) -> complex:
    if isinstance(value, ComplexValue):
        return complex(value.re, value.im)
    return complex(value)


class AtomSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tau: float = Field(..., ge=0, description="Nonnegative delay")
    A: List[List[Number]] = Field(..., min_length=1, description="Row-major n×n coefficient")

    def to_atom(self) -> DelayAtom:
        return DelayAtom(self.tau, [[_to_complex(x) for x in row] for row in self.A])


class DirectionSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = ""
    atoms: List[AtomSpec] = Field(default_factory=list)
    derivative_atoms: List[AtomSpec] = Field(default_factory=list)

    def to_operator(self) -> DirectionOperator:
        return DirectionOperator(
            atoms=tuple(atom.to_atom() for atom in self.atoms),
            derivative_atoms=tuple(atom.to_atom() for atom in self.derivative_atoms),
            name=self.name,
        )


class FamilySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    real: bool = False
    directions: List[DirectionSpec] = Field(default_factory=list)


class ToleranceSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rank_tol: Optional[float] = Field(None, gt=0)
    root_tol: Optional[float] = Field(None, gt=0)
    pairing_tol: Optional[float] = Field(None, gt=0)
    realness_tol: Optional[float] = Field(None, gt=0)
    residual_tol: Optional[float] = Field(None, gt=0)
    grid_size: Optional[int] = Field(None, ge=2)


class ProblemSpec(BaseModel):
    """Schema of a problem file."""

    model_config = ConfigDict(extra="forbid")

    format: Literal[1] = FORMAT_VERSION
    name: str = ""
    n: int = Field(..., ge=1)
    tau_max: Optional[float] = Field(None, gt=0)
    atoms: List[AtomSpec] = Field(..., min_length=1)
    lambda_set: List[Number] = Field(default_factory=list)
    family: Optional[FamilySpec] = None
    tolerances: ToleranceSpec = Field(default_factory=ToleranceSpec)

    @field_validator("atoms")
    @classmethod
    def _square(cls, atoms: List[AtomSpec]) -> List[AtomSpec]:
        for atom in atoms:
            if any(len(row) != len(atom.A) for row in atom.A):
                raise ValueError(f"coefficient at tau={atom.tau} is not square")
        return atoms


@dataclass
class Problem:
    """Validated model objects read from a problem file."""

    rfde: LinearRFDE
    lambdas: List[complex]
    family: Optional[ParametrizedFamily] = None
    tolerances: Dict[str, Any] = field(default_factory=dict)
    name: str = ""


def _location(error: Dict[str, Any]) -> str:
    return ".".join(str(part) for part in error["loc"]) or "<root>"


_DECODER = json.JSONDecoder()
_WHITESPACE = " \t\n\r"


def _skip(text: str, pos: int) -> int:
    while pos < len(text) and text[pos] in _WHITESPACE:
        pos += 1
    return pos


def _child_offset(text: str, pos: int, part: Any) -> Optional[int]:
    """Offset of the value under key or index `part` of the container at pos."""
    opening = text[pos] if pos < len(text) else ""
    if opening not in "{[":
        return None
    closing = "}" if opening == "{" else "]"
    pos, index = _skip(text, pos + 1), 0
    while pos < len(text) and text[pos] != closing:
        key = None
        if opening == "{":
            key, pos = _DECODER.raw_decode(text, pos)
            pos = _skip(text, _skip(text, pos) + 1)
        if (key == part) if opening == "{" else (index == part):
            return pos
        _, pos = _DECODER.raw_decode(text, pos)
        pos = _skip(text, pos)
        if pos < len(text) and text[pos] == ",":
            pos = _skip(text, pos + 1)
        index += 1
    return None


def locate(text: str, loc: Sequence[Any]) -> Tuple[int, int]:
    """
    1-based (line, column) of the deepest value of a JSON path present in text.

    Path parts with no counterpart in the document (union branch tags of a
    validation error, or a missing key) stop the descent at their parent.
    """
    pos = _skip(text, 0)
    for part in loc:
        child = _child_offset(text, pos, part)
        if child is None:
            break
        pos = child
    line = text.count("\n", 0, pos) + 1
    return line, pos - (text.rfind("\n", 0, pos) + 1) + 1


def parse_problem_text(text: str, source: str = "<string>") -> Problem:
    """
    Parse and validate the text of a problem file.

    Raises:
        ProblemFormatError: with line and column for malformed JSON, line,
            column and JSON path for schema violations, or the model's
            message for inconsistent dimensions
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc

    try:
        spec = ProblemSpec.model_validate(raw)
    except ValidationError as exc:
        errors = exc.errors()
        line, column = locate(text, errors[0]["loc"])
        details = "; ".join(f"{_location(error)}: {error['msg']}" for error in errors)
        raise ProblemFormatError(f"{source}:{line}:{column}: {details}") from exc

    try:
        atoms = tuple(atom.to_atom() for atom in spec.atoms)
        tau_max = spec.tau_max if spec.tau_max is not None else max(atom.tau for atom in atoms)
        if tau_max == 0:
            raise ProblemFormatError(f"{source}: tau_max is required when every delay is 0")
        rfde = LinearRFDE(spec.n, tau_max, atoms)
        family = None
        if spec.family is not None:
            family = ParametrizedFamily(
                rfde,
                tuple(direction.to_operator() for direction in spec.family.directions),
                real_flag=spec.family.real,
            )
    except ProblemFormatError:
        raise
    except ValueError as exc:
        raise ProblemFormatError(f"{source}: {exc}") from exc

    return Problem(
        rfde=rfde,
        lambdas=[_to_complex(value) for value in spec.lambda_set],
        family=family,
        tolerances=spec.tolerances.model_dump(exclude_none=True),
        name=spec.name,
    )


def parse_problem(path: Union[str, Path]) -> Problem:
    """Read a problem file from disk."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemFormatError(f"{path}: {exc.strerror or exc}") from exc
    return parse_problem_text(text, str(path))


def encode_complex(value: complex) -> Union[float, Dict[str, float]]:
    value = complex(value)
    if value.imag == 0:
        return float(value.real) + 0.0
    return {"re": float(value.real) + 0.0, "im": float(value.imag) + 0.0}


def encode_matrix(matrix: np.ndarray) -> List[List[Any]]:
    return [[encode_complex(entry) for entry in row] for row in np.atleast_2d(np.asarray(matrix))]


def encode_atom(tau: float, A: np.ndarray) -> Dict[str, Any]:
    return {"tau": float(tau) + 0.0, "A": encode_matrix(A)}


def encode_rfde(rfde: LinearRFDE) -> Dict[str, Any]:
    return {
        "n": rfde.n,
        "tau_max": rfde.tau_max,
        "atoms": [encode_atom(atom.tau, atom.A) for atom in rfde.atoms],
    }


def encode_operator(operator: DirectionOperator) -> Dict[str, Any]:
    encoded = {"name": operator.name, "atoms": [encode_atom(a.tau, a.A) for a in operator.atoms]}
    if operator.derivative_atoms:
        encoded["derivative_atoms"] = [encode_atom(a.tau, a.A) for a in operator.derivative_atoms]
    return encoded


def encode_problem(
    rfde: LinearRFDE,
    lambdas: List[complex],
    family: Optional[ParametrizedFamily] = None,
    name: str = "",
    tolerances: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    """Problem-file dictionary readable by parse_problem."""
    problem = {"format": FORMAT_VERSION, "name": name, **encode_rfde(rfde)}
    problem["lambda_set"] = [encode_complex(lam) for lam in lambdas]
    if family is not None:
        problem["family"] = {
            "real": family.real_flag,
            "directions": [encode_operator(direction) for direction in family.directions],
        }
    if tolerances:
        problem["tolerances"] = dict(tolerances)
    return problem


def encode_float(value: float) -> Union[float, str]:
    """Finite floats unchanged; ±inf and nan as the strings "inf", "-inf", "nan"."""
    value = float(value)
    if np.isfinite(value):
        return value
    if np.isnan(value):
        return "nan"
    return "inf" if value > 0 else "-inf"


def _strict(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _strict(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_strict(item) for item in value]
    if isinstance(value, (float, np.floating)):
        return encode_float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def dumps(payload: Dict[str, Any]) -> str:
    """
    Deterministic strict JSON text (sorted keys, two-space indent, trailing newline).

    Non-finite floats such as the gap of a full-rank decision are written as
    strings, so every output parses without the Infinity/NaN extensions.
    """
    return json.dumps(_strict(payload), indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def write_problem(path: Union[str, Path], payload: Dict[str, Any]) -> Path:
    path = Path(path)
    path.write_text(dumps(payload), encoding="utf-8")
    return path


def encode_rank_decision(decision) -> Dict[str, Any]:
    summary = decision.summary()
    return {key: (float(value) if isinstance(value, float) else value) for key, value in summary.items()}


def encode_spec(spec) -> Dict[str, Any]:
    """JordanSpec with every chain-matrix rank decision."""
    return {
        "eigenvalues": [encode_complex(lam) for lam in spec.eigenvalues],
        "block_sizes": [list(sizes) for sizes in spec.block_sizes],
        "c": spec.c,
        "delta": spec.delta,
        "rank_decisions": [encode_rank_decision(decision) for decision in spec.rank_decisions],
    }


def encode_bases(bases) -> Dict[str, Any]:
    return {
        "phi0": encode_matrix(bases.phi0),
        "psi0": encode_matrix(bases.psi0),
        "B": encode_matrix(bases.B),
        "pairing_condition": bases.pairing_condition,
    }


def encode_family(family) -> Dict[str, Any]:
    """Complex (or scalar-simplified) unfolding: delays and A^m_j per parameter."""
    return {
        "realness": family.realness,
        "delta": family.delta,
        "delays": [float(theta) + 0.0 for theta in family.delays],
        "operators": [
            {
                "parameter": name,
                "label": label,
                "coefficients": [encode_matrix(A) for A in matrices],
            }
            for name, label, matrices in zip(family.param_names, family.labels, family.coefficients)
        ],
        "versality": family.report.model_dump() if family.report is not None else None,
    }


def encode_real_family(family) -> Dict[str, Any]:
    return {
        "realness": "real",
        "delta": family.delta,
        "delta_real": family.delta_real,
        "delta_pairs": family.delta_pairs,
        "delays": [float(theta) + 0.0 for theta in family.delays],
        "partition": {key: [encode_complex(lam) for lam in values] for key, values in family.partition.items()},
        "operators": [
            {"parameter": name, "coefficients": [encode_matrix(A) for A in matrices]}
            for name, matrices in zip(family.param_names, family.real_operators)
        ],
        "versality": family.report.model_dump() if family.report is not None else None,
    }
