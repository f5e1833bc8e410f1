"""
qcore.py

Dense complex linear algebra over small, labeled Hilbert spaces.

Every vector and operator carries the ordered basis labels of its space, and
every binary operation checks them. Values are immutable after construction.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from handshake import ARITHMETIC_TOLERANCE, NORM_TOLERANCE
from handshake.errors import (
    ConstructionError,
    InvalidAbsorberSetError,
    NormalizationError,
    SpaceMismatchError,
)

Space = tuple[str, ...]


class OperatorKind(enum.Enum):
    GENERAL = "general"
    PROJECTOR = "projector"
    UNITARY = "unitary"


def _validate_space(space: Iterable[str]) -> Space:
    labels = tuple(str(label) for label in space)
    if len(labels) < 1:
        raise ConstructionError("A space needs at least one basis label.")
    if len(set(labels)) != len(labels):
        raise ConstructionError(f"Basis labels must be unique within a space, got {labels}.")
    return labels


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class StateVector:
    """A finite-dimensional complex vector over a labeled basis."""

    space: Space
    amplitudes: np.ndarray

    def __post_init__(self):
        space = _validate_space(self.space)
        amplitudes = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amplitudes.shape[0] != len(space):
            raise ConstructionError(
                f"Got {amplitudes.shape[0]} amplitudes for a space of dimension {len(space)}."
            )
        if not np.all(np.isfinite(amplitudes)):
            raise ConstructionError("Amplitudes must be finite.")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "amplitudes", _frozen(amplitudes))

    @property
    def dimension(self) -> int:
        return len(self.space)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tolerance: float = NORM_TOLERANCE) -> bool:
        return abs(float(np.vdot(self.amplitudes, self.amplitudes).real) - 1.0) <= tolerance

    def normalized(self) -> StateVector:
        norm = self.norm()
        if norm < NORM_TOLERANCE:
            raise NormalizationError("Cannot normalize a zero vector.")
        return StateVector(self.space, self.amplitudes / norm)

    def amplitude(self, label: str) -> complex:
        return complex(self.amplitudes[self.space.index(label)])

    def isclose(self, other: StateVector, tolerance: float = NORM_TOLERANCE) -> bool:
        """Same space and elementwise-equal amplitudes within ``tolerance``."""
        return self.space == other.space and bool(
            np.allclose(self.amplitudes, other.amplitudes, rtol=0.0, atol=tolerance)
        )


@dataclass(frozen=True, eq=False)
class Operator:
    """A dense square matrix over a labeled basis.

    Operators flagged as projectors or unitaries are checked on construction.
    """

    space: Space
    entries: np.ndarray
    kind: OperatorKind = OperatorKind.GENERAL

    def __post_init__(self):
        space = _validate_space(self.space)
        entries = np.array(self.entries, dtype=np.complex128)
        dim = len(space)
        if entries.shape != (dim, dim):
            raise ConstructionError(
                f"Operator entries of shape {entries.shape} "
                f"do not match a space of dimension {dim}."
            )
        if not np.all(np.isfinite(entries)):
            raise ConstructionError("Operator entries must be finite.")

        if self.kind is OperatorKind.PROJECTOR:
            if not np.allclose(entries @ entries, entries, rtol=0.0, atol=ARITHMETIC_TOLERANCE):
                raise ConstructionError("Projector is not idempotent.")
            if not np.allclose(entries, entries.conj().T, rtol=0.0, atol=ARITHMETIC_TOLERANCE):
                raise ConstructionError("Projector is not Hermitian.")
        elif self.kind is OperatorKind.UNITARY:
            if not np.allclose(
                entries.conj().T @ entries, np.eye(dim), rtol=0.0, atol=ARITHMETIC_TOLERANCE
            ):
                raise ConstructionError("Operator flagged unitary does not satisfy U†U = I.")

        object.__setattr__(self, "space", space)
        object.__setattr__(self, "entries", _frozen(entries))

    @property
    def dimension(self) -> int:
        return len(self.space)

    @property
    def is_projector(self) -> bool:
        return self.kind is OperatorKind.PROJECTOR

    @property
    def is_unitary(self) -> bool:
        return self.kind is OperatorKind.UNITARY


def _check_same_space(a: Space, b: Space) -> None:
    if a != b:
        raise SpaceMismatchError(f"Space mismatch: {a} vs {b}.")


def inner_product(a: StateVector, b: StateVector) -> complex:
    """Return ⟨a|b⟩, conjugate-linear in ``a`` and linear in ``b``."""
    _check_same_space(a.space, b.space)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Composite state a⊗b, labels concatenated pairwise in row-major order.

    Examples
    --------
    >>> tensor(basis_state(("0", "1"), "0"), basis_state(("0", "1"), "1")).space
    ('00', '01', '10', '11')
    """
    labels = tuple(f"{x}{y}" for x in a.space for y in b.space)
    return StateVector(labels, np.kron(a.amplitudes, b.amplitudes))


def tensor_operator(a: Operator, b: Operator) -> Operator:
    """Composite operator A⊗B, with the same label convention as :func:`tensor`.

    The result keeps a projector or unitary flag only when both factors carry it.
    """
    labels = tuple(f"{x}{y}" for x in a.space for y in b.space)
    kind = a.kind if a.kind is b.kind else OperatorKind.GENERAL
    return Operator(labels, np.kron(a.entries, b.entries), kind)


def apply(op: Operator, v: StateVector) -> StateVector:
    _check_same_space(op.space, v.space)
    return StateVector(v.space, op.entries @ v.amplitudes)


def compose(*ops: Operator) -> Operator:
    """Product of operators applied in the order given: compose(A, B) = B·A.

    Parameters
    ----------
    ops : Operator
        Operators in the order they act on a state.

    Returns
    -------
    Operator
        Unitary when every factor is unitary.
    """
    if not ops:
        raise ConstructionError("compose() needs at least one operator.")
    entries = ops[0].entries
    for op in ops[1:]:
        _check_same_space(ops[0].space, op.space)
        entries = op.entries @ entries
    all_unitary = all(op.is_unitary for op in ops)
    return Operator(
        ops[0].space, entries, OperatorKind.UNITARY if all_unitary else OperatorKind.GENERAL
    )


def projector_weight(p: Operator, v: StateVector) -> float:
    """Born weight ⟨v|P|v⟩, clamped to [0, 1].

    For a rank-1 projector |φ⟩⟨φ| this is exactly |⟨φ|v⟩|².
    """
    _check_same_space(p.space, v.space)
    if not p.is_projector:
        raise ConstructionError("projector_weight() requires an operator flagged as a projector.")
    if not v.is_normalized(ARITHMETIC_TOLERANCE):
        raise NormalizationError(f"State has norm {v.norm()!r}, expected 1.")
    weight = float(np.vdot(v.amplitudes, p.entries @ v.amplitudes).real)
    return min(max(weight, 0.0), 1.0)


def mutually_orthogonal(projectors: Sequence[Operator]) -> bool:
    """True when PᵢPⱼ vanishes (within arithmetic tolerance) for every i ≠ j."""
    for i, first in enumerate(projectors):
        for second in projectors[i + 1 :]:
            _check_same_space(first.space, second.space)
            if np.max(np.abs(first.entries @ second.entries)) > ARITHMETIC_TOLERANCE:
                return False
    return True


def complement_renormalize(absorbed: Sequence[Operator], v: StateVector) -> StateVector | None:
    """Project ``v`` onto the complement of the absorbed subspaces and renormalize.

    Returns None when nothing survives the projection.
    """
    for p in absorbed:
        _check_same_space(p.space, v.space)
        if not p.is_projector:
            raise InvalidAbsorberSetError("Every absorbed operator must be a projector.")
    if not mutually_orthogonal(absorbed):
        raise InvalidAbsorberSetError("Absorbed projectors are not mutually orthogonal.")

    residual = v.amplitudes.copy()
    for p in absorbed:
        residual = residual - p.entries @ v.amplitudes
    norm = float(np.linalg.norm(residual))
    if norm < NORM_TOLERANCE:
        return None
    return StateVector(v.space, residual / norm)


def basis_state(space: Iterable[str], label: str) -> StateVector:
    labels = _validate_space(space)
    if label not in labels:
        raise ConstructionError(f"Label {label!r} is not in space {labels}.")
    amplitudes = np.zeros(len(labels), dtype=np.complex128)
    amplitudes[labels.index(label)] = 1.0
    return StateVector(labels, amplitudes)


def superposition(space: Iterable[str], amplitudes: Mapping[str, complex]) -> StateVector:
    """Normalized state built from a sparse label → amplitude mapping."""
    labels = _validate_space(space)
    unknown = set(amplitudes) - set(labels)
    if unknown:
        raise ConstructionError(f"Labels {sorted(unknown)} are not in space {labels}.")
    return StateVector(labels, [amplitudes.get(label, 0.0) for label in labels]).normalized()


def identity(space: Iterable[str]) -> Operator:
    labels = _validate_space(space)
    return Operator(labels, np.eye(len(labels)), OperatorKind.UNITARY)


def hadamard(space: Iterable[str] = ("0", "1")) -> Operator:
    return Operator(
        tuple(space), np.array([[1, 1], [1, -1]]) / np.sqrt(2.0), OperatorKind.UNITARY
    )


def unitary(space: Iterable[str], entries) -> Operator:
    return Operator(tuple(space), entries, OperatorKind.UNITARY)


def projector(space: Iterable[str], entries) -> Operator:
    return Operator(tuple(space), entries, OperatorKind.PROJECTOR)


def basis_projector(space: Iterable[str], labels: Iterable[str]) -> Operator:
    """Projector onto the subspace spanned by the given basis labels."""
    space_labels = _validate_space(space)
    diagonal = np.zeros(len(space_labels))
    for label in labels:
        if label not in space_labels:
            raise ConstructionError(f"Label {label!r} is not in space {space_labels}.")
        diagonal[space_labels.index(label)] = 1.0
    return Operator(space_labels, np.diag(diagonal), OperatorKind.PROJECTOR)


def projector_from_state(v: StateVector) -> Operator:
    """Rank-1 projector |v⟩⟨v| for a normalized ``v``."""
    if not v.is_normalized(ARITHMETIC_TOLERANCE):
        raise NormalizationError(f"State has norm {v.norm()!r}, expected 1.")
    return Operator(v.space, np.outer(v.amplitudes, v.amplitudes.conj()), OperatorKind.PROJECTOR)
