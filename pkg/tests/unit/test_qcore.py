"""Tests for the labeled linear algebra layer."""

# pylint: disable=C0116

import math

import numpy as np
import pytest

from handshake.errors import (
    ConstructionError,
    InvalidAbsorberSetError,
    NormalizationError,
    SpaceMismatchError,
)
from handshake.qcore import (
    StateVector,
    apply,
    basis_projector,
    basis_state,
    complement_renormalize,
    compose,
    hadamard,
    identity,
    inner_product,
    projector,
    projector_from_state,
    projector_weight,
    superposition,
    tensor,
    tensor_operator,
    unitary,
)

from ..conftest import labels, random_basis, random_circuit_unitary, random_state

QUBIT = ("0", "1")
ZERO = basis_state(QUBIT, "0")
ONE = basis_state(QUBIT, "1")
PLUS = superposition(QUBIT, {"0": 1.0, "1": 1.0})


def test_inner_product_of_basis_states():
    assert inner_product(ZERO, ZERO) == 1 + 0j
    assert inner_product(ZERO, ONE) == 0j


def test_inner_product_of_superposition():
    # Brute-force summation as the oracle.
    expected = sum(a.conjugate() * b for a, b in zip(PLUS.amplitudes, ZERO.amplitudes))
    assert inner_product(PLUS, ZERO) == pytest.approx(1 / math.sqrt(2))
    assert inner_product(PLUS, ZERO) == pytest.approx(expected)


def test_inner_product_is_conjugate_symmetric_and_linear(np_rng):
    for dimension in (2, 3, 5, 8):
        a, b, c = (random_state(np_rng, dimension) for _ in range(3))
        assert inner_product(a, b) == pytest.approx(inner_product(b, a).conjugate(), abs=1e-12)

        alpha, beta = 0.3 - 1.2j, -0.7 + 0.4j
        combo = StateVector(b.space, alpha * b.amplitudes + beta * c.amplitudes)
        assert inner_product(a, combo) == pytest.approx(
            alpha * inner_product(a, b) + beta * inner_product(a, c), abs=1e-12
        )


def test_inner_product_rejects_mismatched_labels():
    other = basis_state(("up", "down"), "up")
    with pytest.raises(SpaceMismatchError):
        inner_product(ZERO, other)


def test_tensor_of_basis_states():
    product = tensor(ZERO, ONE)
    assert product.space == ("00", "01", "10", "11")
    assert product.amplitude("01") == 1
    assert product.norm() == pytest.approx(1.0)


def test_tensor_is_linear():
    product = tensor(PLUS, ZERO)
    expected = superposition(product.space, {"00": 1.0, "10": 1.0})
    assert product.isclose(expected)


def test_tensor_norm_is_product_of_norms(np_rng):
    for _ in range(10):
        a = StateVector(labels(3), np_rng.normal(size=3) + 1j * np_rng.normal(size=3))
        b = StateVector(("x", "y"), np_rng.normal(size=2) + 1j * np_rng.normal(size=2))
        assert tensor(a, b).norm() == pytest.approx(a.norm() * b.norm(), rel=1e-12)


def test_tensor_is_associative_up_to_regrouping(np_rng):
    a = random_state(np_rng, 2)
    b = StateVector(("p", "q", "r"), random_state(np_rng, 3).amplitudes)
    c = StateVector(("u", "v"), random_state(np_rng, 2).amplitudes)
    left = tensor(tensor(a, b), c)
    right = tensor(a, tensor(b, c))
    assert left.space == right.space
    np.testing.assert_allclose(left.amplitudes, right.amplitudes, rtol=0, atol=1e-12)


def test_apply_identity_and_hadamard():
    assert apply(identity(QUBIT), PLUS).isclose(PLUS)

    # Explicit multiplication as the oracle.
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    assert apply(hadamard(), ZERO).isclose(StateVector(QUBIT, h @ ZERO.amplitudes))
    assert apply(hadamard(), ZERO).isclose(PLUS)


def test_apply_projector_is_idempotent(np_rng):
    p = basis_projector(labels(4), ["e0", "e2"])
    v = random_state(np_rng, 4)
    assert apply(p, apply(p, v)).isclose(apply(p, v))


def test_apply_rejects_mismatched_space():
    with pytest.raises(SpaceMismatchError):
        apply(identity(("a", "b")), ZERO)


def test_unitaries_preserve_norm(np_rng):
    for qubits in (1, 2, 3, 4):
        u = random_circuit_unitary(np_rng, qubits)
        v = random_state(np_rng, 2**qubits)
        assert apply(u, v).norm() == pytest.approx(1.0, abs=1e-10)


def test_compose_applies_in_order():
    x = unitary(QUBIT, [[0, 1], [1, 0]])
    # H then X sends |0⟩ to |+⟩; X then H sends |0⟩ to |−⟩.
    assert apply(compose(hadamard(), x), ZERO).isclose(PLUS)
    minus = superposition(QUBIT, {"0": 1.0, "1": -1.0})
    assert apply(compose(x, hadamard()), ZERO).isclose(minus)
    assert compose(hadamard(), hadamard()).is_unitary


def test_projector_weight_examples():
    p0 = basis_projector(QUBIT, ["0"])
    assert projector_weight(p0, ZERO) == 1.0
    assert projector_weight(p0, PLUS) == pytest.approx(0.5, abs=1e-12)
    # Matrix oracle.
    assert projector_weight(p0, PLUS) == pytest.approx(
        float(np.real(PLUS.amplitudes.conj() @ p0.entries @ PLUS.amplitudes))
    )


def test_projector_weight_of_rank_one_projector_is_born_formula(np_rng):
    v = random_state(np_rng, 5)
    phi = random_state(np_rng, 5)
    assert projector_weight(projector_from_state(phi), v) == pytest.approx(
        abs(inner_product(phi, v)) ** 2, abs=1e-12
    )


def test_projector_weights_are_complete(np_rng):
    for dimension in range(2, 9):
        v = random_state(np_rng, dimension)
        basis = random_basis(np_rng, dimension)
        space = labels(dimension)
        total = sum(
            projector_weight(projector(space, np.outer(basis[:, k], basis[:, k].conj())), v)
            for k in range(dimension)
        )
        assert total == pytest.approx(1.0, abs=1e-10)


def test_projector_weight_requires_normalized_state():
    with pytest.raises(NormalizationError):
        projector_weight(basis_projector(QUBIT, ["0"]), StateVector(QUBIT, [1.0, 1.0]))


def test_projector_weight_rejects_mismatched_space():
    with pytest.raises(SpaceMismatchError):
        projector_weight(basis_projector(("a", "b"), ["a"]), ZERO)


def test_complement_renormalize():
    p0, p1 = basis_projector(QUBIT, ["0"]), basis_projector(QUBIT, ["1"])
    residual = complement_renormalize([p0], PLUS)
    assert residual is not None and residual.isclose(ONE)
    assert complement_renormalize([], PLUS).isclose(PLUS)
    assert complement_renormalize([p0, p1], PLUS) is None


def test_complement_renormalize_rejects_overlapping_projectors():
    p0 = basis_projector(QUBIT, ["0"])
    p_plus = projector_from_state(PLUS)
    with pytest.raises(InvalidAbsorberSetError):
        complement_renormalize([p0, p_plus], PLUS)


def test_construction_checks():
    with pytest.raises(ConstructionError):
        StateVector(("a", "a"), [1.0, 0.0])
    with pytest.raises(ConstructionError):
        StateVector(QUBIT, [1.0, float("nan")])
    with pytest.raises(ConstructionError):
        StateVector((), [])
    with pytest.raises(ConstructionError):
        projector(QUBIT, [[1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ConstructionError):
        unitary(QUBIT, [[1.0, 1.0], [0.0, 1.0]])


def test_values_are_immutable():
    with pytest.raises(ValueError):
        ZERO.amplitudes[0] = 0.5


def test_tensor_operator_keeps_projector_flag():
    p = tensor_operator(basis_projector(QUBIT, ["0"]), basis_projector(QUBIT, QUBIT))
    assert p.is_projector
    assert p.space == ("00", "01", "10", "11")
