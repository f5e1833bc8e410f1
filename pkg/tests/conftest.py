"""Initial configuration for tests."""

import typing
from pathlib import Path

import numpy as np
import pytest

from handshake import DEFAULT_TRIALS
from handshake.qcore import (
    Operator,
    OperatorKind,
    StateVector,
    hadamard,
    tensor_operator,
)


class RandomSystem(typing.NamedTuple):
    state: StateVector
    basis: np.ndarray  # columns are an orthonormal basis of the space


def pytest_addoption(parser):
    """Sets up optional argument to change the size of the statistical runs."""
    parser.addoption(
        "--statistical-trials",
        action="store",
        type=int,
        default=DEFAULT_TRIALS,
        help="Trials per statistical check. Tolerances scale with it.",
    )


@pytest.fixture(scope="class")
def pass_options(request):
    """Adds optional argument to a test class."""
    request.cls.TRIALS = request.config.getoption("--statistical-trials")


@pytest.fixture(scope="session")
def statistical_trials(request) -> int:
    return request.config.getoption("--statistical-trials")


@pytest.fixture(scope="function")
def temp_output_dir(tmpdir_factory) -> Path:
    return Path(tmpdir_factory.mktemp("tmp-"))


@pytest.fixture(scope="function")
def np_rng() -> np.random.Generator:
    return np.random.default_rng(20100303)


def labels(dimension: int) -> tuple[str, ...]:
    return tuple(f"e{k}" for k in range(dimension))


def random_state(rng: np.random.Generator, dimension: int) -> StateVector:
    """Normalized state with Gaussian complex amplitudes."""
    amplitudes = rng.normal(size=dimension) + 1j * rng.normal(size=dimension)
    return StateVector(labels(dimension), amplitudes / np.linalg.norm(amplitudes))


def random_basis(rng: np.random.Generator, dimension: int) -> np.ndarray:
    """Unitary matrix whose columns form a random orthonormal basis."""
    matrix = rng.normal(size=(dimension, dimension)) + 1j * rng.normal(size=(dimension, dimension))
    q, r = np.linalg.qr(matrix)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_system(rng: np.random.Generator, dimension: int) -> RandomSystem:
    return RandomSystem(random_state(rng, dimension), random_basis(rng, dimension))


def random_circuit_unitary(rng: np.random.Generator, qubits: int, depth: int = 6) -> Operator:
    """Unitary built from layers of Hadamard, phase and permutation factors."""
    dimension = 2**qubits
    space = labels(dimension)
    h = hadamard()
    h_all = h
    for _ in range(qubits - 1):
        h_all = tensor_operator(h_all, h)
    entries = np.eye(dimension, dtype=np.complex128)
    for _ in range(depth):
        phases = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, size=dimension)))
        permutation = np.eye(dimension)[rng.permutation(dimension)]
        entries = permutation @ phases @ h_all.entries @ entries
    return Operator(space, entries, OperatorKind.UNITARY)
