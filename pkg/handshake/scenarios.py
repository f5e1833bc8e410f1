"""
scenarios.py

Executable experiment definitions. Each builder returns a cascade together
with the outcome probabilities expected from a direct amplitude calculation.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np

from handshake import NO_TRANSACTION
from handshake.engine import (
    Absorber,
    AfterFailureOf,
    Cascade,
    ConservationRule,
    OfferWave,
    SpacetimeEvent,
    build_cascade,
    joint_absorbers,
)
from handshake.errors import ParameterError, ScenarioNotFoundError
from handshake.qcore import (
    Operator,
    StateVector,
    basis_projector,
    basis_state,
    compose,
    hadamard,
    identity,
    projector,
    superposition,
    tensor,
    tensor_operator,
    unitary,
)

EXPECTED_SUM_TOLERANCE = 1e-9

ORIGIN = SpacetimeEvent(0.0)
QUBIT = ("0", "1")
REGISTER = tuple(f"{a}{b}" for a in QUBIT for b in QUBIT)
SPIN = ("+", "-")
MODES = ("upper", "lower")

ORACLE_KINDS = ("constant0", "constant1", "balanced_id", "balanced_not")


@dataclass(frozen=True)
class ScenarioDefinition:
    name: str
    cascade: Cascade
    expected: Mapping[str, float]
    parameters: Mapping[str, float] = field(default_factory=dict)
    notes: str = ""

    def __post_init__(self):
        total = sum(self.expected.values())
        if total > 1.0 + EXPECTED_SUM_TOLERANCE:
            raise ValueError(f"Expected probabilities for {self.name} add up to {total!r} > 1.")

    @property
    def no_transaction_mass(self) -> float:
        return max(0.0, 1.0 - sum(self.expected.values()))

    def expected_outcomes(self) -> dict[str, float]:
        """The expected table, with the remainder booked as NoTransaction."""
        outcomes = dict(self.expected)
        remainder = self.no_transaction_mass
        if remainder > EXPECTED_SUM_TOLERANCE:
            outcomes[NO_TRANSACTION] = remainder
        return outcomes


def maudlin(right_fraction: float = 0.5, swing: bool = True) -> ScenarioDefinition:
    """Near detector A on the right path; farther detector B behind it.

    With ``swing`` set, B moves over to the left path once A has failed to
    fire, so it answers only on stage-0 failure. Without it, B stays on the
    right path, behind A, and the left component is never absorbed.
    """
    if not 0.0 <= right_fraction <= 1.0:
        raise ParameterError(f"right_fraction must lie in [0, 1], got {right_fraction!r}.")

    space = ("right", "left")
    state = superposition(
        space, {"right": math.sqrt(right_fraction), "left": math.sqrt(1.0 - right_fraction)}
    )
    offer = OfferWave("source", state, ORIGIN)

    near = Absorber(
        absorber_id="A",
        outcome_label="A",
        projector=basis_projector(space, ["right"]),
        event=SpacetimeEvent(1.0, (0.5, 0.0, 0.0)),
    )
    if swing:
        far = Absorber(
            absorber_id="B",
            outcome_label="B",
            projector=basis_projector(space, ["left"]),
            event=SpacetimeEvent(3.0, (-2.0, 0.0, 0.0)),
            availability=AfterFailureOf(0),
        )
        expected = {"A": right_fraction, "B": 1.0 - right_fraction}
    else:
        far = Absorber(
            absorber_id="B",
            outcome_label="B",
            projector=basis_projector(space, ["right"]),
            event=SpacetimeEvent(3.0, (2.0, 0.0, 0.0)),
        )
        expected = {"A": right_fraction, "B": 0.0}

    return ScenarioDefinition(
        name="maudlin",
        cascade=build_cascade(offer, [near, far]),
        expected=expected,
        parameters={"right_fraction": right_fraction, "swing": float(swing)},
        notes="Contingent absorber: B's confirmation carries weight 1/2 yet B fires "
        "with certainty whenever A has not.",
    )


def spin_projectors(angle: float) -> tuple[Operator, Operator]:
    """Spin-up and spin-down projectors along (sin θ, 0, cos θ) in the x–z plane."""
    c, s = math.cos(angle), math.sin(angle)
    n_sigma = np.array([[c, s], [s, -c]])
    eye = np.eye(2)
    return projector(SPIN, (eye + n_sigma) / 2.0), projector(SPIN, (eye - n_sigma) / 2.0)


def singlet() -> StateVector:
    """(|+-⟩ − |-+⟩)/√2 in the z basis."""
    up, down = basis_state(SPIN, "+"), basis_state(SPIN, "-")
    up_down = tensor(up, down)
    amplitudes = (up_down.amplitudes - tensor(down, up).amplitudes) / math.sqrt(2.0)
    return StateVector(up_down.space, amplitudes)


SPIN_Z_TOTAL = {"++": 1.0, "+-": 0.0, "-+": 0.0, "--": -1.0}


def _both_along_z(settings: Mapping[str, float]) -> bool:
    return math.isclose(settings.get("angle_a", math.nan), 0.0, abs_tol=1e-12) and math.isclose(
        settings.get("angle_b", math.nan), 0.0, abs_tol=1e-12
    )


def epr_bohm(angle_a: float = 0.0, angle_b: float = 0.0) -> ScenarioDefinition:
    """Singlet pair measured along two directions in the x–z plane."""
    for name, angle in (("angle_a", angle_a), ("angle_b", angle_b)):
        if not math.isfinite(angle):
            raise ParameterError(f"{name} must be finite, got {angle!r}.")

    offer = OfferWave("pair-source", singlet(), ORIGIN)
    absorbers = joint_absorbers(
        spin_projectors(angle_a),
        spin_projectors(angle_b),
        labels_a=SPIN,
        labels_b=SPIN,
        event=SpacetimeEvent(1.0, (0.5, 0.0, 0.0)),
    )
    settings = {"angle_a": angle_a, "angle_b": angle_b}
    rule = ConservationRule(
        quantity_name="total spin-z projection",
        outcome_value=SPIN_Z_TOTAL,
        emitted_value=0.0,
        applicability=_both_along_z,
    )

    cos_theta = math.cos(angle_a - angle_b)
    expected = {
        "++": 0.25 * (1.0 - cos_theta),
        "--": 0.25 * (1.0 - cos_theta),
        "+-": 0.25 * (1.0 + cos_theta),
        "-+": 0.25 * (1.0 + cos_theta),
    }
    return ScenarioDefinition(
        name="epr_bohm",
        cascade=build_cascade(offer, absorbers, conservation=rule, settings=settings),
        expected=expected,
        parameters=settings,
        notes="Joint transaction on a spin singlet; correlation E = -cos(angle_a - angle_b).",
    )


def correlation(probabilities: Mapping[str, float]) -> float:
    """E = P(same) − P(different) over the four joint spin outcomes."""
    same = probabilities.get("++", 0.0) + probabilities.get("--", 0.0)
    different = probabilities.get("+-", 0.0) + probabilities.get("-+", 0.0)
    return same - different


def beam_splitter() -> Operator:
    """Symmetric 50/50 splitter with an i phase on reflection."""
    return unitary(MODES, np.array([[1.0, 1.0j], [1.0j, 1.0]]) / math.sqrt(2.0))


def elitzur_vaidman(obstacle_present: bool = True) -> ScenarioDefinition:
    """Mach-Zehnder interferometer, optionally blocked in the lower arm.

    The photon enters the lower port, so the unobstructed interferometer
    sends it to the bright (upper) output with certainty.
    """
    offer = OfferWave("photon-source", basis_state(MODES, "lower"), ORIGIN)
    bright = Absorber(
        "D_bright", "bright", basis_projector(MODES, ["upper"]), SpacetimeEvent(4.0, (2.0, 0, 0))
    )
    dark = Absorber(
        "D_dark", "dark", basis_projector(MODES, ["lower"]), SpacetimeEvent(4.0, (0.0, 2.0, 0))
    )

    if obstacle_present:
        obstacle = Absorber(
            "obstacle",
            "obstacle",
            basis_projector(MODES, ["lower"]),
            SpacetimeEvent(2.0, (0.0, 1.0, 0.0)),
        )
        cascade = build_cascade(
            offer, [obstacle, bright, dark], propagations={0: beam_splitter(), 1: beam_splitter()}
        )
        expected = {"obstacle": 0.5, "bright": 0.25, "dark": 0.25}
    else:
        cascade = build_cascade(
            offer, [bright, dark], propagations={0: compose(beam_splitter(), beam_splitter())}
        )
        expected = {"bright": 1.0, "dark": 0.0}

    return ScenarioDefinition(
        name="elitzur_vaidman",
        cascade=cascade,
        expected=expected,
        parameters={"obstacle_present": float(obstacle_present)},
        notes="A dark-port click reveals the obstacle although nothing was absorbed by it.",
    )


def deutsch_oracle(oracle_kind: str) -> Operator:
    """U_f |x, y⟩ = |x, y ⊕ f(x)⟩ on the two-qubit register."""
    flavors = {
        "constant0": (0, 0),
        "constant1": (1, 1),
        "balanced_id": (0, 1),
        "balanced_not": (1, 0),
    }
    if oracle_kind not in flavors:
        raise ParameterError(f"Unknown oracle kind {oracle_kind!r}; choose from {ORACLE_KINDS}.")
    f = flavors[oracle_kind]

    entries = np.zeros((4, 4))
    for x in (0, 1):
        for y in (0, 1):
            entries[2 * x + (y ^ f[x]), 2 * x + y] = 1.0
    return unitary(REGISTER, entries)


def deutsch(oracle_kind: str = "constant0") -> ScenarioDefinition:
    """Deutsch's algorithm: one query decides constant versus balanced."""
    initial = tensor(basis_state(QUBIT, "0"), basis_state(QUBIT, "1"))
    offer = OfferWave("register", initial, ORIGIN)

    h = hadamard(QUBIT)
    register_identity = basis_projector(QUBIT, QUBIT)
    circuit = compose(
        tensor_operator(h, h),
        deutsch_oracle(oracle_kind),
        tensor_operator(h, identity(QUBIT)),
    )

    readout = SpacetimeEvent(1.0)
    absorbers = [
        Absorber(
            f"P{bit}",
            bit,
            tensor_operator(basis_projector(QUBIT, [bit]), register_identity),
            readout,
        )
        for bit in QUBIT
    ]
    answer = "0" if oracle_kind.startswith("constant") else "1"
    return ScenarioDefinition(
        name="deutsch",
        cascade=build_cascade(offer, absorbers, propagations={0: circuit}),
        expected={answer: 1.0, "1" if answer == "0" else "0": 0.0},
        parameters={"oracle": float(ORACLE_KINDS.index(oracle_kind))},
        notes=f"Oracle {oracle_kind}: only the transaction carrying the answer can form.",
    )


def unabsorbed_offer(dimension: int = 2) -> ScenarioDefinition:
    """A uniform superposition with nothing to absorb it."""
    if not 1 <= dimension <= 16:
        raise ParameterError(f"dimension must lie in [1, 16], got {dimension!r}.")
    space = tuple(str(k) for k in range(dimension))
    state = superposition(space, {label: 1.0 for label in space})
    return ScenarioDefinition(
        name="unabsorbed_offer",
        cascade=build_cascade(OfferWave("source", state, ORIGIN), []),
        expected={},
        parameters={"dimension": float(dimension)},
        notes="The offer wave persists unabsorbed; no transaction ever forms.",
    )


def _as_flag(name: str, value: float) -> bool:
    if value not in (0.0, 1.0):
        raise ParameterError(f"{name} must be 0 or 1, got {value!r}.")
    return bool(value)


def _as_index(name: str, value: float, upper: int) -> int:
    if not float(value).is_integer() or not 0 <= value < upper:
        raise ParameterError(f"{name} must be an integer in [0, {upper - 1}], got {value!r}.")
    return int(value)


@dataclass(frozen=True)
class ScenarioEntry:
    builder: Callable[[Mapping[str, float]], ScenarioDefinition]
    defaults: Mapping[str, float]
    description: str


SCENARIOS: dict[str, ScenarioEntry] = {
    "maudlin": ScenarioEntry(
        lambda p: maudlin(p["right_fraction"], _as_flag("swing", p["swing"])),
        {"right_fraction": 0.5, "swing": 1.0},
        "Contingent absorber: near detector, then a far detector that swings over on failure.",
    ),
    "epr_bohm": ScenarioEntry(
        lambda p: epr_bohm(p["angle_a"], p["angle_b"]),
        {"angle_a": 0.0, "angle_b": 0.0},
        "Spin singlet measured along two x-z plane directions (radians).",
    ),
    "elitzur_vaidman": ScenarioEntry(
        lambda p: elitzur_vaidman(_as_flag("obstacle_present", p["obstacle_present"])),
        {"obstacle_present": 1.0},
        "Interaction-free measurement in a Mach-Zehnder interferometer.",
    ),
    "deutsch": ScenarioEntry(
        lambda p: deutsch(ORACLE_KINDS[_as_index("oracle", p["oracle"], len(ORACLE_KINDS))]),
        {"oracle": 0.0},
        "Deutsch's algorithm; oracle 0-3 = constant0, constant1, balanced_id, balanced_not.",
    ),
    "unabsorbed_offer": ScenarioEntry(
        lambda p: unabsorbed_offer(_as_index("dimension", p["dimension"], 17)),
        {"dimension": 2.0},
        "An offer wave with no absorbers; it stays unabsorbed.",
    ),
}


def build_scenario(name: str, overrides: Mapping[str, float] | None = None) -> ScenarioDefinition:
    """Build a registered scenario with validated parameter overrides."""
    if name not in SCENARIOS:
        raise ScenarioNotFoundError(
            f"Unknown scenario {name!r}; available: {', '.join(sorted(SCENARIOS))}."
        )
    entry = SCENARIOS[name]
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(entry.defaults)
    if unknown:
        raise ParameterError(
            f"Scenario {name!r} has no parameter(s) {sorted(unknown)}; "
            f"expected one of {sorted(entry.defaults)}."
        )
    parameters = {**entry.defaults, **{k: float(v) for k, v in overrides.items()}}
    for key, value in parameters.items():
        if not math.isfinite(value):
            raise ParameterError(f"Parameter {key} must be finite, got {value!r}.")
    return entry.builder(parameters)
