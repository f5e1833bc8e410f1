"""
engine.py

The transactional core. An offer wave is propagated stage by stage through a
cascade of absorbers ordered by invariant interval; each stage gathers
confirmation waves, forms weighted incipient transactions and either
actualizes exactly one of them or passes the unabsorbed remainder on.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from logging import Logger

import numpy as np

from handshake import (
    ARITHMETIC_TOLERANCE,
    CONSERVATION_TOLERANCE,
    DEAD_BRANCH_WEIGHT,
    INTERVAL_TIE_TOLERANCE,
    NO_TRANSACTION,
    NORM_TOLERANCE,
    WEIGHT_FLOOR,
)
from handshake.errors import (
    ConservationViolationError,
    InvalidAbsorberSetError,
    InvalidCascadeError,
    InvalidStageError,
    NormalizationError,
)
from handshake.qcore import (
    Operator,
    StateVector,
    apply,
    complement_renormalize,
    mutually_orthogonal,
    projector_weight,
    tensor_operator,
)

default_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpacetimeEvent:
    """A point in spacetime, natural units (c = 1)."""

    t: float
    x: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        x = tuple(float(c) for c in self.x)
        if len(x) != 3:
            raise ValueError(f"Spatial position must have 3 components, got {len(x)}.")
        if not all(np.isfinite([self.t, *x])):
            raise ValueError("Spacetime event components must be finite.")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", x)


@dataclass(frozen=True)
class StageRecord:
    """What happened at one stage of one trial."""

    stage_rank: int
    formed: bool
    available: tuple[str, ...] = ()
    live_transactions: int = 0
    outcome_label: str | None = None
    absorber_id: str | None = None


History = tuple[StageRecord, ...]
Availability = Callable[[History], bool]


def always_available(history: History) -> bool:
    return True


@dataclass(frozen=True)
class AfterFailureOf:
    """Availability predicate: the absorber is in place only once ``stage_rank`` failed."""

    stage_rank: int

    def __call__(self, history: History) -> bool:
        return any(
            record.stage_rank == self.stage_rank and not record.formed for record in history
        )


@dataclass(frozen=True)
class OfferWave:
    emitter_id: str
    state: StateVector
    emission: SpacetimeEvent

    def __post_init__(self):
        if not self.state.is_normalized(NORM_TOLERANCE):
            raise NormalizationError(
                f"Offer wave from {self.emitter_id!r} has norm {self.state.norm()!r}, expected 1."
            )


@dataclass(frozen=True)
class Absorber:
    absorber_id: str
    outcome_label: str
    projector: Operator
    event: SpacetimeEvent
    availability: Availability = always_available

    def __post_init__(self):
        if not self.projector.is_projector:
            raise InvalidAbsorberSetError(
                f"Absorber {self.absorber_id!r} needs an operator flagged as a projector."
            )


@dataclass(frozen=True)
class ConfirmationWave:
    """A confirmation wave, represented by its (real) weight at the emitter."""

    absorber_id: str
    weight: float


@dataclass(frozen=True)
class IncipientTransaction:
    offer: OfferWave
    confirmation: ConfirmationWave
    outcome_label: str
    interval2: float

    @property
    def absorber_id(self) -> str:
        return self.confirmation.absorber_id

    @property
    def weight(self) -> float:
        return self.confirmation.weight


@dataclass(frozen=True)
class CascadeStage:
    absorbers: tuple[Absorber, ...]
    stage_rank: int
    propagation: Operator | None = None

    def __post_init__(self):
        absorbers = tuple(sorted(self.absorbers, key=lambda a: a.absorber_id))
        ids = [a.absorber_id for a in absorbers]
        if len(set(ids)) != len(ids):
            raise InvalidAbsorberSetError(f"Duplicate absorber ids in stage {self.stage_rank}.")
        if not mutually_orthogonal([a.projector for a in absorbers]):
            raise InvalidAbsorberSetError(
                f"Absorber projectors in stage {self.stage_rank} are not mutually orthogonal."
            )
        if self.propagation is not None and not self.propagation.is_unitary:
            raise InvalidCascadeError(
                f"Propagation for stage {self.stage_rank} must be flagged unitary."
            )
        object.__setattr__(self, "absorbers", absorbers)


@dataclass(frozen=True)
class ConservationRule:
    """A conserved quantity that joint outcomes must respect.

    ``applicability`` decides, from the measurement settings, whether the
    measured outcomes reveal the conserved quantity at all.
    """

    quantity_name: str
    outcome_value: Mapping[str, float]
    emitted_value: float
    applicability: Callable[[Mapping[str, float]], bool]

    def is_applicable(self, settings: Mapping[str, float]) -> bool:
        return bool(self.applicability(settings))


@dataclass(frozen=True)
class Cascade:
    initial: OfferWave
    stages: tuple[CascadeStage, ...]
    conservation: ConservationRule | None = None
    settings: Mapping[str, float] = field(default_factory=dict)
    absorber_free: bool = False

    def __post_init__(self):
        stages = tuple(self.stages)
        if not stages and not self.absorber_free:
            raise InvalidCascadeError("A cascade without stages must be marked absorber-free.")
        if self.absorber_free and any(stage.absorbers for stage in stages):
            raise InvalidCascadeError("An absorber-free cascade cannot hold absorbers.")
        ranks = [stage.stage_rank for stage in stages]
        if any(b <= a for a, b in zip(ranks, ranks[1:])):
            raise InvalidCascadeError(f"Stage ranks must strictly increase, got {ranks}.")
        for stage in stages:
            for absorber in stage.absorbers:
                if absorber.projector.space != self.initial.state.space:
                    raise InvalidCascadeError(
                        f"Absorber {absorber.absorber_id!r} lives on a different space."
                    )
        object.__setattr__(self, "stages", stages)

    @property
    def is_contingent(self) -> bool:
        """True when any absorber's presence depends on the resolution history."""
        return any(
            absorber.availability is not always_available
            for stage in self.stages
            for absorber in stage.absorbers
        )


@dataclass(frozen=True)
class TrialOutcome:
    """Result of one trial: at most one actualized transaction."""

    history: History
    outcome_label: str | None = None
    absorber_id: str | None = None
    stage_rank: int | None = None
    final_state: StateVector | None = None
    conservation: tuple[ConservationReport, ...] = ()

    def __post_init__(self):
        if sum(1 for record in self.history if record.formed) > 1:
            raise InvalidCascadeError("A trial actualized more than one transaction.")

    @property
    def formed(self) -> bool:
        return self.outcome_label is not None

    @property
    def result(self) -> str:
        return self.outcome_label if self.outcome_label is not None else NO_TRANSACTION


@dataclass(frozen=True)
class ConservationReport:
    """Outcome of a conservation check.

    ``dead_branches`` lists the conservation-violating outcomes, all of which
    carried (numerically) zero weight.
    """

    status: str
    quantity_name: str
    checked: int = 0
    dead_branches: tuple[str, ...] = ()

    CLEAN = "clean"
    SKIPPED = "skipped-not-applicable"

    @property
    def is_clean(self) -> bool:
        return self.status == self.CLEAN


def interval_squared(a: SpacetimeEvent, b: SpacetimeEvent) -> float:
    """(Δt)² − |Δx|², positive for timelike separation."""
    dt = b.t - a.t
    dx = np.subtract(b.x, a.x)
    return float(dt * dt - np.dot(dx, dx))


def build_cascade(
    offer: OfferWave,
    absorbers: Sequence[Absorber],
    propagations: Mapping[int, Operator] | None = None,
    conservation: ConservationRule | None = None,
    settings: Mapping[str, float] | None = None,
    logger: Logger = default_logger,
) -> Cascade:
    """Group absorbers into stages by ascending interval from the emission event.

    Intervals equal within ``INTERVAL_TIE_TOLERANCE`` share a stage.

    Parameters
    ----------
    offer : OfferWave
        Its emission event is the origin of every interval.
    absorbers : sequence of Absorber
    propagations : mapping of stage rank to Operator, optional
        Unitary applied to the offer state before that stage gathers confirmations.
    conservation : ConservationRule, optional
    settings : mapping, optional
        Measurement settings consulted by the conservation rule.

    Returns
    -------
    Cascade
        Absorber-free when ``absorbers`` is empty.
    """
    propagations = dict(propagations or {})
    keyed = sorted(
        ((interval_squared(offer.emission, a.event), a.absorber_id, a) for a in absorbers),
        key=lambda item: (item[0], item[1]),
    )

    groups: list[list[Absorber]] = []
    group_interval = None
    for interval, _, absorber in keyed:
        if group_interval is None or interval - group_interval > INTERVAL_TIE_TOLERANCE:
            groups.append([])
            group_interval = interval
        groups[-1].append(absorber)

    unknown_ranks = set(propagations) - set(range(len(groups)))
    if unknown_ranks:
        raise InvalidCascadeError(f"Propagations given for missing stages {sorted(unknown_ranks)}.")

    stages = tuple(
        CascadeStage(absorbers=tuple(group), stage_rank=rank, propagation=propagations.get(rank))
        for rank, group in enumerate(groups)
    )
    logger.debug(
        "Built cascade for %s: %d absorbers in %d stages.",
        offer.emitter_id,
        len(keyed),
        len(stages),
    )
    return Cascade(
        initial=offer,
        stages=stages,
        conservation=conservation,
        settings=dict(settings or {}),
        absorber_free=not stages,
    )


def available_absorbers(stage: CascadeStage, history: History) -> tuple[Absorber, ...]:
    return tuple(a for a in stage.absorbers if a.availability(history))


def gather_confirmations(
    state: StateVector, stage: CascadeStage, history: History
) -> list[ConfirmationWave]:
    """One confirmation wave per available absorber, weighted by the Born rule."""
    return [
        ConfirmationWave(absorber.absorber_id, projector_weight(absorber.projector, state))
        for absorber in available_absorbers(stage, history)
    ]


def form_incipient(
    offer: OfferWave, cws: Sequence[ConfirmationWave], stage: CascadeStage
) -> list[IncipientTransaction]:
    """Pair each confirmation with the offer, ordered by absorber id."""
    by_id = {absorber.absorber_id: absorber for absorber in stage.absorbers}
    transactions = [
        IncipientTransaction(
            offer=offer,
            confirmation=cw,
            outcome_label=by_id[cw.absorber_id].outcome_label,
            interval2=interval_squared(offer.emission, by_id[cw.absorber_id].event),
        )
        for cw in cws
    ]
    return sorted(transactions, key=lambda tx: tx.absorber_id)


def assert_conservation(
    transactions: Sequence[IncipientTransaction],
    rule: ConservationRule,
    settings: Mapping[str, float],
    logger: Logger = default_logger,
) -> ConservationReport:
    """Check that every live transaction conserves the rule's quantity.

    Raises
    ------
    ConservationViolationError
        If a transaction with weight above ``DEAD_BRANCH_WEIGHT`` breaks the
        rule, or an outcome has no conserved value on record.
    """
    if not rule.is_applicable(settings):
        return ConservationReport(ConservationReport.SKIPPED, rule.quantity_name)

    dead_branches = []
    violations = []
    for tx in transactions:
        if tx.outcome_label not in rule.outcome_value:
            raise ConservationViolationError(
                f"Outcome {tx.outcome_label!r} has no recorded value of {rule.quantity_name}.",
                violations=(tx,),
            )
        conserved = abs(rule.outcome_value[tx.outcome_label] - rule.emitted_value) <= (
            CONSERVATION_TOLERANCE
        )
        if conserved:
            continue
        if tx.weight > DEAD_BRANCH_WEIGHT:
            violations.append(tx)
        else:
            dead_branches.append(tx.outcome_label)

    if violations:
        labels = ", ".join(f"{tx.outcome_label} (weight {tx.weight:.3g})" for tx in violations)
        raise ConservationViolationError(
            f"Transactions violating {rule.quantity_name}: {labels}.", violations=tuple(violations)
        )
    if dead_branches:
        logger.debug("Dead branches for %s: %s", rule.quantity_name, dead_branches)
    return ConservationReport(
        ConservationReport.CLEAN,
        rule.quantity_name,
        checked=len(transactions),
        dead_branches=tuple(dead_branches),
    )


def _stage_weight(transactions: Sequence[IncipientTransaction]) -> float:
    total = sum(tx.weight for tx in transactions if tx.weight >= WEIGHT_FLOOR)
    if total > 1.0 + ARITHMETIC_TOLERANCE:
        raise InvalidStageError(
            f"Stage weights add up to {total!r} > 1: "
            "projectors overlap or the state is not normalized."
        )
    return total


def _select(
    transactions: Sequence[IncipientTransaction], rng: np.random.Generator
) -> IncipientTransaction | None:
    """One uniform draw: a transaction forms with probability W, and then
    transaction i with probability wᵢ/W.
    """
    live = [tx for tx in transactions if tx.weight >= WEIGHT_FLOOR]
    total = _stage_weight(live)
    if not live:
        return None
    u = rng.random()
    if total >= 1.0 - WEIGHT_FLOOR:
        u *= total
    elif u >= total:
        return None
    cumulative = 0.0
    for tx in live:
        cumulative += tx.weight
        if u < cumulative:
            return tx
    return live[-1]


def _propagate(stage: CascadeStage, state: StateVector) -> StateVector:
    # Unitaries are only checked to ARITHMETIC_TOLERANCE, offer waves to NORM_TOLERANCE.
    if stage.propagation is None:
        return state
    return apply(stage.propagation, state).normalized()


def _resolve(
    offer: OfferWave, state: StateVector, stage: CascadeStage, history: History, rng
) -> tuple[StageRecord, StateVector | None, list[IncipientTransaction]]:
    available = available_absorbers(stage, history)
    cws = gather_confirmations(state, stage, history)
    transactions = form_incipient(offer, cws, stage)
    live = sum(1 for tx in transactions if tx.weight >= WEIGHT_FLOOR)
    available_ids = tuple(a.absorber_id for a in available)

    if not available:
        return StageRecord(stage.stage_rank, False, available_ids, live), state, transactions

    chosen = _select(transactions, rng)
    if chosen is not None:
        record = StageRecord(
            stage.stage_rank,
            True,
            available_ids,
            live,
            outcome_label=chosen.outcome_label,
            absorber_id=chosen.absorber_id,
        )
        return record, None, transactions

    next_state = complement_renormalize([a.projector for a in available], state)
    return StageRecord(stage.stage_rank, False, available_ids, live), next_state, transactions


def resolve_stage(
    state: StateVector,
    stage: CascadeStage,
    history: History,
    rng: np.random.Generator,
    offer: OfferWave | None = None,
) -> tuple[StageRecord, StateVector | None]:
    """Resolve one stage of the hierarchy.

    Returns the stage record (formed or failed) and the state handed to the
    next stage: None after a formation, the renormalized remainder after a
    failure, the unchanged state when no absorber was available.

    ``offer`` only labels the incipient transactions formed along the way;
    it does not affect the draw. Without it they are tied to an anonymous
    emitter at the origin, so their intervals carry no meaning. Neither is
    part of the return value.
    """
    if offer is None:
        offer = OfferWave("anonymous", state, SpacetimeEvent(0.0))
    record, next_state, _ = _resolve(offer, state, stage, history, rng)
    return record, next_state


def resolve_cascade(cascade: Cascade, rng: np.random.Generator) -> TrialOutcome:
    """Run one trial: stages in ascending rank until a transaction forms."""
    offer = cascade.initial
    state: StateVector | None = offer.state
    history: History = ()
    reports: tuple[ConservationReport, ...] = ()
    check_conservation = cascade.conservation is not None and cascade.conservation.is_applicable(
        cascade.settings
    )

    for stage in cascade.stages:
        if state is None:
            break
        state = _propagate(stage, state)
        if state is not offer.state:
            offer = OfferWave(offer.emitter_id, state, offer.emission)
        record, next_state, transactions = _resolve(offer, state, stage, history, rng)
        if check_conservation:
            reports += (assert_conservation(transactions, cascade.conservation, cascade.settings),)
        history = history + (record,)
        if record.formed:
            return TrialOutcome(
                history=history,
                outcome_label=record.outcome_label,
                absorber_id=record.absorber_id,
                stage_rank=record.stage_rank,
                conservation=reports,
            )
        state = next_state

    return TrialOutcome(history=history, final_state=state, conservation=reports)


def outcome_distribution(cascade: Cascade) -> dict[str, float]:
    """Exact per-outcome formation probabilities, by stage recursion.

    Since the first formation ends a trial, every stage is reached only along
    the all-failed path, so the recursion follows that single path. The
    ``NO_TRANSACTION`` entry holds the remaining mass.
    """
    distribution: dict[str, float] = {}
    survival = 1.0
    state: StateVector | None = cascade.initial.state
    history: History = ()

    for stage in cascade.stages:
        if state is None or survival == 0.0:
            break
        state = _propagate(stage, state)
        available = available_absorbers(stage, history)
        weights = [projector_weight(a.projector, state) for a in available]
        live = [w for w in weights if w >= WEIGHT_FLOOR]
        total = sum(live)
        if total > 1.0 + ARITHMETIC_TOLERANCE:
            raise InvalidStageError(f"Stage {stage.stage_rank} weights add up to {total!r} > 1.")
        for absorber, weight in zip(available, weights):
            if weight >= WEIGHT_FLOOR:
                label = absorber.outcome_label
                distribution[label] = distribution.get(label, 0.0) + survival * weight
        survival *= max(0.0, 1.0 - total)
        ids = tuple(a.absorber_id for a in available)
        history = history + (StageRecord(stage.stage_rank, False, ids, len(live)),)
        if available:
            state = complement_renormalize([a.projector for a in available], state)

    distribution[NO_TRANSACTION] = survival if state is not None else 0.0
    return distribution


def joint_absorbers(
    settings_a: Sequence[Operator],
    settings_b: Sequence[Operator],
    labels_a: Sequence[str] = ("+", "-"),
    labels_b: Sequence[str] = ("+", "-"),
    event: SpacetimeEvent = SpacetimeEvent(1.0),
) -> list[Absorber]:
    """Product absorbers Pₐ(i)⊗P_b(j) for two measurement settings.

    Every product shares ``event`` so that :func:`build_cascade` co-stages
    them into one joint transaction.

    Parameters
    ----------
    settings_a, settings_b : sequence of Operator
        Outcome projectors of each local measurement, ordered like the labels.
    labels_a, labels_b : sequence of str
        Local outcome labels; joint labels are their concatenation, e.g. "+-".
    """
    if len(settings_a) != len(labels_a) or len(settings_b) != len(labels_b):
        raise InvalidAbsorberSetError("Each local projector needs exactly one outcome label.")
    absorbers = []
    for label_a, p_a in zip(labels_a, settings_a):
        for label_b, p_b in zip(labels_b, settings_b):
            label = f"{label_a}{label_b}"
            absorbers.append(
                Absorber(
                    absorber_id=f"joint{label}",
                    outcome_label=label,
                    projector=tensor_operator(p_a, p_b),
                    event=event,
                )
            )
    return absorbers
