"""Deterministic Monte Carlo runs, frequency tables and statistical comparison."""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from logging import Logger

import numpy as np

from handshake import DEFAULT_TRIALS, NO_TRANSACTION, TOLERANCE_SIGMAS
from handshake.errors import ParameterError
from handshake.scenarios import build_scenario, correlation
from handshake.trial_worker import multi_core_run, run_trials

default_logger = logging.getLogger(__name__)

MAX_SEED = 2**64 - 1
FLOAT_SLACK = 1e-12

CHSH_BOUND = 2.0
CHSH_SETTINGS: tuple[tuple[str, float, float], ...] = (
    ("a,b", 0.0, math.pi / 4),
    ("a,b'", 0.0, 3 * math.pi / 4),
    ("a',b", math.pi / 2, math.pi / 4),
    ("a',b'", math.pi / 2, 3 * math.pi / 4),
)
CHSH_SIGNS = (1.0, -1.0, 1.0, 1.0)


@dataclass(frozen=True)
class RunConfig:
    scenario_name: str
    trials: int = DEFAULT_TRIALS
    master_seed: int = 0
    overrides: Mapping[str, float] = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError(f"trials must be at least 1, got {self.trials}.")
        if not 0 <= self.master_seed <= MAX_SEED:
            raise ParameterError(
                f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}."
            )
        if self.workers < 1:
            raise ParameterError(f"workers must be at least 1, got {self.workers}.")


@dataclass(frozen=True)
class FrequencyTable:
    counts: Mapping[str, int]
    trials: int

    def __post_init__(self):
        total = sum(self.counts.values())
        if total != self.trials:
            raise ValueError(f"Counts add up to {total}, expected {self.trials} trials.")
        object.__setattr__(self, "counts", {k: int(self.counts[k]) for k in sorted(self.counts)})

    @property
    def frequencies(self) -> dict[str, float]:
        return {label: count / self.trials for label, count in self.counts.items()}


@dataclass(frozen=True)
class ComparisonRow:
    outcome: str
    expected: float
    observed: float
    count: int
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]
    trials: int
    chi_square: float

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def row(self, outcome: str) -> ComparisonRow:
        return next(row for row in self.rows if row.outcome == outcome)


@dataclass(frozen=True)
class ChshResult:
    s_value: float
    correlations: Mapping[str, float]
    settings: Mapping[str, tuple[float, float]]
    trials_per_setting: int


def tolerance(p: float, trials: int) -> float:
    """Four standard errors of a binomial frequency."""
    return TOLERANCE_SIGMAS * math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def run(config: RunConfig, logger: Logger = default_logger) -> FrequencyTable:
    """Run ``config.trials`` independent trials of a registered scenario.

    Trial ``i`` always draws from ``trial_stream(master_seed, i)``, so the
    table is bit-identical for any worker count.

    Parameters
    ----------
    config : RunConfig
    logger : logging.Logger

    Returns
    -------
    FrequencyTable
    """
    benchmark_log = {"building_scenario": 0.0, "running_trials": 0.0}
    try:
        start_time = time.time()
        scenario = build_scenario(config.scenario_name, config.overrides)
        benchmark_log["building_scenario"] = time.time() - start_time

        start_time = time.time()
        logger.info(
            "Running %d trials of %s on %d worker(s)...",
            config.trials,
            config.scenario_name,
            config.workers,
        )
        if config.workers == 1:
            counts = run_trials(scenario.cascade, config.master_seed, 0, config.trials)
        else:
            counts = multi_core_run(
                config.scenario_name,
                config.overrides,
                config.master_seed,
                config.trials,
                config.workers,
            )
        benchmark_log["running_trials"] = time.time() - start_time

        logger.info("--- Benchmark results ---")
        for k, v in benchmark_log.items():
            logger.info("%s: %f", k, v)
        logger.info("-- total processing time: %f", sum(benchmark_log.values()))

    except Exception as err:
        logger.info("Run of %s encountered an error!", config.scenario_name)
        logger.error(err)
        raise err

    counts.setdefault(NO_TRANSACTION, 0)
    return FrequencyTable(dict(counts), config.trials)


def compare(table: FrequencyTable, expected: Mapping[str, float]) -> ComparisonReport:
    """Check each outcome's frequency against its expected probability.

    An outcome with expected probability 0 passes only if it never occurred;
    outcomes missing from ``expected`` count as probability 0.
    """
    n = table.trials
    rows = []
    chi_square = 0.0
    for outcome in sorted(set(expected) | set(table.counts)):
        p = float(expected.get(outcome, 0.0))
        count = table.counts.get(outcome, 0)
        observed = count / n
        tol = tolerance(p, n)
        if p == 0.0:
            passed = count == 0
        else:
            passed = abs(observed - p) <= tol + FLOAT_SLACK
            chi_square += (count - n * p) ** 2 / (n * p)
        rows.append(ComparisonRow(outcome, p, observed, count, tol, passed))
    return ComparisonReport(tuple(rows), n, chi_square)


def _setting_seed(seed: int, setting_index: int) -> int:
    sequence = np.random.SeedSequence(seed, spawn_key=(setting_index,))
    return int(sequence.generate_state(1, np.uint64)[0])


def chsh_run(
    seed: int,
    trials_per_setting: int,
    settings: Sequence[tuple[str, float, float]] = CHSH_SETTINGS,
    workers: int = 1,
    logger: Logger = default_logger,
) -> ChshResult:
    """Estimate S = |E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)| from simulated runs.

    Parameters
    ----------
    seed : int
    trials_per_setting : int
    settings : sequence of (name, angle_a, angle_b)
        Four settings, combined with signs (+, −, +, +) in the order given.
    workers : int
    logger : logging.Logger

    Returns
    -------
    ChshResult
    """
    if len(settings) != len(CHSH_SIGNS):
        raise ParameterError(f"CHSH needs exactly four settings, got {len(settings)}.")

    correlations = {}
    for index, (name, angle_a, angle_b) in enumerate(settings):
        config = RunConfig(
            scenario_name="epr_bohm",
            trials=trials_per_setting,
            master_seed=_setting_seed(seed, index),
            overrides={"angle_a": angle_a, "angle_b": angle_b},
            workers=workers,
        )
        table = run(config, logger=logger)
        correlations[name] = correlation(table.frequencies)
        logger.info("E(%s) = %f", name, correlations[name])

    signed = (sign * correlations[name] for sign, (name, _, _) in zip(CHSH_SIGNS, settings))
    s_value = abs(sum(signed))
    logger.info("S = %f (local bound %.1f)", s_value, CHSH_BOUND)
    return ChshResult(
        s_value=s_value,
        correlations=correlations,
        settings={name: (a, b) for name, a, b in settings},
        trials_per_setting=trials_per_setting,
    )
