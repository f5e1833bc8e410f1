"""Tests for seeded runs, frequency tables and statistical comparison."""

# pylint: disable=C0116

import logging
import math

import numpy as np
import pytest

from handshake import NO_TRANSACTION
from handshake.engine import (
    Absorber,
    OfferWave,
    SpacetimeEvent,
    build_cascade,
    outcome_distribution,
)
from handshake.errors import ParameterError
from handshake.harness import (
    CHSH_BOUND,
    FrequencyTable,
    RunConfig,
    chsh_run,
    compare,
    run,
    tolerance,
)
from handshake.qcore import projector
from handshake.trial_worker import run_trials, split_trials, trial_stream

from .conftest import labels, random_system


def test_run_is_deterministic():
    config = RunConfig("maudlin", trials=2000, master_seed=42)
    assert run(config).counts == run(config).counts


def test_run_does_not_depend_on_worker_count():
    serial = run(RunConfig("elitzur_vaidman", trials=3000, master_seed=9))
    parallel = run(RunConfig("elitzur_vaidman", trials=3000, master_seed=9, workers=3))
    assert serial.counts == parallel.counts


def test_different_seeds_give_different_tables():
    first = run(RunConfig("maudlin", trials=2000, master_seed=1))
    second = run(RunConfig("maudlin", trials=2000, master_seed=2))
    assert first.counts != second.counts


def test_run_always_reports_no_transaction():
    table = run(RunConfig("maudlin", trials=100, master_seed=0))
    assert table.counts[NO_TRANSACTION] == 0
    assert sum(table.counts.values()) == 100

    unabsorbed = run(RunConfig("unabsorbed_offer", trials=50, master_seed=0))
    assert unabsorbed.counts == {NO_TRANSACTION: 50}
    assert unabsorbed.frequencies == {NO_TRANSACTION: 1.0}


def test_run_logs_benchmark(caplog):
    caplog.set_level(logging.INFO)
    run(RunConfig("deutsch", trials=10, master_seed=0))
    assert "Benchmark results" in caplog.text


def test_trial_streams_do_not_collide():
    prefixes = set()
    for seed in range(4):
        for trial_index in range(1000):
            prefixes.add(tuple(trial_stream(seed, trial_index).random(4)))
    assert len(prefixes) == 4 * 1000


def test_trial_stream_is_reproducible():
    first = trial_stream(2**64 - 1, 123).random(8)
    second = trial_stream(2**64 - 1, 123).random(8)
    np.testing.assert_array_equal(first, second)


def test_split_trials_covers_every_trial():
    for trials, chunks in ((10, 3), (7, 20), (100_000, 16), (1, 4)):
        ranges = split_trials(trials, chunks)
        assert ranges[0][0] == 0
        assert ranges[-1][1] == trials
        assert all(a[1] == b[0] for a, b in zip(ranges, ranges[1:]))


def test_run_config_validation():
    with pytest.raises(ParameterError):
        RunConfig("maudlin", trials=0)
    with pytest.raises(ParameterError):
        RunConfig("maudlin", master_seed=-1)
    with pytest.raises(ParameterError):
        RunConfig("maudlin", master_seed=2**64)
    with pytest.raises(ParameterError):
        RunConfig("maudlin", workers=0)


def test_frequency_table_counts_must_match_trials():
    with pytest.raises(ValueError):
        FrequencyTable({"A": 3, "B": 3}, 7)
    table = FrequencyTable({"B": 1, "A": 3}, 4)
    assert list(table.counts) == ["A", "B"]
    assert table.frequencies == {"A": 0.75, "B": 0.25}


def test_tolerance():
    assert tolerance(0.5, 10_000) == pytest.approx(0.02)
    assert tolerance(0.0, 10_000) == 0.0
    assert tolerance(1.0, 10_000) == 0.0
    # Narrower with more trials, widest at p = 1/2.
    assert tolerance(0.3, 1000) > tolerance(0.3, 10_000) > tolerance(0.3, 100_000)
    assert tolerance(0.1, 1000) < tolerance(0.3, 1000) < tolerance(0.5, 1000)


def test_compare_examples():
    expected = {"A": 0.5, "B": 0.5}
    assert compare(FrequencyTable({"A": 5010, "B": 4990}, 10_000), expected).passed
    report = compare(FrequencyTable({"A": 5300, "B": 4700}, 10_000), expected)
    assert not report.passed
    assert not report.row("A").passed
    assert report.row("A").tolerance == pytest.approx(0.02)


def test_compare_zero_probability_outcome():
    expected = {"bright": 1.0, "dark": 0.0}
    assert compare(FrequencyTable({"bright": 1000}, 1000), expected).passed
    report = compare(FrequencyTable({"bright": 997, "dark": 3}, 1000), expected)
    assert not report.row("dark").passed
    assert not report.passed


def test_compare_counts_unexpected_outcomes_as_failures():
    report = compare(FrequencyTable({"A": 9, NO_TRANSACTION: 1}, 10), {"A": 1.0})
    assert report.row(NO_TRANSACTION).expected == 0.0
    assert not report.passed


def test_compare_is_monotone_in_distance():
    trials, p = 1000, 0.3
    expected = {"A": p, "B": 1.0 - p}
    verdicts = {
        count: compare(FrequencyTable({"A": count, "B": trials - count}, trials), expected).passed
        for count in range(trials + 1)
    }
    # Moving the count closer to the expected one never turns a pass into a failure.
    by_distance = sorted(verdicts, key=lambda count: abs(count / trials - p), reverse=True)
    passes = [verdicts[count] for count in by_distance]
    first_pass = passes.index(True)
    assert all(passes[first_pass:])
    assert verdicts[300]
    assert not verdicts[0]


def test_compare_chi_square():
    report = compare(FrequencyTable({"A": 60, "B": 40}, 100), {"A": 0.5, "B": 0.5})
    assert report.chi_square == pytest.approx(4.0)
    assert report.passed


@pytest.mark.usefixtures("pass_options")
class TestStatisticalChecks:
    """Sampled statistics at full size."""

    def test_random_states_follow_born_rule(self, np_rng):
        trials = self.TRIALS
        for index in range(20):
            dimension = int(np_rng.integers(2, 9))
            state, basis = random_system(np_rng, dimension)
            space = labels(dimension)
            absorbers = [
                Absorber(
                    f"d{k}",
                    f"o{k}",
                    projector(space, np.outer(basis[:, k], basis[:, k].conj())),
                    SpacetimeEvent(1.0),
                )
                for k in range(dimension)
            ]
            cascade = build_cascade(OfferWave("source", state, SpacetimeEvent(0.0)), absorbers)
            counts = run_trials(cascade, index, 0, trials)
            report = compare(FrequencyTable(dict(counts), trials), outcome_distribution(cascade))
            assert report.passed, [row for row in report.rows if not row.passed]

    def test_unabsorbed_offer_never_forms(self):
        trials = max(self.TRIALS // 100, 1)
        for dimension in (1, 2, 7):
            overrides = {"dimension": dimension}
            table = run(RunConfig("unabsorbed_offer", trials, master_seed=8, overrides=overrides))
            assert table.counts == {NO_TRANSACTION: trials}

    def test_chsh_reaches_tsirelson_bound(self):
        result = chsh_run(seed=2024, trials_per_setting=self.TRIALS, workers=2)
        assert result.s_value == pytest.approx(2 * math.sqrt(2), abs=0.05)
        assert result.s_value > CHSH_BOUND
        for name, (angle_a, angle_b) in result.settings.items():
            assert result.correlations[name] == pytest.approx(
                -math.cos(angle_a - angle_b), abs=0.03
            )


def test_chsh_with_equal_settings_is_perfectly_anticorrelated():
    settings = [(f"s{k}", 0.0, 0.0) for k in range(4)]
    result = chsh_run(seed=1, trials_per_setting=500, settings=settings)
    assert all(value == pytest.approx(-1.0) for value in result.correlations.values())
    assert result.s_value == pytest.approx(2.0)


def test_chsh_needs_four_settings():
    with pytest.raises(ParameterError):
        chsh_run(seed=0, trials_per_setting=10, settings=[("a,b", 0.0, 0.0)])
