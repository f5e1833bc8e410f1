"""
record_handling.py

Machine-readable result records: JSON for whole records, CSV for the
frequency table (or the CHSH correlations).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields
from typing import Any

import importlib_metadata

from handshake.harness import ChshResult, ComparisonReport, FrequencyTable

PROGRAM = "handshake"
try:
    VERSION = importlib_metadata.distribution(PROGRAM).version
except importlib_metadata.PackageNotFoundError:
    VERSION = "0+unknown"

CSV_HEADER = ("outcome", "count", "frequency", "expected", "pass")
CHSH_CSV_HEADER = ("setting", "angle_a", "angle_b", "correlation")

CHSH_TARGET = 2.0 * 2.0**0.5
CHSH_TOLERANCE = 0.05


@dataclass(frozen=True)
class OutputRecord:
    scenario: str
    parameters: dict[str, float]
    seed: int
    trials: int
    counts: dict[str, int]
    frequencies: dict[str, float]
    expected: dict[str, float]
    report: dict[str, Any]
    engine_version: str = VERSION


@dataclass(frozen=True)
class ChshRecord:
    seed: int
    trials_per_setting: int
    settings: dict[str, list[float]]
    correlations: dict[str, float]
    s_value: float
    target: float
    tolerance: float
    passed: bool
    engine_version: str = VERSION


def report_to_dict(report: ComparisonReport) -> dict[str, Any]:
    return {
        "passed": report.passed,
        "chi_square": report.chi_square,
        "rows": [asdict(row) for row in report.rows],
    }


def construct_record(
    scenario: str,
    parameters: dict[str, float],
    seed: int,
    table: FrequencyTable,
    expected: dict[str, float],
    report: ComparisonReport,
) -> OutputRecord:
    """Assemble the record for one run.

    Parameters
    ----------
    scenario : str
    parameters : dict
        Effective scenario parameters, defaults included.
    seed : int
    table : FrequencyTable
    expected : dict
    report : ComparisonReport

    Returns
    -------
    OutputRecord
    """
    return OutputRecord(
        scenario=scenario,
        parameters=dict(parameters),
        seed=seed,
        trials=table.trials,
        counts=dict(table.counts),
        frequencies=table.frequencies,
        expected=dict(expected),
        report=report_to_dict(report),
    )


def construct_chsh_record(seed: int, result: ChshResult) -> ChshRecord:
    return ChshRecord(
        seed=seed,
        trials_per_setting=result.trials_per_setting,
        settings={name: list(angles) for name, angles in result.settings.items()},
        correlations=dict(result.correlations),
        s_value=result.s_value,
        target=CHSH_TARGET,
        tolerance=CHSH_TOLERANCE,
        passed=abs(result.s_value - CHSH_TARGET) <= CHSH_TOLERANCE,
    )


def emit_json(record: OutputRecord | ChshRecord) -> str:
    return json.dumps(asdict(record), indent=2, ensure_ascii=False) + "\n"


def parse_record(text: str) -> OutputRecord:
    """Rebuild an OutputRecord from its JSON form."""
    data = json.loads(text)
    expected_keys = {f.name for f in fields(OutputRecord)}
    if set(data) != expected_keys:
        raise ValueError(f"Record keys {sorted(data)} do not match {sorted(expected_keys)}.")
    return OutputRecord(**data)


def parse_chsh_record(text: str) -> ChshRecord:
    return ChshRecord(**json.loads(text))


def emit_csv(record: OutputRecord) -> str:
    """Frequency table as CSV, one row per compared outcome."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in record.report["rows"]:
        writer.writerow(
            (
                row["outcome"],
                row["count"],
                repr(row["observed"]),
                repr(row["expected"]),
                "true" if row["passed"] else "false",
            )
        )
    return buffer.getvalue()


def emit_chsh_csv(record: ChshRecord) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CHSH_CSV_HEADER)
    for name, (angle_a, angle_b) in record.settings.items():
        writer.writerow((name, repr(angle_a), repr(angle_b), repr(record.correlations[name])))
    writer.writerow(("S", "", "", repr(record.s_value)))
    return buffer.getvalue()
