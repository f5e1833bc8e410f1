"""A simple CLI wrapper around the scenario library and the trial harness."""

import logging
import os
import sys
from argparse import ArgumentParser, ArgumentTypeError, Namespace
from pathlib import Path
from typing import TextIO

from handshake import DEFAULT_TRIALS, SEED_ENV_VAR
from handshake.errors import HandshakeError, UsageError
from handshake.harness import MAX_SEED, RunConfig, chsh_run, compare, run
from handshake.record_handling import (
    construct_chsh_record,
    construct_record,
    emit_chsh_csv,
    emit_csv,
    emit_json,
)
from handshake.scenarios import SCENARIOS, build_scenario

EXIT_PASS = 0
EXIT_STATISTICAL_FAILURE = 1
EXIT_USAGE = 2


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as err:
        raise ArgumentTypeError(f"expected an integer, got {text!r}") from err
    if value < 1:
        raise ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError as err:
        raise ArgumentTypeError(f"expected an integer seed, got {text!r}") from err
    if not 0 <= value <= MAX_SEED:
        raise ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {value}")
    return value


def _parameter(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise ArgumentTypeError(f"expected name=value, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError as err:
        raise ArgumentTypeError(f"parameter {name!r} needs a real value, got {value!r}") from err


def parse_args(args: list) -> Namespace:
    """
    Parse args for this script.

    Returns
    -------
    argparse.Namespace
    """
    parser = ArgumentParser(
        prog="handshake",
        description="Simulate offer/confirmation-wave transactions and check their statistics.",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        help="Enable verbose logging on stderr; useful for debugging",
        action="store_true",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    subparsers.add_parser("list", help="List scenarios with their parameters and defaults.")

    run_parser = subparsers.add_parser("run", help="Run a scenario and emit its frequency table.")
    run_parser.add_argument("scenario", help="Name of a registered scenario (see 'list').")
    run_parser.add_argument(
        "--trials", type=_positive_int, default=DEFAULT_TRIALS, help="Number of trials."
    )
    run_parser.add_argument(
        "--param",
        type=_parameter,
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="Scenario parameter override; repeatable.",
    )

    chsh_parser = subparsers.add_parser(
        "chsh", help="Estimate the CHSH quantity S from the singlet at the canonical angles."
    )
    chsh_parser.add_argument(
        "--trials-per-setting",
        type=_positive_int,
        default=DEFAULT_TRIALS,
        help="Trials per setting.",
    )

    for sub in (run_parser, chsh_parser):
        sub.add_argument(
            "--seed",
            type=_seed,
            default=None,
            help=f"Master seed (default: ${SEED_ENV_VAR}, else 0).",
        )
        sub.add_argument("--format", choices=["json", "csv"], default="json")
        sub.add_argument("--out", default=None, help="Output file (default: standard output).")
        sub.add_argument(
            "--check",
            action="store_true",
            help="Compare against the expected statistics and gate the exit status.",
        )
        sub.add_argument(
            "--workers", type=_positive_int, default=1, help="Number of worker processes."
        )

    parsed = parser.parse_args(args)

    if parsed.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    return parsed


def _resolve_seed(parsed: Namespace) -> int:
    # The flag wins over the environment.
    if parsed.seed is not None:
        return parsed.seed
    env_value = os.environ.get(SEED_ENV_VAR)
    if env_value is None or env_value == "":
        return 0
    try:
        return _seed(env_value)
    except ArgumentTypeError as err:
        raise UsageError(f"{SEED_ENV_VAR}: {err}") from err


def _validate_output_path(out: str | None) -> Path | None:
    if out is None:
        return None
    output_path = Path(out).resolve()
    if output_path.is_dir():  # the specified path is an existing directory
        raise UsageError("Output path cannot be a directory. Please specify a new filepath.")
    return output_path


def _write_output(text: str, output_path: Path | None, stream: TextIO) -> None:
    if output_path is None:
        stream.write(text)
    else:
        output_path.write_text(text, encoding="utf-8")
        logging.info("Result written to %s", output_path)


def cmd_list(stream: TextIO) -> int:
    """Print each scenario with its parameters, defaults and description."""
    for name in sorted(SCENARIOS):
        entry = SCENARIOS[name]
        params = ", ".join(f"{key}={value:g}" for key, value in sorted(entry.defaults.items()))
        stream.write(f"{name}\t{params or '-'}\t{entry.description}\n")
    return EXIT_PASS


def cmd_run(parsed: Namespace, stream: TextIO) -> int:
    seed = _resolve_seed(parsed)
    output_path = _validate_output_path(parsed.out)
    overrides = dict(parsed.param)

    scenario = build_scenario(parsed.scenario, overrides)
    config = RunConfig(
        scenario_name=parsed.scenario,
        trials=parsed.trials,
        master_seed=seed,
        overrides=overrides,
        workers=parsed.workers,
    )
    table = run(config)
    expected = scenario.expected_outcomes()
    report = compare(table, expected)

    record = construct_record(
        parsed.scenario, dict(scenario.parameters), seed, table, expected, report
    )
    text = emit_json(record) if parsed.format == "json" else emit_csv(record)
    _write_output(text, output_path, stream)

    if parsed.check and not report.passed:
        failing = [row.outcome for row in report.rows if not row.passed]
        logging.warning("Statistical check failed for outcome(s): %s", ", ".join(failing))
        return EXIT_STATISTICAL_FAILURE
    return EXIT_PASS


def cmd_chsh(parsed: Namespace, stream: TextIO) -> int:
    seed = _resolve_seed(parsed)
    output_path = _validate_output_path(parsed.out)

    result = chsh_run(seed, parsed.trials_per_setting, workers=parsed.workers)
    record = construct_chsh_record(seed, result)
    text = emit_json(record) if parsed.format == "json" else emit_chsh_csv(record)
    _write_output(text, output_path, stream)

    if parsed.check and not record.passed:
        logging.warning(
            "S = %f is outside %f ± %f", record.s_value, record.target, record.tolerance
        )
        return EXIT_STATISTICAL_FAILURE
    return EXIT_PASS


def run_handshake(args: list, stream: TextIO | None = None) -> int:
    """
    Parse arguments and run the requested command.

    Returns
    -------
    int
        0 on success, 1 on a failed statistical check, 2 on a usage error.
    """
    stream = stream if stream is not None else sys.stdout
    try:
        parsed = parse_args(args)
    except SystemExit as exit_request:
        return int(exit_request.code or 0)

    try:
        if parsed.command == "list":
            return cmd_list(stream)
        if parsed.command == "run":
            return cmd_run(parsed, stream)
        return cmd_chsh(parsed, stream)
    except HandshakeError as err:
        print(f"handshake: error: {err}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    """Entry point to the script"""
    logging.basicConfig(
        stream=sys.stderr,
        format="[%(asctime)s] {%(filename)s:%(lineno)d} %(levelname)s - %(message)s",
        level=logging.INFO,
    )
    sys.exit(run_handshake(sys.argv[1:]))


if __name__ == "__main__":
    main()
