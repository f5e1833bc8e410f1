"""A utility for running Monte Carlo trials on several processes at once"""

import logging
import queue
from collections import Counter
from collections.abc import Mapping
from copy import deepcopy
from multiprocessing import Manager, Process

import numpy as np

from handshake.engine import Cascade, resolve_cascade
from handshake.scenarios import build_scenario

default_logger = logging.getLogger(__name__)

CHUNKS_PER_PROCESS = 4


def trial_stream(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent random stream for one trial.

    Philox is counter-based: the master seed is the key and the trial index
    occupies the high word of the 256-bit counter, so streams never overlap
    and do not depend on which process runs the trial.
    """
    counter = np.array([0, 0, 0, trial_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=master_seed))


def run_trials(cascade: Cascade, master_seed: int, start: int, stop: int) -> Counter:
    """Resolve trials ``start`` to ``stop - 1`` and count their results."""
    counts: Counter = Counter()
    for trial_index in range(start, stop):
        outcome = resolve_cascade(cascade, trial_stream(master_seed, trial_index))
        counts[outcome.result] += 1
    return counts


def split_trials(trials: int, chunk_count: int) -> list[tuple[int, int]]:
    """Contiguous (start, stop) ranges covering ``range(trials)``."""
    chunk_count = max(1, min(chunk_count, trials))
    bounds = np.linspace(0, trials, chunk_count + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def multi_core_run(
    scenario_name: str,
    overrides: Mapping[str, float],
    master_seed: int,
    trials: int,
    process_count: int,
) -> Counter:
    """
    Spread the trials of one scenario over ``process_count`` worker processes.

    Parameters
    ----------
    scenario_name : str
        Registered scenario; each worker builds its own copy.
    overrides : Mapping[str, float]
        Scenario parameter overrides
    master_seed : int
    trials : int
    process_count : int
        Number of worker processes to run (expected >= 1)

    Returns
    -------
    Counter of outcome labels over all trials
    """
    chunks = split_trials(trials, process_count * CHUNKS_PER_PROCESS)
    process_count = max(1, min(process_count, len(chunks)))

    with Manager() as manager:
        chunk_queue = manager.Queue(len(chunks))
        count_list = manager.list()

        for chunk in chunks:
            chunk_queue.put(chunk)

        # Spawn worker processes
        processes = []
        for _ in range(process_count):
            trial_process = Process(
                target=_trial_worker,
                args=(chunk_queue, count_list, scenario_name, dict(overrides), master_seed),
            )
            processes.append(trial_process)
            trial_process.start()

        # Ensure worker processes exit successfully
        for process in processes:
            process.join()
            if process.exitcode != 0:
                raise RuntimeError(f"Trial worker failed - exit code: {process.exitcode}")

            process.close()

        partial_counts = deepcopy(list(count_list))  # ensure GC can cleanup multiprocessing

    total: Counter = Counter()
    for counts in partial_counts:
        total.update(counts)
    return total


def _trial_worker(
    chunk_queue: queue.Queue,
    count_list: list,
    scenario_name: str,
    overrides: dict,
    master_seed: int,
) -> None:
    """
    A method to be executed in a separate process which drains the chunk_queue
    and places the outcome counts of each finished chunk into count_list.

    Parameters
    ----------
    chunk_queue : queue.Queue
        (start, stop) trial ranges - filled from the start and only decreases
    count_list : list
        outcome counts of completed chunks
    scenario_name : str
    overrides : dict
    master_seed : int
    """
    cascade = build_scenario(scenario_name, overrides).cascade

    while not chunk_queue.empty():
        try:
            start, stop = chunk_queue.get_nowait()
        except queue.Empty:
            break

        default_logger.debug("Worker running trials %d..%d of %s", start, stop - 1, scenario_name)
        count_list.append(dict(run_trials(cascade, master_seed, start, stop)))
