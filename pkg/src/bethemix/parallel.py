"""Deterministic fan-out of independent tasks over worker processes."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

WORKERS_ENV = "BETHEMIX_WORKERS"


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, workers)


def run_tasks(fn: Callable, tasks: Sequence[tuple], workers: int | None = None) -> list:
    """``[fn(*t) for t in tasks]``, in order, possibly in parallel.

    Every task carries its own seed material, so results do not depend on
    how tasks are spread over workers.
    """
    workers = worker_count(workers)
    if workers == 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, *zip(*tasks)))
