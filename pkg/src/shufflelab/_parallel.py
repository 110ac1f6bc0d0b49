"""Replica batching shared by the Monte Carlo drivers.

Replicas are grouped into fixed-size chunks and chunk ``c`` always draws from
the stream ``(master_seed, tag, c)``.  Work is split by chunk, so the worker
count never changes what any replica sees; results are concatenated in chunk
order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from .rng import replica_rng

CHUNK = 1024


def default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:  # pragma: no cover - non-Linux
        return max(1, os.cpu_count() or 1)


def chunks(reps: int, size: int = CHUNK) -> list[tuple[int, int, int]]:
    """``(chunk_index, first_replica, count)`` covering ``reps`` replicas."""
    return [(c, lo, min(size, reps - lo)) for c, lo in enumerate(range(0, reps, size))]


def map_chunks(
    fn: Callable[[np.random.Generator, int, int], np.ndarray],
    reps: int,
    seed: int,
    tag: str,
    workers: int = 1,
    size: int = CHUNK,
) -> np.ndarray:
    """Run ``fn(rng, first, count)`` per chunk and stack the results in order.

    ``fn`` should release the GIL (the numba kernels are ``nogil``) for the
    thread pool to give any speed-up.
    """
    jobs = chunks(reps, size)

    def run(job):
        c, lo, cnt = job
        return fn(replica_rng(seed, tag, c), lo, cnt)

    if workers <= 1 or len(jobs) <= 1:
        parts = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, jobs))
    if not parts:
        return np.zeros(0)
    return np.concatenate(parts, axis=0)
