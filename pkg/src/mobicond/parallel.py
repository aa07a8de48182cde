"""Deterministic fan-out of independent Monte Carlo jobs.

Every job carries its own pre-spawned generator, so results are a pure
function of the job list: worker count and scheduling order never change
the output (results come back in job order).
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

__all__ = ["map_indexed"]


def map_indexed(fn: Callable, jobs: Sequence, threads: int = 1) -> list:
    """Apply ``fn`` to each job, in order, optionally on a process pool."""
    if threads <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    workers = min(threads, len(jobs))
    chunk = max(1, len(jobs) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=chunk))
