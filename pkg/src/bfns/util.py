"""Deterministic worker-pool helper for embarrassingly parallel sweeps."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

MAX_WORKERS_ENV = "BFNS_MAX_WORKERS"


def effective_jobs(jobs):
    """Apply the worker cap from the environment; it only lowers, never raises."""
    jobs = max(1, int(jobs))
    cap = os.environ.get(MAX_WORKERS_ENV)
    if cap is not None:
        try:
            cap = int(cap)
        except ValueError:
            return jobs
        if cap >= 1:
            jobs = min(jobs, cap)
    return jobs


def parallel_map(fn, items, jobs=1):
    """Map fn over items, preserving order.  Results are independent of the
    worker count, so reports built from them are byte-identical for any
    --jobs value."""
    jobs = effective_jobs(jobs)
    items = list(items)
    if jobs == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))
