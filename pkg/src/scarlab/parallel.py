"""Deterministic parallel map over pure per-momentum tasks.

Workers only change wall time, never results: each task is pure, results are
collected by input position, and reductions happen in a fixed order.  The
worker count comes from the config, overridable via SCARLAB_WORKERS.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def resolve_workers(requested: int | None) -> int:
    env = os.environ.get("SCARLAB_WORKERS")
    if env is not None:
        return max(1, int(env))
    if requested is None or requested < 1:
        return 1
    return requested


def parallel_map(fn, items, workers: int = 1) -> list:
    """Map fn over items, preserving input order in the result list.

    Threads suffice here: the heavy work is numpy array arithmetic, which
    releases the GIL.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
