"""Order-preserving map over independent grid tasks."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def resolve_workers(workers=None) -> int:
    """Explicit value, else ``HARPER_Z2_WORKERS``, else 1."""
    if workers is None:
        workers = os.environ.get("HARPER_Z2_WORKERS", 1)
    workers = int(workers)
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    return workers


def parallel_map(fn, items, workers=1):
    """``list(map(fn, items))``, fanned out over processes when workers > 1.

    ``fn`` must be picklable (a module-level function or a partial of one).
    Results come back in input order, so output never depends on the
    worker count.
    """
    items = list(items)
    workers = resolve_workers(workers)
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    workers = min(workers, len(items))
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
