"""Deterministic parallel map over replication indices.

Work items are keyed by index and every worker derives its randomness
from (seed, index), so results are assembled in index order and are
byte-identical for any worker count, including the serial path.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Sequence


def _limit_blas():
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(1)
    except Exception:
        pass


def resolve_threads(threads=None) -> int:
    """CLI --threads value, MAXINFER_THREADS fallback, else available cores."""
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("MAXINFER_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def map_indices(fn: Callable[[int], object], count: int, threads: int = 1) -> List[object]:
    """[fn(0), ..., fn(count-1)], evaluated with up to `threads` processes."""
    if count == 0:
        return []
    if threads <= 1 or count == 1:
        return [fn(i) for i in range(count)]
    chunk = max(1, count // (threads * 8))
    with ProcessPoolExecutor(max_workers=min(threads, count), initializer=_limit_blas) as pool:
        return list(pool.map(fn, range(count), chunksize=chunk))
