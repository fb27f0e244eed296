"""Thread-count resolution and a tiny chunked executor.

Work is split into contiguous index ranges whose writes are disjoint, so
results do not depend on the number of threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("QUASAR_THREADS", "1") or 1)
    if threads < 1:
        raise ValueError("thread count must be at least 1")
    return int(threads)


@lru_cache(maxsize=None)
def _pool(threads: int) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=threads, thread_name_prefix="quasar")


def split(count: int, parts: int, align: int = 1) -> list[tuple[int, int]]:
    """Split ``range(count)`` into at most ``parts`` ranges with boundaries on ``align``."""
    units = -(-count // align) if count else 0
    parts = max(1, min(parts, units))
    bounds = [min(count, (units * i // parts) * align) for i in range(parts + 1)]
    return [(a, b) for a, b in zip(bounds, bounds[1:]) if b > a]


def run_ranges(fn, count: int, threads: int, align: int = 1) -> list:
    """Call ``fn(start, stop)`` over a partition of ``range(count)``; results in range order."""
    ranges = split(count, threads, align)
    if threads == 1 or len(ranges) <= 1:
        return [fn(a, b) for a, b in ranges]
    return list(_pool(threads).map(lambda r: fn(*r), ranges))
