"""Fixed-chunk parallel map.

Work is always cut into the same chunks whatever the thread count, and
results come back in chunk order, so threaded runs are bit-identical to
serial ones.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

__all__ = ["chunked_map", "CHUNK"]

CHUNK = 64


def chunked_map(fn, n: int, threads: int = 1, chunk: int = CHUNK) -> list:
    """Apply ``fn(start, stop)`` over ``range(n)`` in fixed chunks, in order."""
    bounds = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    if threads <= 1 or len(bounds) <= 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))
