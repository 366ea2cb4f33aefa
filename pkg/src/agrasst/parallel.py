"""Order-preserving map over worker processes."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable


def resolve_threads(threads: int | None) -> int:
    if threads is None or threads <= 0:
        return os.cpu_count() or 1
    return threads


def pmap(fn: Callable, items: Iterable, threads: int | None = 1, chunksize: int = 1) -> list:
    """``[fn(x) for x in items]``, spread over up to ``threads`` processes.

    Results come back in input order, so the output never depends on the
    worker count.  ``fn`` and the items must be picklable when ``threads > 1``.
    """
    items = list(items)
    workers = min(resolve_threads(threads), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
