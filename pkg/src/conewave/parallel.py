"""Ordered, optionally threaded map used by the numerical kernels.

The number of worker threads is read from ``CONEWAVE_THREADS`` (default
1).  Results are always returned in input order, so reductions over them
are bitwise independent of the thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

__all__ = ["thread_count", "ordered_map"]

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    raw = os.environ.get("CONEWAVE_THREADS", "1").strip()
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)


def ordered_map(func: Callable[[T], R], items: Iterable[T]) -> list[R]:
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
