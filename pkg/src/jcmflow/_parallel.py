"""Ordered thread-pool mapping capped by ``JCMFLOW_THREADS``."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def thread_count() -> int:
    env = os.environ.get("JCMFLOW_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"JCMFLOW_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ValueError("JCMFLOW_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def ordered_map(fn, items):
    """``list(map(fn, items))`` evaluated on a thread pool, order preserved."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def chunked(arr: np.ndarray, size: int):
    return [arr[i:i + size] for i in range(0, len(arr), size)]
