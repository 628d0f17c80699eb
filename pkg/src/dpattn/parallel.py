"""Trial-level parallelism with scheduling-independent results.

``DPATTN_THREADS`` caps the worker count (default 1).  Results are written
into a slot indexed by trial number and every trial draws from its own
substream, so the output is bit-identical for any thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

from .errors import ParamRange

ENV_THREADS = "DPATTN_THREADS"

T = TypeVar("T")


def thread_cap() -> int:
    raw = os.environ.get(ENV_THREADS)
    if raw is None:
        return 1
    try:
        cap = int(raw)
    except ValueError:
        raise ParamRange(f"{ENV_THREADS} must be a positive integer, got {raw!r}")
    if cap < 1:
        raise ParamRange(f"{ENV_THREADS} must be >= 1, got {cap}")
    return cap


def trial_map(fn: Callable[[int], T], count: int) -> list[T]:
    """Evaluate ``fn(t)`` for ``t in range(count)``, possibly on a thread pool."""
    if count < 0:
        raise ParamRange(f"trial count must be non-negative, got {count}")
    workers = min(thread_cap(), count) if count else 0
    if workers <= 1:
        return [fn(t) for t in range(count)]
    results: list[T] = [None] * count  # type: ignore[list-item]

    def run(t: int) -> None:
        results[t] = fn(t)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(run, range(count)))
    return results
