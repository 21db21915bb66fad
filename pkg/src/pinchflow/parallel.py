"""Deterministic chunked parallel map.

Work is split into fixed-size chunks whose boundaries depend only on the
problem size, so results are identical for any worker count. The worker
count comes from ``PINCHFLOW_THREADS`` (0 or unset means one per CPU).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

T = TypeVar("T")

ENV_VAR = "PINCHFLOW_THREADS"


def thread_count(override: int | None = None) -> int:
    if override is not None and override > 0:
        return int(override)
    raw = os.environ.get(ENV_VAR, "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{ENV_VAR} must be an integer, got {raw!r}") from exc
    if value < 0:
        raise ValueError(f"{ENV_VAR} must be >= 0, got {value}")
    return value if value > 0 else (os.cpu_count() or 1)


def chunk_bounds(total: int, chunk: int) -> list[tuple[int, int]]:
    return [(s, min(s + chunk, total)) for s in range(0, total, chunk)]


def chunked_map(fn: Callable[[int, int], T], total: int, chunk: int, threads: int | None = None) -> list[T]:
    """Apply ``fn(start, stop)`` to consecutive chunks and return results in chunk order."""
    bounds = chunk_bounds(total, chunk)
    workers = min(thread_count(threads), max(len(bounds), 1))
    if workers <= 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))
