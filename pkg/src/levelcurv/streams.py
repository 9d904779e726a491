"""Counter-based random streams and an order-preserving parallel map.

Every random quantity in the package is drawn from ``stream(seed, *ids)``
where ``ids`` names the task (grid index, chunk index, restart index, ...),
never the worker.  Results are therefore identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

_default_workers = 1


def set_default_workers(n: int) -> None:
    global _default_workers
    if n < 1:
        raise ValueError("workers must be >= 1")
    _default_workers = int(n)


def default_workers() -> int:
    return _default_workers


def stream(seed: int, *ids: int) -> np.random.Generator:
    """Independent Philox stream keyed by ``(seed, *ids)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in ids))
    return np.random.Generator(np.random.Philox(ss))


def pmap(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
    """``[fn(x) for x in items]`` evaluated on a thread pool, results in input order."""
    items = list(items)
    workers = workers or _default_workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def chunked_until(fn: Callable[[int], R], done: Callable[[Sequence[R]], bool],
                  max_chunks: int, workers: int | None = None) -> list[R]:
    """Evaluate ``fn(0), fn(1), ...`` in waves of ``workers`` chunks and return the
    shortest prefix for which ``done(prefix)`` holds (or all ``max_chunks``).

    Chunks computed past the stopping point are discarded, so the result does
    not depend on the wave size.
    """
    workers = workers or _default_workers
    out: list[R] = []
    k = 0
    while k < max_chunks:
        wave = list(range(k, min(k + workers, max_chunks)))
        results = pmap(fn, wave, workers)
        for r in results:
            out.append(r)
            if done(out):
                return out
        k += len(wave)
    return out
