"""Per-record fan-out used by the dataset stages.

Work items are pure functions of record content, so execution order cannot
influence results; outputs are re-sorted by the manifest layer regardless.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def map_records(
    func: Callable[[T], R],
    items: Sequence[T],
    workers: int = 1,
) -> tuple[list[R], list[tuple[T, Exception]]]:
    """Apply ``func`` to every item, serially or across a thread pool.

    Returns (results, failures); failures carry the item and its exception so
    stages can abort with a full partial-failure report instead of dying on
    the first error.
    """
    results: list[R] = []
    failures: list[tuple[T, Exception]] = []
    if workers <= 1:
        for item in items:
            try:
                results.append(func(item))
            except Exception as exc:  # noqa: BLE001 - collected and re-raised by the stage
                failures.append((item, exc))
        return results, failures

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [(item, pool.submit(func, item)) for item in items]
        for item, fut in futures:
            try:
                results.append(fut.result())
            except Exception as exc:  # noqa: BLE001
                failures.append((item, exc))
    return results, failures
