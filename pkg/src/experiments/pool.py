"""Ordered fan-out of independent tasks over worker processes."""

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import TypeVar

from src.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: int | None) -> int:
    return max(1, threads if threads is not None else settings.threads)


def run_ordered(func: Callable[[T], R], tasks: Sequence[T], threads: int | None = None) -> list[R]:
    """Apply func to every task; results come back in submission order.

    func must be a module-level function so it can be pickled.
    """
    workers = min(resolve_threads(threads), len(tasks))
    if workers <= 1:
        return [func(task) for task in tasks]
    logger.info("running %d tasks on %d worker processes", len(tasks), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))
