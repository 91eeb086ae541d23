"""Order-preserving thread pool for independent evaluations."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Apply ``fn`` to every item, returning results in input order.

    ``threads <= 1`` runs inline. Results never depend on the thread
    count: each call is independent and the output order is fixed.
    """
    work = list(items)
    if threads <= 1 or len(work) <= 1:
        return [fn(item) for item in work]
    workers = min(threads, len(work))
    logger.debug("Running %d evaluations on %d threads", len(work), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, work))
