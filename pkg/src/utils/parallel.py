"""Order-preserving parallel map over utterances."""

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def default_jobs() -> int:
    """Available cores, at least 1."""
    return os.cpu_count() or 1


def parallel_map(
    func: Callable[[T], R],
    items: Iterable[T],
    jobs: Optional[int] = None,
) -> List[R]:
    """
    Apply func to every item, returning results in input order.

    Runs in-process when jobs is 1 or there is a single item. func must be a
    module-level callable so it can be pickled for worker processes.
    """
    items = list(items)
    jobs = default_jobs() if jobs is None else jobs
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    chunksize = max(1, len(items) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items, chunksize=chunksize))
