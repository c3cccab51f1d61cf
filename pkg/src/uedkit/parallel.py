"""Order-preserving chunked map with bounded in-flight work."""

from __future__ import annotations

import itertools
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Iterator, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def chunked(items: Iterable[T], size: int) -> Iterator[list[T]]:
    it = iter(items)
    while True:
        chunk = list(itertools.islice(it, size))
        if not chunk:
            return
        yield chunk


def ordered_map(fn: Callable[[T], R], chunks: Iterable[T], workers: int = 1,
                max_pending: int | None = None) -> Iterator[R]:
    """Apply ``fn`` to each chunk, yielding results in input order.

    With ``workers > 1`` chunks go to a process pool, but never more than
    ``max_pending`` (default ``2 * workers``) at once, so the input stream
    is consumed lazily. Because chunking and result order do not depend on
    the worker count, neither does anything reduced from the results.
    """
    if workers <= 1:
        for chunk in chunks:
            yield fn(chunk)
        return
    limit = max_pending or 2 * workers
    with ProcessPoolExecutor(max_workers=workers) as pool:
        pending: deque = deque()
        for chunk in chunks:
            pending.append(pool.submit(fn, chunk))
            if len(pending) >= limit:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()
