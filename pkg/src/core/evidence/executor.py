"""
Window Executor
===============

Worker pool for per-window evaluations. Workers receive contiguous chunks of
the row-major window list and return one result per window; results are put
back in window order so the accumulation order never depends on the worker
count.
"""

from typing import Callable, Iterator, List, Sequence, Tuple, TypeVar
from concurrent.futures import ThreadPoolExecutor

from src.config.logging import get_logger

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def iter_chunks(items: Sequence[T], parts: int) -> Iterator[Tuple[int, Sequence[T]]]:
    """Split ``items`` into at most ``parts`` contiguous chunks with their start index."""
    size = max(1, -(-len(items) // max(parts, 1)))
    for start in range(0, len(items), size):
        yield start, items[start : start + size]


class WindowExecutor:
    """Runs a chunk function over window indices on a thread pool."""

    def __init__(self, threads: int = 1) -> None:
        if threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}")
        self.threads = threads
        self.logger = logger.bind(component="window_executor", threads=threads)

    def map_chunks(
        self, items: Sequence[T], work: Callable[[int, Sequence[T]], List[R]]
    ) -> List[R]:
        """Apply ``work(start, chunk)`` to every chunk; concatenate results in order.

        ``work`` must return exactly one result per item of its chunk.
        """
        chunks = list(iter_chunks(items, self.threads))
        if self.threads == 1 or len(chunks) <= 1:
            results = [work(start, chunk) for start, chunk in chunks]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                futures = [pool.submit(work, start, chunk) for start, chunk in chunks]
                results = [future.result() for future in futures]
        merged: List[R] = []
        for (start, chunk), part in zip(chunks, results):
            if len(part) != len(chunk):
                raise RuntimeError(
                    f"chunk at {start} returned {len(part)} results for {len(chunk)} windows"
                )
            merged.extend(part)
        self.logger.debug("Chunks evaluated", chunks=len(chunks), items=len(items))
        return merged
