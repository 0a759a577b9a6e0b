"""
Replica Runner - Deterministic replica-parallel execution.

Replica i always draws from ``RngStream(seed, i)``. Index ranges of a fixed
chunk size are dispatched to a process pool and results come back in replica
order, so the worker count changes wall time only.
"""

import logging
import multiprocessing
from typing import Any, Callable, List, Optional, Sequence, Tuple

from .config import get_settings
from .rng import RngStream

logger = logging.getLogger(__name__)

ReplicaFn = Callable[..., Any]


def _run_chunk(task: Tuple[ReplicaFn, int, int, int, Tuple[Any, ...]]) -> List[Any]:
    fn, seed, start, stop, args = task
    return [fn(RngStream(seed, i), *args) for i in range(start, stop)]


def _run_chunk_call(task: Tuple[ReplicaFn, int, int, int, Tuple[Any, ...]]) -> Any:
    fn, seed, start, stop, args = task
    return fn(seed, start, stop, *args)


class ReplicaRunner:
    """Runs a replica function over stream indices [offset, offset + count)."""

    def __init__(self, workers: Optional[int] = None, chunk_size: Optional[int] = None):
        settings = get_settings()
        self.workers = max(1, workers if workers is not None else settings.workers)
        self.chunk_size = max(1, chunk_size if chunk_size is not None else settings.chunk_size)

    def map(self, fn: ReplicaFn, seed: int, count: int, args: Sequence[Any] = (),
            offset: int = 0) -> List[Any]:
        """
        Evaluate ``fn(RngStream(seed, i), *args)`` for every replica index.

        Args:
            fn: Module-level (picklable) replica function
            seed: Run seed
            count: Number of replicas
            args: Extra positional arguments shared by all replicas
            offset: First stream index

        Returns:
            Results ordered by replica index
        """
        results: List[Any] = []
        for chunk in self._dispatch(_run_chunk, fn, seed, count, args, offset):
            results.extend(chunk)
        return results

    def map_chunks(self, chunk_fn: ReplicaFn, seed: int, count: int, args: Sequence[Any] = (),
                   offset: int = 0) -> List[Any]:
        """
        Evaluate ``chunk_fn(seed, start, stop, *args)`` once per index range.

        Used when a chunk reduces its replicas locally (e.g. integer edge
        counts); the returned partials are in chunk order.
        """
        return list(self._dispatch(_run_chunk_call, chunk_fn, seed, count, args, offset))

    def _dispatch(self, runner, fn, seed, count, args, offset):
        if count <= 0:
            return
        tasks = [(fn, seed, start, min(start + self.chunk_size, offset + count), tuple(args))
                 for start in range(offset, offset + count, self.chunk_size)]
        if self.workers == 1 or len(tasks) == 1:
            for done, task in enumerate(tasks, start=1):
                yield runner(task)
                logger.debug(f"chunk {done}/{len(tasks)} done")
            return
        with multiprocessing.Pool(processes=min(self.workers, len(tasks))) as pool:
            for done, partial in enumerate(pool.imap(runner, tasks), start=1):
                yield partial
                logger.debug(f"chunk {done}/{len(tasks)} done")
