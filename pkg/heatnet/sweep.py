"""
Parallel evaluation of parameter grids.

Points are dispatched through asyncio with a bounded number in flight.
With more than one worker each point runs in a ``ProcessPoolExecutor``;
results are stored by grid index so the output order never depends on
the worker count.
"""
import asyncio
import logging
from concurrent.futures import Executor, ProcessPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)


class SweepRunner:
    """Bounded-concurrency grid evaluator"""

    def __init__(self, workers: int = 1, progress_every: Optional[int] = None):
        self.workers = max(1, int(workers))
        self.progress_every = progress_every
        self.results: Dict[int, Any] = {}
        self._done = 0
        self._lock = asyncio.Lock()

    async def _evaluate(
        self,
        index: int,
        fn: Callable[..., Any],
        args: Tuple[Any, ...],
        total: int,
        semaphore: asyncio.Semaphore,
        executor: Optional[Executor],
    ) -> None:
        async with semaphore:
            if executor is None:
                result = fn(*args)
            else:
                loop = asyncio.get_running_loop()
                result = await loop.run_in_executor(executor, fn, *args)
        async with self._lock:
            self.results[index] = result
            self._done += 1
            every = self.progress_every or max(1, total // 20)
            if self._done % every == 0 or self._done == total:
                logger.info(f"Sweep progress {self._done}/{total}")

    async def run(self, fn: Callable[..., Any], points: Sequence[Tuple[Any, ...]]) -> List[Any]:
        """
        Evaluate ``fn(*args)`` for every entry of ``points``.

        ``fn`` must be a module-level function when workers > 1 so it can
        be pickled.

        Returns:
            results in the order of ``points``
        """
        self.results = {}
        self._done = 0
        self._lock = asyncio.Lock()
        total = len(points)
        if total == 0:
            return []
        semaphore = asyncio.Semaphore(self.workers)
        executor = ProcessPoolExecutor(max_workers=self.workers) if self.workers > 1 else None
        try:
            await asyncio.gather(*[
                self._evaluate(i, fn, tuple(args), total, semaphore, executor)
                for i, args in enumerate(points)
            ])
        finally:
            if executor is not None:
                executor.shutdown(wait=True)
        return [self.results[i] for i in range(total)]

    def run_sync(self, fn: Callable[..., Any], points: Sequence[Tuple[Any, ...]]) -> List[Any]:
        """Blocking wrapper around ``run`` for callers outside an event loop"""
        return asyncio.run(self.run(fn, points))

