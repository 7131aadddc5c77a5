"""In-memory worker pool for independent, seeded trials."""

from __future__ import annotations

import asyncio
import time
from typing import Any, Callable, Dict, Iterable, List

from src.logger import get_logger, log_failure, log_timing, log_with_context

from .models import TrialJob, TrialResult

logger = get_logger()

TrialHandler = Callable[[TrialJob], Dict[str, Any]]

__all__ = ["TrialJob", "TrialResult", "TrialHandler", "run_trials", "run_trials_async"]


class _TrialPool:
    def __init__(self, handler: TrialHandler, workers: int) -> None:
        if workers < 1:
            raise ValueError(f"Worker count must be positive, got {workers}")
        self._queue: asyncio.Queue[TrialJob] = asyncio.Queue()
        self._handler = handler
        self._workers = workers
        self._results: List[TrialResult] = []

    async def _worker_loop(self, worker_id: int) -> None:
        while True:
            job = await self._queue.get()
            start_time = time.perf_counter()
            ctx_logger = log_with_context(logger, trial=job.trial_id, seed=job.seed, worker=worker_id)
            try:
                # handlers are CPU bound; the event loop only schedules them
                with log_timing(ctx_logger, "trial"):
                    value = await asyncio.to_thread(self._handler, job)
                self._results.append(
                    TrialResult(
                        trial_id=job.trial_id,
                        seed=job.seed,
                        ok=True,
                        value=value,
                        duration_seconds=time.perf_counter() - start_time,
                    )
                )
            except Exception as exc:
                duration = time.perf_counter() - start_time
                log_failure(logger, f"Trial failed after {duration:.3f}s", exc, trial=job.trial_id, seed=job.seed)
                self._results.append(
                    TrialResult(
                        trial_id=job.trial_id,
                        seed=job.seed,
                        ok=False,
                        error=f"{type(exc).__name__}: {exc}",
                        duration_seconds=duration,
                    )
                )
            finally:
                self._queue.task_done()

    async def run(self, jobs: Iterable[TrialJob]) -> List[TrialResult]:
        for job in jobs:
            self._queue.put_nowait(job)
        pending = self._queue.qsize()
        logger.debug(f"Running {pending} trial(s) on {self._workers} worker(s)")

        tasks = [asyncio.create_task(self._worker_loop(i)) for i in range(self._workers)]
        try:
            await self._queue.join()
        finally:
            for task in tasks:
                task.cancel()
            await asyncio.gather(*tasks, return_exceptions=True)
        return sorted(self._results, key=lambda result: result.trial_id)


async def run_trials_async(jobs: Iterable[TrialJob], handler: TrialHandler, workers: int = 1) -> List[TrialResult]:
    return await _TrialPool(handler, workers).run(jobs)


def run_trials(jobs: Iterable[TrialJob], handler: TrialHandler, workers: int = 1) -> List[TrialResult]:
    """Run every job through ``handler``; results come back sorted by trial id.

    A failing trial is captured as ``ok=False`` with the error message and does
    not stop the others.
    """

    return asyncio.run(run_trials_async(list(jobs), handler, workers))
