import asyncio
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Optional, Sequence

from esnchip.config import WORKERS, setup_logging

# Worker-side shared payload (e.g. the prepared dataset), set once per process.
_shared: Any = None


def _init_worker(payload: Any, level: Optional[str]) -> None:
    global _shared
    _shared = payload
    setup_logging(level, tag="SWEEP")


def shared() -> Any:
    return _shared


async def _collect(fn: Callable[[Any], Any], jobs: Sequence[Any], workers: int,
                   payload: Any, level: Optional[str]) -> List[Any]:
    """
    Fans the jobs out to a process pool and collects the results in job
    order. Each job owns all of its state; only this coroutine merges.
    """
    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=(payload, level)) as pool:
        futures = [loop.run_in_executor(pool, fn, job) for job in jobs]
        results = await asyncio.gather(*futures)
    return list(results)


def run_sweep(fn: Callable[[Any], Any], jobs: Sequence[Any], workers: Optional[int] = None,
              payload: Any = None, level: Optional[str] = None) -> List[Any]:
    """
    Runs fn(job) for every job, in parallel when workers > 1. fn must be a
    module-level function; it can read `payload` through shared().
    """
    global _shared
    jobs = list(jobs)
    workers = min(workers or WORKERS, max(1, len(jobs)))
    logging.info(f"Starting sweep of {len(jobs)} job(s) on {workers} worker(s)...")
    if workers == 1:
        previous, _shared = _shared, payload
        try:
            results = [fn(job) for job in jobs]
        finally:
            _shared = previous
    else:
        results = asyncio.run(_collect(fn, jobs, workers, payload, level or logging.getLevelName(logging.getLogger().level)))
    logging.info("Sweep finished.")
    return results
