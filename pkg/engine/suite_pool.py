"""Suite Pool - bounded async pool for independent check suites."""

import asyncio
from collections.abc import Callable
from typing import Any

from common.constants import DEFAULT_MAX_CONCURRENCY
from common.observability.logging import get_log_context, get_logger, set_log_context

logger = get_logger(__name__)


class SuitePool:
    """Runs synchronous suite callables in worker threads, at most ``max_size`` at once."""

    def __init__(self, max_size: int = DEFAULT_MAX_CONCURRENCY) -> None:
        if max_size < 1:
            raise ValueError("pool size must be at least 1")
        self._max_size = max_size
        self._semaphore = asyncio.Semaphore(max_size)
        self._tasks: list[asyncio.Task[Any]] = []
        self._active_count = 0
        self._stopped = False

    @property
    def max_size(self) -> int:
        return self._max_size

    @property
    def active_count(self) -> int:
        """Number of suites currently running."""
        return self._active_count

    async def _run(self, name: str, func: Callable[..., Any], args: tuple[Any, ...], kwargs: dict[str, Any]) -> Any:
        async with self._semaphore:
            self._active_count += 1
            context = {**get_log_context(), "suite": name}

            def call() -> Any:
                # worker threads start with an empty context
                set_log_context(**context)
                return func(*args, **kwargs)

            try:
                logger.debug("suite started", suite=name, active=self._active_count)
                return await asyncio.to_thread(call)
            finally:
                self._active_count -= 1
                logger.debug("suite finished", suite=name)

    def submit(self, name: str, func: Callable[..., Any], *args: Any, **kwargs: Any) -> asyncio.Task[Any]:
        """Schedule a suite; results come back from ``wait_all`` in submission order."""
        if self._stopped:
            raise RuntimeError("Pool is stopped")
        task = asyncio.create_task(self._run(name, func, args, kwargs), name=name)
        self._tasks.append(task)
        return task

    async def wait_all(self) -> list[Any]:
        """
        Wait for every submitted suite.

        The first exception is re-raised after the remaining suites finish.
        """
        results = await asyncio.gather(*self._tasks, return_exceptions=True)
        self._tasks.clear()
        for result in results:
            if isinstance(result, BaseException):
                raise result
        return results

    async def stop(self) -> None:
        self._stopped = True
        pending = [task for task in self._tasks if not task.done()]
        for task in pending:
            task.cancel()
        if pending:
            await asyncio.gather(*pending, return_exceptions=True)
        self._tasks.clear()
        logger.debug("pool stopped", cancelled=len(pending))

    async def __aenter__(self) -> "SuitePool":
        return self

    async def __aexit__(self, *args: Any) -> None:
        await self.stop()
