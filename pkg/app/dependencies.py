from multiprocessing import Pool
from multiprocessing.pool import Pool as PoolType
from typing import Callable, Iterable, TypeVar

from app.client.logger import logger
from app.config import settings

T = TypeVar("T")
R = TypeVar("R")


class DependencyNotInitializedError(Exception):
    """Raised when a dependency is accessed before initialization"""

    pass


class TrialPoolManager:
    """Process pool for independent seeded trials.

    With one worker trials run inline, which keeps logs and tracebacks in the
    calling process.
    """

    def __init__(self):
        self._pool: PoolType | None = None
        self._workers = 0

    def init(self, workers: int | None = None):
        workers = workers or settings.WORKERS
        self._workers = workers
        if workers > 1 and not self._pool:
            self._pool = Pool(workers)
            logger.info("trial pool started", workers=workers)

    def close(self):
        if self._pool:
            self._pool.close()
            self._pool.join()
            self._pool = None
            logger.info("trial pool closed")
        self._workers = 0

    @property
    def pool(self) -> PoolType:
        if not self._pool:
            raise DependencyNotInitializedError("Trial pool has not been initialized")
        return self._pool

    def map(self, func: Callable[[T], R], items: Iterable[T]) -> list[R]:
        """Apply func to every item, preserving order."""
        if self._workers == 0:
            raise DependencyNotInitializedError("Trial pool has not been initialized")
        if self._workers == 1:
            return [func(item) for item in items]
        return self.pool.map(func, list(items))


# Create singleton instances
trial_pool = TrialPoolManager()
