"""
Shard execution engine with proper lifecycle and error handling.
"""

from concurrent.futures import Executor, ProcessPoolExecutor
from typing import Any, Callable, Iterable, Optional

from .errors import BudgetExceededError, HypothesisError, InvariantViolationError
from .logger import logger


class ShardEngineError(Exception):
    """Raised when a shard fails or the worker pool cannot be managed."""

    pass


class ShardEngine:
    """
    Managed worker pool that maps a function over shards.

    Results always come back in shard order, so a reduction over them is
    reproducible for a given shard layout whatever the thread count.

    Usage:
        with ShardEngine(threads=4) as engine:
            partials = engine.map(count_shard, shards)
    """

    def __init__(self, threads: int = 1):
        """
        Initialize engine configuration.

        Args:
            threads: Number of worker processes (1 runs everything in-process)
        """
        if threads < 1:
            raise ShardEngineError(f"threads must be >= 1, got {threads}")
        self.threads = threads
        self.pool: Optional[Executor] = None

    def __enter__(self) -> "ShardEngine":
        """Enter context manager - start the worker pool when needed."""
        logger.debug(f"Initializing shard engine (threads={self.threads})")
        if self.threads > 1:
            try:
                self.pool = ProcessPoolExecutor(max_workers=self.threads)
            except Exception as e:
                logger.error(f"Failed to start worker pool: {e}")
                raise ShardEngineError(f"Failed to start worker pool: {e}") from e
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        """Exit context manager - shut the pool down."""
        if self.pool:
            try:
                self.pool.shutdown(wait=True, cancel_futures=exc_type is not None)
                logger.debug("Worker pool shut down")
            except Exception as e:
                logger.warning(f"Error shutting down worker pool: {e}")
            finally:
                self.pool = None

    def map(self, fn: Callable[[Any], Any], shards: Iterable[Any]) -> list[Any]:
        """Apply ``fn`` to every shard; results are returned in shard order."""
        shards = list(shards)
        try:
            if self.pool is None:
                return [fn(shard) for shard in shards]
            return list(self.pool.map(fn, shards))
        except (BudgetExceededError, InvariantViolationError, HypothesisError):
            raise
        except Exception as e:
            logger.error(f"Shard execution failed: {e}")
            raise ShardEngineError(f"Shard execution failed: {e}") from e


def run_sharded(fn: Callable[[Any], Any], shards: Iterable[Any], threads: int = 1) -> list[Any]:
    """Convenience wrapper: open an engine, map, close."""
    with ShardEngine(threads) as engine:
        return engine.map(fn, shards)
