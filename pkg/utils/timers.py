"""
Wall-clock measurement for training loops.

Readings only ever reach the run log and the ``wall_time`` field of
evaluation rows, never a numeric artifact.
"""

from __future__ import annotations

import time

__all__ = ["Stopwatch"]


class Stopwatch:
    """
    Monotonic elapsed-time counter.

    Example:
         watch = Stopwatch()
         for epoch in range(n):
             train(epoch)
         logger.info("done in %.2fs", watch.elapsed())
    """

    __slots__ = ("_start",)

    def __init__(self) -> None:
        self._start = time.perf_counter()

    def elapsed(self) -> float:
        """Seconds since construction."""
        return time.perf_counter() - self._start
