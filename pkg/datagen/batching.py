"""Seeded minibatch streams over an environment."""

from __future__ import annotations

__all__ = ["BatchStream", "minibatches"]

import numpy as np
from numpy.typing import NDArray

from altm.errors import ParameterError, UsageError
from altm.linalg import Rng
from datagen.environment import Environment


class BatchStream:
    """
    Column-index batches of an environment, one seeded permutation per epoch.

    A batch size of ``None`` or of at least the environment size yields a
    single full batch in natural order and consumes no randomness.  The last
    short batch of an epoch is kept.
    """

    def __init__(self, env: Environment, batch_size: int | None, rng: Rng) -> None:
        if env.size == 0:
            raise UsageError(f"environment {env.name!r} has no examples")
        if batch_size is not None and batch_size < 1:
            raise ParameterError(f"batch size must be >= 1, got {batch_size}")
        self.env = env
        self.rng = rng
        self.batch_size = env.size if batch_size is None else min(batch_size, env.size)
        self._pending: list[NDArray[np.int64]] = []

    @property
    def full_batch(self) -> bool:
        return self.batch_size >= self.env.size

    @property
    def batches_per_epoch(self) -> int:
        return -(-self.env.size // self.batch_size)

    def epoch(self) -> list[NDArray[np.int64]]:
        """Partition of all example indices for one pass."""
        if self.full_batch:
            return [np.arange(self.env.size)]
        order = self.rng.permutation(self.env.size)
        return [order[i : i + self.batch_size] for i in range(0, order.size, self.batch_size)]

    def next_batch(self) -> NDArray[np.int64]:
        """Next batch, starting a fresh epoch when the current one is spent."""
        if not self._pending:
            self._pending = self.epoch()
        return self._pending.pop(0)


def minibatches(env: Environment, batch_size: int | None, rng: Rng) -> BatchStream:
    """
    Raises:
        UsageError: if *env* is empty.
        ParameterError: if *batch_size* < 1.
    """
    return BatchStream(env, batch_size, rng)
