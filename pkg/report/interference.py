"""
Catastrophic-interference summary of one loss curve around a task switch.

``converged`` is the mean of the last pre-switch losses, ``peak`` the
largest loss from the switch epoch on, and ``recovery_epoch`` the first
epoch at or after the peak whose loss is back within ``band * converged``.
"""

from __future__ import annotations

__all__ = ["InterferenceStats", "interference_stats", "series_interference"]

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from altm.errors import ParameterError, RangeError
from altm.regime import RunRecord

DEFAULT_BAND = 1.1
DEFAULT_WINDOW = 10


@dataclass(frozen=True, slots=True)
class InterferenceStats:
    converged: float
    peak: float
    peak_epoch: int
    recovery_epoch: int | None

    @property
    def ratio(self) -> float:
        """``peak / converged``; infinite for a zero baseline."""
        return self.peak / self.converged if self.converged > 0.0 else float("inf")


def series_interference(
    series: Sequence[tuple[int, float]],
    switch_epoch: int,
    *,
    band: float = DEFAULT_BAND,
    window: int = DEFAULT_WINDOW,
) -> InterferenceStats:
    """
    Stats of an ``(epoch, loss)`` series.

    Repeated epochs keep the later value, so the initial row of a phase
    replaces the final row of the previous one.

    Raises:
        RangeError: if *switch_epoch* has no losses before or from it.
        ParameterError: if *band* < 1 or *window* < 1.
    """
    if band < 1.0 or window < 1:
        raise ParameterError(f"band must be >= 1 and window >= 1, got {band}, {window}")
    by_epoch = dict(series)
    epochs = sorted(by_epoch)
    pre = [by_epoch[e] for e in epochs if e < switch_epoch]
    post = [e for e in epochs if e >= switch_epoch]
    if not pre or not post:
        raise RangeError(
            f"switch epoch {switch_epoch} outside the recorded span "
            f"[{epochs[0] if epochs else None}, {epochs[-1] if epochs else None}]"
        )

    converged = float(np.mean(pre[-window:]))
    values = np.array([by_epoch[e] for e in post])
    k = int(np.argmax(values))
    threshold = band * converged
    recovery = next((post[j] for j in range(k, len(post)) if values[j] <= threshold), None)
    return InterferenceStats(converged, float(values[k]), post[k], recovery)


def interference_stats(
    record: RunRecord,
    head: str,
    switch_epoch: int,
    *,
    band: float = DEFAULT_BAND,
    window: int = DEFAULT_WINDOW,
) -> InterferenceStats:
    """Stats of *head*'s loss curve in *record*; see :func:`series_interference`."""
    return series_interference(record.series(head, "loss"), switch_epoch, band=band, window=window)
