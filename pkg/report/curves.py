"""Flat metric points behind every loss and accuracy curve."""

from __future__ import annotations

__all__ = ["MetricKind", "CurvePoint", "curve_points", "zoom_window"]

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from altm.errors import NumericalError, ParameterError
from altm.regime import RunRecord


class MetricKind(str, Enum):
    LOSS = "loss"
    ACCURACY = "accuracy"


@dataclass(frozen=True, slots=True)
class CurvePoint:
    run_id: str
    regime: str
    phase: int
    epoch: int
    head: str
    metric: MetricKind
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "metric", MetricKind(self.metric))
        if not math.isfinite(self.value):
            raise NumericalError(f"{self.head} {self.metric.value} at epoch {self.epoch} is not finite")
        if self.metric is MetricKind.ACCURACY and not 0.0 <= self.value <= 1.0:
            raise ParameterError(f"accuracy {self.value} outside [0, 1]")


def curve_points(record: RunRecord, run_id: str) -> list[CurvePoint]:
    """Points in (phase, epoch, head, metric) order; heads sorted by id."""
    points: list[CurvePoint] = []
    for row in record.rows:
        for head in sorted(row.losses):
            points.append(CurvePoint(run_id, record.regime, row.phase, row.epoch, head, MetricKind.LOSS, row.losses[head]))
            points.append(
                CurvePoint(run_id, record.regime, row.phase, row.epoch, head, MetricKind.ACCURACY, row.accuracies[head])
            )
    return points


def zoom_window(points: Iterable[CurvePoint], start: int, stop: int) -> list[CurvePoint]:
    """
    Points with ``start <= epoch <= stop``, in input order.

    Raises:
        ParameterError: if the window is empty by construction.
    """
    if stop < start:
        raise ParameterError(f"zoom window [{start}, {stop}] is empty")
    return [p for p in points if start <= p.epoch <= stop]
