"""Final old/new accuracy of each run, ranked by how much of the old task survived."""

from __future__ import annotations

__all__ = ["RetentionRow", "retention_table"]

from dataclasses import dataclass
from typing import Sequence

from altm.errors import ParameterError, UsageError
from altm.regime import RunRecord


@dataclass(frozen=True, slots=True)
class RetentionRow:
    regime: str
    old_accuracy: float
    new_accuracy: float
    retention: float
    rank: int


def retention_table(
    records: Sequence[RunRecord],
    old_head: str,
    new_head: str,
    reference: float | None = None,
) -> list[RetentionRow]:
    """
    One row per record from its final evaluation, sorted by retention.

    Retention is the old accuracy divided by *reference* (typically the
    teacher's accuracy), or the old accuracy itself without one.  The sort
    is stable and ascending, so equal retentions keep input order; ranks
    are 1-based positions in that order.

    Raises:
        UsageError: if a record lacks either head or the records evaluate a
            head on different label fields.
        ParameterError: if *reference* is not positive.
    """
    if reference is not None and not reference > 0.0:
        raise ParameterError(f"reference accuracy must be positive, got {reference}")
    seen: dict[str, object] = {}
    pending = []
    for record in records:
        final = record.final
        for head in (old_head, new_head):
            if head not in final.accuracies:
                raise UsageError(f"run {record.regime!r} has no final accuracy for head {head!r}")
            task = record.tasks.get(head)
            if seen.setdefault(head, task) != task:
                raise UsageError(f"runs evaluate head {head!r} on different tasks")
        old_acc = final.accuracies[old_head]
        retention = old_acc / reference if reference is not None else old_acc
        pending.append((record.regime, old_acc, final.accuracies[new_head], retention))

    ordered = sorted(pending, key=lambda r: r[3])
    return [RetentionRow(*row, rank=i) for i, row in enumerate(ordered, start=1)]
