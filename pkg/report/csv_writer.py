"""
CSV artifacts.

Schema version 1.  Curve files have the columns
``run_id,regime,phase,epoch,head,metric,value``; retention files
``regime,old_accuracy,new_accuracy,retention,rank``.  Reals are written
with 17 significant digits, lines end with LF, so equal inputs give
byte-identical files and every value parses back exactly.
"""

from __future__ import annotations

__all__ = ["CURVE_COLUMNS", "RETENTION_COLUMNS", "emit_csv", "read_csv"]

import csv
import dataclasses
import logging
from enum import Enum
from pathlib import Path
from typing import Final, Sequence, Union

from altm.errors import ArtifactIOError, UsageError
from report.curves import CurvePoint
from report.retention import RetentionRow

logger = logging.getLogger(__name__)

CURVE_COLUMNS: Final = ("run_id", "regime", "phase", "epoch", "head", "metric", "value")
RETENTION_COLUMNS: Final = ("regime", "old_accuracy", "new_accuracy", "retention", "rank")

Rows = Union[Sequence[CurvePoint], Sequence[RetentionRow]]


def _cell(value: object) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def emit_csv(rows: Rows, path: str | Path, *, columns: Sequence[str] | None = None) -> Path:
    """
    Write curve points or retention rows to *path*.

    The header follows the row type; an empty sequence writes the header
    given by *columns* (curve columns by default) and nothing else.

    Raises:
        ArtifactIOError: if the file cannot be written.
    """
    if columns is None:
        columns = RETENTION_COLUMNS if rows and isinstance(rows[0], RetentionRow) else CURVE_COLUMNS
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_cell(v) for v in dataclasses.astuple(row)])
    except OSError as exc:
        raise ArtifactIOError("cannot write csv", target) from exc
    logger.debug("wrote %d rows to %s", len(rows), target)
    return target


def read_csv(path: str | Path) -> list[CurvePoint] | list[RetentionRow]:
    """
    Parse a file written by :func:`emit_csv`.

    Raises:
        ArtifactIOError: if the file cannot be read.
        UsageError: on an unknown header or a malformed row.
    """
    source = Path(path)
    try:
        with source.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ArtifactIOError("cannot read csv", source) from exc
    if not rows:
        raise UsageError(f"{source}: missing header")

    header, body = tuple(rows[0]), rows[1:]
    try:
        if header == CURVE_COLUMNS:
            return [
                CurvePoint(run_id, regime, int(phase), int(epoch), head, metric, float(value))
                for run_id, regime, phase, epoch, head, metric, value in body
            ]
        if header == RETENTION_COLUMNS:
            return [
                RetentionRow(regime, float(old), float(new), float(ret), int(rank))
                for regime, old, new, ret, rank in body
            ]
    except ValueError as exc:
        raise UsageError(f"{source}: malformed row ({exc})") from exc
    raise UsageError(f"{source}: unknown header {','.join(header)}")
