"""
Environment export for external inspection.

Layout: header ``x0,...,x{d-1},y_s,y_g``, then one row per example with
inputs written to 17 significant digits and integer class labels.  Item ids
are not stored; an imported environment numbers its examples 0..n-1.
"""

from __future__ import annotations

__all__ = ["export_environment", "import_environment"]

import csv
from pathlib import Path

import numpy as np

from altm.errors import ArtifactIOError, UsageError
from datagen.environment import Environment, one_hot


def export_environment(env: Environment, path: str | Path) -> Path:
    """
    Raises:
        ArtifactIOError: if the file cannot be written.
    """
    target = Path(path)
    header = [f"x{i}" for i in range(env.input_dim)] + ["y_s", "y_g"]
    y_s = env.class_index("semantic")
    y_g = env.class_index("graphical")
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for col in range(env.size):
                row = [format(float(v), ".17g") for v in env.inputs[:, col]]
                writer.writerow([*row, int(y_s[col]), int(y_g[col])])
    except OSError as exc:
        raise ArtifactIOError("cannot write environment file", target) from exc
    return target


def import_environment(
    path: str | Path,
    *,
    name: str = "imported",
    num_semantic: int | None = None,
    num_graphical: int | None = None,
) -> Environment:
    """
    Read a file written by :func:`export_environment`.

    Label spaces default to ``max label + 1``.

    Raises:
        ArtifactIOError: if the file cannot be read.
        UsageError: if the header or a row is malformed.
    """
    source = Path(path)
    try:
        with source.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ArtifactIOError("cannot read environment file", source) from exc

    if not rows or rows[0][-2:] != ["y_s", "y_g"]:
        raise UsageError(f"{source}: header must end with y_s,y_g")
    dim = len(rows[0]) - 2
    body = rows[1:]
    if not body:
        raise UsageError(f"{source}: no examples")
    try:
        inputs = np.array([[float(v) for v in r[:dim]] for r in body], dtype=np.float64).T
        y_s = np.array([int(r[dim]) for r in body], dtype=np.int64)
        y_g = np.array([int(r[dim + 1]) for r in body], dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"{source}: malformed row ({exc})") from exc
    if inputs.shape[0] != dim:
        raise UsageError(f"{source}: rows do not have {dim} input columns")

    return Environment(
        name=name,
        inputs=np.ascontiguousarray(inputs),
        semantic=one_hot(y_s, int(y_s.max()) + 1 if num_semantic is None else num_semantic),
        graphical=one_hot(y_g, int(y_g.max()) + 1 if num_graphical is None else num_graphical),
        item_ids=np.arange(y_s.size, dtype=np.int64),
        transform_ids=y_g,
    )
