"""
Labeled environments built by crossing items with graphical transforms.

A graphical transform changes the percept of an item but never its
semantic class.  Transform 0 is always the identity.  Examples are laid
out item-major: all transforms of item 0, then of item 1, and so on.
"""

from __future__ import annotations

__all__ = [
    "LabelKind",
    "TransformKind",
    "Environment",
    "one_hot",
    "make_transforms",
    "apply_graphical_factors",
]

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from altm.errors import ParameterError, ShapeError, UsageError
from altm.linalg import Matrix, Rng, identity, random_orthogonal
from altm.losses import check_one_hot


class LabelKind(str, Enum):
    SEMANTIC = "semantic"
    GRAPHICAL = "graphical"


class TransformKind(str, Enum):
    ORTHOGONAL = "orthogonal-linear"
    PERMUTATION = "permutation"


def one_hot(indices: Sequence[int] | NDArray[np.int64], num_classes: int) -> Matrix:
    """Column-per-example one-hot matrix ``(num_classes, len(indices))``."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= num_classes):
        raise ParameterError(f"class index outside [0, {num_classes})")
    out = np.zeros((num_classes, idx.size), dtype=np.float64)
    out[idx, np.arange(idx.size)] = 1.0
    return out


@dataclass(frozen=True, slots=True, eq=False)
class Environment:
    """
    Immutable labeled dataset; columns are examples.

    Attributes:
        name: short identifier used in logs and reports.
        inputs: percepts, ``(input_dim, n)``.
        semantic: one-hot semantic labels, ``(num_semantic, n)``.
        graphical: one-hot graphical labels, ``(num_graphical, n)``.
        item_ids: source item (leaf index) of every example.
        transform_ids: transform applied to every example.
    """

    name: str
    inputs: Matrix
    semantic: Matrix
    graphical: Matrix
    item_ids: NDArray[np.int64]
    transform_ids: NDArray[np.int64]

    def __post_init__(self) -> None:
        n = self.inputs.shape[1]
        for what, arr in (
            ("semantic labels", self.semantic),
            ("graphical labels", self.graphical),
        ):
            if arr.ndim != 2 or arr.shape[1] != n:
                raise ShapeError(f"{self.name}: {what} have {arr.shape} columns, inputs have {n}")
            check_one_hot(arr)
        if self.item_ids.shape != (n,) or self.transform_ids.shape != (n,):
            raise ShapeError(f"{self.name}: metadata length does not match {n} examples")
        if not np.all(np.isfinite(self.inputs)):
            raise ParameterError(f"{self.name}: non-finite inputs")
        for arr in (self.inputs, self.semantic, self.graphical, self.item_ids, self.transform_ids):
            arr.setflags(write=False)

    # ------------------------------------------------------------------
    @property
    def size(self) -> int:
        return self.inputs.shape[1]

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[0]

    def labels(self, kind: LabelKind | str) -> Matrix:
        return self.semantic if LabelKind(kind) is LabelKind.SEMANTIC else self.graphical

    def num_classes(self, kind: LabelKind | str) -> int:
        return self.labels(kind).shape[0]

    def class_index(self, kind: LabelKind | str) -> NDArray[np.int64]:
        return np.argmax(self.labels(kind), axis=0)

    def columns(self, idx: NDArray[np.int64]) -> "Environment":
        """Sub-environment made of the selected example columns."""
        if idx.size == 0:
            raise UsageError(f"{self.name}: empty selection")
        return Environment(
            name=self.name,
            inputs=self.inputs[:, idx],
            semantic=self.semantic[:, idx],
            graphical=self.graphical[:, idx],
            item_ids=self.item_ids[idx],
            transform_ids=self.transform_ids[idx],
        )


# ------------------------------------------------------------------
# Graphical factors
# ------------------------------------------------------------------
def make_transforms(
    dim: int, count: int, kind: TransformKind | str, rng: Rng
) -> tuple[Matrix, ...]:
    """
    *count* distinct percept transforms of a *dim*-dimensional space.

    The first transform is the identity; the rest are Haar-random orthogonal
    maps or distinct coordinate permutations.

    Raises:
        ParameterError: if *count* < 1 or exceeds ``dim!`` for permutations.
    """
    kind = TransformKind(kind)
    if count < 1:
        raise ParameterError(f"need at least one transform, got {count}")
    transforms: list[Matrix] = [identity(dim)]
    if kind is TransformKind.ORTHOGONAL:
        transforms += [random_orthogonal(dim, rng) for _ in range(count - 1)]
        return tuple(transforms)

    if count > math.factorial(dim):
        raise ParameterError(f"{count} transforms requested but only {math.factorial(dim)} permutations of {dim} dims exist")
    seen = {tuple(range(dim))}
    while len(transforms) < count:
        perm = rng.permutation(dim)
        key = tuple(int(p) for p in perm)
        if key in seen:
            continue
        seen.add(key)
        transforms.append(identity(dim)[perm])
    return tuple(transforms)


def apply_graphical_factors(
    items: Matrix,
    num_transforms: int,
    kind: TransformKind | str,
    rng: Rng,
    *,
    semantic_classes: Sequence[int] | None = None,
    num_semantic: int | None = None,
    item_ids: Sequence[int] | None = None,
    transforms: Sequence[Matrix] | None = None,
    name: str = "env",
) -> Environment:
    """
    Cross every item with every transform.

    Args:
        items: one item per row, ``(n_items, dim)``.
        num_transforms: G, number of transforms including the identity.
        semantic_classes: class of every item (default: the item's row).
        num_semantic: semantic label space size (default: max class + 1).
        item_ids: ids recorded in the metadata (default: row index).
        transforms: explicit transform set; drawn with *rng* when omitted.

    Returns:
        Environment with ``n_items * G`` examples, each (item, transform)
        pair exactly once; ``y_g`` is the transform index.
    """
    n_items, dim = items.shape
    if num_transforms < 1:
        raise ParameterError(f"need at least one transform, got {num_transforms}")
    taus = tuple(transforms) if transforms is not None else make_transforms(dim, num_transforms, kind, rng)
    if len(taus) != num_transforms:
        raise ParameterError(f"{len(taus)} transforms given, {num_transforms} expected")

    classes = np.arange(n_items) if semantic_classes is None else np.asarray(semantic_classes, dtype=np.int64)
    ids = np.arange(n_items) if item_ids is None else np.asarray(item_ids, dtype=np.int64)
    k_sem = int(classes.max()) + 1 if num_semantic is None else num_semantic

    # (G, dim, n_items) -> item-major columns
    views = np.stack([tau @ items.T for tau in taus])
    inputs = views.transpose(1, 2, 0).reshape(dim, n_items * num_transforms)
    item_col = np.repeat(np.arange(n_items), num_transforms)
    g_col = np.tile(np.arange(num_transforms), n_items)
    return Environment(
        name=name,
        inputs=np.ascontiguousarray(inputs),
        semantic=one_hot(classes[item_col], k_sem),
        graphical=one_hot(g_col, num_transforms),
        item_ids=ids[item_col],
        transform_ids=g_col,
    )
