"""
Discrete environment transitions.

The development environment is rich in supervision: few semantic classes,
each item seen under many graphical transforms.  The novel environment has
many more classes, each item typically seen from a single view.  Both draw
their items from one hierarchy sample so they share a perceptual space.
"""

from __future__ import annotations

__all__ = [
    "Encoding",
    "EnvironmentConfig",
    "TransitionSpec",
    "item_matrix",
    "build_environment",
    "make_transition",
]

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from altm.errors import ParameterError
from altm.linalg import Matrix, Rng
from datagen.environment import (
    Environment,
    TransformKind,
    apply_graphical_factors,
    make_transforms,
    one_hot,
)
from datagen.hierarchy import HierarchyConfig, gen_hierarchy

logger = logging.getLogger(__name__)


class Encoding(str, Enum):
    FEATURES = "features"
    ONEHOT = "onehot"


@dataclass(frozen=True, slots=True)
class EnvironmentConfig:
    """
    Attributes:
        semantic_level: tree level whose nodes are the semantic classes.
        items_per_class: leaves taken under each class (None = all).
        item_offset: index of the first leaf taken inside each class, so two
            environments can use disjoint item pools.
        num_transforms: graphical transforms per item, identity included.
        transform_kind: orthogonal-linear or permutation.
        encoding: branching-diffusion features or whitened one-hot codes.
    """

    semantic_level: int = 2
    items_per_class: int | None = None
    item_offset: int = 0
    num_transforms: int = 1
    transform_kind: TransformKind = TransformKind.ORTHOGONAL
    encoding: Encoding = Encoding.FEATURES

    def __post_init__(self) -> None:
        object.__setattr__(self, "transform_kind", TransformKind(self.transform_kind))
        object.__setattr__(self, "encoding", Encoding(self.encoding))
        if self.items_per_class is not None and self.items_per_class < 1:
            raise ParameterError(f"items_per_class must be >= 1, got {self.items_per_class}")
        if self.item_offset < 0:
            raise ParameterError(f"item_offset must be >= 0, got {self.item_offset}")
        if self.num_transforms < 1:
            raise ParameterError(f"num_transforms must be >= 1, got {self.num_transforms}")

    def leaves(self, hierarchy: HierarchyConfig) -> tuple[np.ndarray, np.ndarray]:
        """Selected leaf indices and their semantic classes."""
        num_classes = hierarchy.classes_at(self.semantic_level)
        per_class = hierarchy.num_leaves // num_classes
        take = per_class - self.item_offset if self.items_per_class is None else self.items_per_class
        if take < 1 or self.item_offset + take > per_class:
            raise ParameterError(
                f"classes at level {self.semantic_level} hold {per_class} leaves; "
                f"cannot take {take} starting at offset {self.item_offset}"
            )
        classes = np.repeat(np.arange(num_classes), take)
        leaves = classes * per_class + self.item_offset + np.tile(np.arange(take), num_classes)
        return leaves, classes


@dataclass(frozen=True, slots=True, eq=False)
class TransitionSpec:
    """Old environment ``env1`` followed by new environment ``env2``."""

    env1: Environment
    env2: Environment
    shared_graphics: bool = False

    def __post_init__(self) -> None:
        if self.env1.input_dim != self.env2.input_dim:
            raise ParameterError(
                f"environments disagree on input dim: {self.env1.input_dim} vs {self.env2.input_dim}"
            )

    @property
    def input_dim(self) -> int:
        return self.env1.input_dim

    @property
    def same_task(self) -> bool:
        return self.env1 is self.env2


def item_matrix(hierarchy: HierarchyConfig, encoding: Encoding | str) -> Matrix:
    """Percepts of all leaves, one row per leaf."""
    if Encoding(encoding) is Encoding.ONEHOT:
        n = hierarchy.num_leaves
        return np.sqrt(n) * np.eye(n)
    return gen_hierarchy(hierarchy)


def build_environment(
    items: Matrix,
    hierarchy: HierarchyConfig,
    cfg: EnvironmentConfig,
    rng: Rng,
    *,
    name: str,
    transforms: Sequence[Matrix] | None = None,
) -> Environment:
    """Full item x transform crossing of the leaves *cfg* selects."""
    leaves, classes = cfg.leaves(hierarchy)
    return apply_graphical_factors(
        items[leaves],
        cfg.num_transforms,
        cfg.transform_kind,
        rng,
        semantic_classes=classes,
        num_semantic=hierarchy.classes_at(cfg.semantic_level),
        item_ids=leaves,
        transforms=transforms,
        name=name,
    )


def _shared_views(
    novel: EnvironmentConfig, hierarchy: HierarchyConfig, num_dev: int, rng: Rng
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Item-major (leaf, class, dev transform) triples of the shared-graphics novel set."""
    leaves, classes = novel.leaves(hierarchy)
    views = novel.num_transforms
    if views > num_dev:
        raise ParameterError(f"novel asks for {views} shared transforms, development has {num_dev}")
    if views == 1:
        return leaves, classes, rng.integers(num_dev, leaves.size)
    picks = np.concatenate([rng.choice(num_dev, views) for _ in leaves])
    return np.repeat(leaves, views), np.repeat(classes, views), picks


def make_transition(
    dev: EnvironmentConfig,
    novel: EnvironmentConfig,
    hierarchy: HierarchyConfig,
    *,
    shared_graphics: bool = False,
    seed: int = 0,
) -> TransitionSpec:
    """
    Build the development and novel environments from one hierarchy sample.

    With ``shared_graphics`` the novel items are shown through the
    development transforms, so both environments have the same input
    statistics.  A novel ``num_transforms`` of 1 draws one transform per
    item uniformly; larger values give every item that many distinct
    transforms, all of them when it equals the development count.  Equal
    configs without shared graphics give the same-task transition
    (``env1 is env2``).

    Raises:
        ParameterError: if the two encodings give different input dims, or
            shared graphics ask for more transforms than development has.
    """
    if dev.encoding is not novel.encoding:
        raise ParameterError(
            f"dev encoding {dev.encoding.value!r} and novel encoding "
            f"{novel.encoding.value!r} give different perceptual spaces"
        )
    root = Rng(seed)
    items = item_matrix(hierarchy, dev.encoding)
    dim = items.shape[1]
    dev_transforms = make_transforms(dim, dev.num_transforms, dev.transform_kind, root.child("transforms/dev"))
    env1 = build_environment(items, hierarchy, dev, root, name="dev", transforms=dev_transforms)

    if dev == novel and not shared_graphics:
        env2 = env1
    elif shared_graphics:
        leaves, classes, picks = _shared_views(novel, hierarchy, len(dev_transforms), root.child("transforms/novel"))
        inputs = np.stack(
            [dev_transforms[g] @ items[leaf] for leaf, g in zip(leaves, picks)], axis=1
        )
        env2 = Environment(
            name="novel",
            inputs=inputs,
            semantic=one_hot(classes, hierarchy.classes_at(novel.semantic_level)),
            graphical=one_hot(picks, len(dev_transforms)),
            item_ids=leaves.astype(np.int64),
            transform_ids=picks.astype(np.int64),
        )
    else:
        env2 = build_environment(items, hierarchy, novel, root.child("transforms/novel"), name="novel")

    logger.info(
        "transition: dev %d examples (%d classes), novel %d examples (%d classes)",
        env1.size,
        env1.num_classes("semantic"),
        env2.size,
        env2.num_classes("semantic"),
    )
    return TransitionSpec(env1=env1, env2=env2, shared_graphics=shared_graphics)
