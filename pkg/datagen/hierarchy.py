"""
Branching-diffusion generator of hierarchically structured item features.

Each feature is sampled independently down a complete tree: the root takes
a uniform +/-1 value, and every child copies its parent with the sign
flipped with probability ``flip_prob``.  The leaves are the items.  Two
leaves at edge distance d then have feature correlation ``(1 - 2 eps)^d``.

Leaves are numbered left to right, so the ancestor of leaf i at tree level
l (root = level 0) is ``i // branching ** (depth - l)``.
"""

from __future__ import annotations

__all__ = [
    "HierarchyConfig",
    "gen_hierarchy",
    "leaf_ancestor",
    "leaf_distance",
    "expected_correlation",
    "leaf_correlations",
]

from dataclasses import dataclass

import numpy as np

from altm.errors import ParameterError
from altm.linalg import Matrix, Rng


@dataclass(frozen=True, slots=True)
class HierarchyConfig:
    """
    Attributes:
        branching: children per node (>= 2).
        depth: edges from root to every leaf (>= 1).
        num_features: independent features per item (>= 1).
        flip_prob: per-edge sign-flip probability in [0, 0.5].
        seed: seed of the diffusion draws.
    """

    branching: int = 2
    depth: int = 4
    num_features: int = 16
    flip_prob: float = 0.15
    seed: int = 0

    def __post_init__(self) -> None:
        if self.branching < 2:
            raise ParameterError(f"branching must be >= 2, got {self.branching}")
        if self.depth < 1:
            raise ParameterError(f"depth must be >= 1, got {self.depth}")
        if self.num_features < 1:
            raise ParameterError(f"num_features must be >= 1, got {self.num_features}")
        if not 0.0 <= self.flip_prob <= 0.5:
            raise ParameterError(f"flip_prob must lie in [0, 0.5], got {self.flip_prob}")

    @property
    def num_leaves(self) -> int:
        return self.branching**self.depth

    def classes_at(self, level: int) -> int:
        """Number of distinct ancestors at tree *level*."""
        _check_level(level, self.depth)
        return self.branching**level


def gen_hierarchy(cfg: HierarchyConfig) -> Matrix:
    """
    Sample the item-feature matrix, shape ``(num_leaves, num_features)``.

    Raises:
        ParameterError: if *cfg* is out of bounds (checked at construction).
    """
    rng = Rng(cfg.seed)
    values = rng.signs(cfg.num_features).reshape(1, cfg.num_features)
    for _ in range(cfg.depth):
        children = np.repeat(values, cfg.branching, axis=0)
        flips = rng.uniform(children.shape) < cfg.flip_prob
        values = np.where(flips, -children, children)
    return values


def leaf_ancestor(leaf: int, level: int, branching: int, depth: int) -> int:
    """Index (among nodes of *level*) of the ancestor of *leaf*."""
    _check_level(level, depth)
    return leaf // branching ** (depth - level)


def leaf_distance(i: int, j: int, branching: int, depth: int) -> int:
    """Number of tree edges on the path between leaves *i* and *j*."""
    up = 0
    while i != j:
        i //= branching
        j //= branching
        up += 1
    if up > depth:
        raise ParameterError(f"leaves outside a depth-{depth} tree")
    return 2 * up


def expected_correlation(flip_prob: float, distance: int) -> float:
    """Closed-form leaf correlation ``(1 - 2 eps)^d``."""
    return (1.0 - 2.0 * flip_prob) ** distance


def leaf_correlations(items: Matrix) -> Matrix:
    """
    Empirical correlation between every pair of item rows.

    Features are +/-1 with zero mean, so the mean product across features
    is the correlation estimate.
    """
    return (items @ items.T) / items.shape[1]


def _check_level(level: int, depth: int) -> None:
    if not 0 <= level <= depth:
        raise ParameterError(f"tree level must lie in [0, {depth}], got {level}")
