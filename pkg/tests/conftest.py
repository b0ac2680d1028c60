"""Shared fixtures: a deep-linear same-task transition and a small tanh transition."""

from __future__ import annotations

import pytest

import algorithms.regimes  # noqa: F401  registers the bundled regimes
from altm.linalg import Rng
from altm.network import build_network
from altm.regime import RegimeConfig, TaskSpec
from datagen.hierarchy import HierarchyConfig
from datagen.transition import EnvironmentConfig, make_transition


@pytest.fixture
def dln_transition():
    """16 whitened one-hot items, 8 semantic classes, task B identical to task A."""
    hierarchy = HierarchyConfig(branching=2, depth=4, seed=0)
    dev = EnvironmentConfig(semantic_level=3, encoding="onehot")
    return make_transition(dev, dev, hierarchy, seed=0)


@pytest.fixture
def dln_net():
    def make(seed: int = 0):
        return build_network(16, [8], "linear", {"A": 8}, 0.1, Rng(seed).child("network"), use_bias=False)

    return make


@pytest.fixture
def dln_config():
    def make(kind: str, **overrides) -> RegimeConfig:
        values = dict(
            kind=kind,
            old_tasks=(TaskSpec("A"),),
            new_tasks=(TaskSpec("B"),),
            phase_epochs=(500, 500),
            lr=(0.05,),
            task_loss="squared-error",
            seed=0,
        )
        values.update(overrides)
        return RegimeConfig(**values)

    return make


@pytest.fixture
def small_transition():
    """Dev: 2 classes x 4 items x 3 transforms; novel: 8 single-view classes."""
    hierarchy = HierarchyConfig(branching=2, depth=3, num_features=8, seed=1)
    dev = EnvironmentConfig(semantic_level=1, num_transforms=3)
    novel = EnvironmentConfig(semantic_level=3)
    return make_transition(dev, novel, hierarchy, seed=1)


@pytest.fixture
def small_net():
    def make(seed: int = 3, head: str = "view", out_dim: int = 3):
        return build_network(8, [6], "tanh", {head: out_dim}, 0.5, Rng(seed).child("network"))

    return make
