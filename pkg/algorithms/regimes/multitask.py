"""
Multi-task training: every step sees one batch from each environment.

The summed, weighted objective is minimised with a single update per
step.  All heads are attached before the first step.
"""

from __future__ import annotations

__all__ = ["train_multitask"]

import logging

from altm.network import Network, TeacherSnapshot
from altm.regime import RegimeConfig, RegimeKind, RunRecord, register
from datagen.transition import TransitionSpec

from .training import (
    RunTracker,
    attach_missing_heads,
    check_heads,
    make_stream,
    paired_steps,
    task_terms,
)

logger = logging.getLogger(__name__)


def train_multitask(net: Network, transition: TransitionSpec, cfg: RegimeConfig) -> RunRecord:
    env1, env2 = transition.env1, transition.env2
    old = [(t, env1) for t in cfg.old_tasks]
    new = [(t, env2) for t in cfg.new_tasks]
    check_heads(net, old + new)
    attach_missing_heads(net, old + new, cfg)
    tracker = RunTracker(net, cfg, old + new)
    old_stream = make_stream(env1, cfg, "env1")
    new_stream = make_stream(env2, cfg, "env2")

    def build_old(idx_old, idx_new):
        return env1.inputs[:, idx_old], task_terms(cfg.old_tasks, env1, idx_old, cfg)

    def build_new(idx_old, idx_new):
        return env2.inputs[:, idx_new], task_terms(cfg.new_tasks, env2, idx_new, cfg)

    total = cfg.total_epochs
    tracker.evaluate(1, 0)
    logger.info("%s: %d epochs on %s + %s", cfg.label, total, env1.name, env2.name)
    for epoch in range(1, total + 1):
        paired_steps(net, old_stream, new_stream, build_old, build_new, cfg.lr_for(1))
        tracker.after_epoch(1, epoch, 0, total)
    return tracker.record


@register
class Multitask:
    """Both environments at every step."""

    name: str = RegimeKind.MULTITASK.value

    def __call__(
        self,
        net: Network,
        transition: TransitionSpec,
        cfg: RegimeConfig,
        *,
        teacher: TeacherSnapshot | None = None,
    ) -> RunRecord:
        return train_multitask(net, transition, cfg)
