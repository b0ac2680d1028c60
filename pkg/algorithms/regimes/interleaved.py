"""
Interleaved training.

Both task groups keep their heads resident for the whole run; only the
active group's loss is trained.  The active group flips every
``interleave_period`` epochs, starting with the old tasks, over the total
epoch budget.  Each block is reported as its own phase.
"""

from __future__ import annotations

__all__ = ["train_interleaved"]

import logging

from altm.network import Network, TeacherSnapshot
from altm.regime import RegimeConfig, RegimeKind, RunRecord, register
from datagen.transition import TransitionSpec

from .training import RunTracker, attach_missing_heads, check_heads, make_stream, train_epoch

logger = logging.getLogger(__name__)


def train_interleaved(net: Network, transition: TransitionSpec, cfg: RegimeConfig) -> RunRecord:
    old = [(t, transition.env1) for t in cfg.old_tasks]
    new = [(t, transition.env2) for t in cfg.new_tasks]
    check_heads(net, old + new)
    attach_missing_heads(net, old + new, cfg)
    tracker = RunTracker(net, cfg, old + new)
    streams = (make_stream(transition.env1, cfg, "env1"), make_stream(transition.env2, cfg, "env2"))
    # old blocks use the first phase's rate, new blocks the second's
    rates = (cfg.lr_for(1), cfg.lr_for(min(2, len(cfg.phase_epochs))))

    total = cfg.total_epochs
    start = 0
    block = 0
    while start < total:
        block += 1
        which = (block - 1) % 2
        tasks = [t for t, _ in (old, new)[which]]
        end = min(start + cfg.interleave_period, total)
        tracker.evaluate(block, start)
        logger.debug("%s: block %d trains %s", cfg.label, block, [t.head for t in tasks])
        for epoch in range(start + 1, end + 1):
            train_epoch(net, streams[which], tasks, cfg, rates[which])
            tracker.after_epoch(block, epoch, start, end)
        start = end
    logger.info("%s: %d blocks over %d epochs", cfg.label, block, total)
    return tracker.record


@register
class Interleaved:
    """Alternate task groups every few epochs."""

    name: str = RegimeKind.INTERLEAVED.value

    def __call__(
        self,
        net: Network,
        transition: TransitionSpec,
        cfg: RegimeConfig,
        *,
        teacher: TeacherSnapshot | None = None,
    ) -> RunRecord:
        return train_interleaved(net, transition, cfg)
