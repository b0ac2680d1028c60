"""
Sequential training.

Phases alternate environments: odd phases train the old tasks on env1,
even phases the new tasks on env2.  Every phase starts from the solution
of the previous one; heads of a group are attached when it first trains.
"""

from __future__ import annotations

__all__ = ["train_sequential"]

import logging

from altm.errors import UsageError
from altm.network import Network, TeacherSnapshot
from altm.regime import RegimeConfig, RegimeKind, RunRecord, register
from datagen.transition import TransitionSpec

from .training import RunTracker, attach_missing_heads, check_heads, make_stream, train_epoch

logger = logging.getLogger(__name__)


def train_sequential(net: Network, transition: TransitionSpec, cfg: RegimeConfig) -> RunRecord:
    """
    Train *net* in place phase by phase.

    Each phase logs an initial row at its starting epoch, so the first row
    of phase 2 shows the old tasks exactly as phase 1 left them.

    Raises:
        UsageError: if a resident head does not fit its task.
    """
    old = [(t, transition.env1) for t in cfg.old_tasks]
    new = [(t, transition.env2) for t in cfg.new_tasks]
    check_heads(net, old + new)
    tracker = RunTracker(net, cfg, old + new)
    streams = (make_stream(transition.env1, cfg, "env1"), make_stream(transition.env2, cfg, "env2"))

    start = 0
    for phase, n_epochs in enumerate(cfg.phase_epochs, start=1):
        group = old if phase % 2 == 1 else new
        stream = streams[(phase - 1) % 2]
        if not group:
            raise UsageError(f"phase {phase} has no tasks to train")
        attach_missing_heads(net, group, cfg)
        tracker.evaluate(phase, start)
        end = start + n_epochs
        logger.info(
            "%s: phase %d on %s, epochs %d-%d", cfg.label, phase, stream.env.name, start + 1, end
        )
        tasks = [t for t, _ in group]
        for epoch in range(start + 1, end + 1):
            train_epoch(net, stream, tasks, cfg, cfg.lr_for(phase))
            tracker.after_epoch(phase, epoch, start, end)
        start = end
    return tracker.record


@register
class Sequential:
    """One environment after the other, warm-started."""

    name: str = RegimeKind.SEQUENTIAL.value

    def __call__(
        self,
        net: Network,
        transition: TransitionSpec,
        cfg: RegimeConfig,
        *,
        teacher: TeacherSnapshot | None = None,
    ) -> RunRecord:
        return train_sequential(net, transition, cfg)
