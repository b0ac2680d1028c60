"""
Active long-term memory: learn a new environment while a frozen teacher
keeps the old heads where they were.

During development the teacher N is trained on env1 alone.  During
maturity the student H starts as a copy of N, gets Gaussian heads for the
new tasks and minimises, at every step,

    new-task loss on an env2 batch
    + weight * || f_H(x_r) - f_N(x_r) ||^2 / 2   on every old head

where ``x_r`` is a batch of the retained env1 (replay) or the current env2
batch itself (naive).  With label supervision the old terms use the true
env1 labels and the task loss instead, which makes replay identical to
multi-task training.
"""

from __future__ import annotations

__all__ = ["develop_teacher", "train_altm"]

import dataclasses
import logging

import numpy as np

from altm.errors import UsageError
from altm.linalg import Rng
from altm.losses import LossKind, LossTerm
from altm.network import Layer, Network, TeacherSnapshot, snapshot_teacher
from altm.regime import RegimeConfig, RegimeKind, RunRecord, Supervision, register
from datagen.transition import TransitionSpec

from .training import (
    RunTracker,
    attach_missing_heads,
    check_heads,
    make_stream,
    paired_steps,
    task_terms,
)
from .sequential import train_sequential

logger = logging.getLogger(__name__)


def develop_teacher(net: Network, transition: TransitionSpec, cfg: RegimeConfig) -> TeacherSnapshot:
    """
    Train the old tasks on env1 for ``phase_epochs[0]`` epochs and freeze.

    Identical to phase 1 of a sequential run with the same seed; *net* is
    trained in place and the returned snapshot is an independent copy.
    """
    dev_cfg = dataclasses.replace(
        cfg,
        kind=RegimeKind.SEQUENTIAL,
        new_tasks=(),
        phase_epochs=cfg.phase_epochs[:1],
        lr=(cfg.lr_for(1),),
        old_weight=None,
        term_weights={},
        supervision=Supervision.TEACHER,
        name=f"{cfg.label}/develop",
    )
    record = train_sequential(net, transition, dev_cfg)
    teacher = snapshot_teacher(net)
    logger.info(
        "teacher %s developed: %s",
        teacher.digest()[:12],
        {h: round(a, 4) for h, a in record.final.accuracies.items()},
    )
    return teacher


def _starts_at_teacher(net: Network, teacher: TeacherSnapshot, heads: list[str]) -> bool:
    source = teacher.network
    if len(net.trunk) != len(source.trunk):
        return False
    pairs: list[tuple[Layer, Layer]] = list(zip(net.trunk, source.trunk))
    pairs += [(net.heads[h], source.heads[h]) for h in heads]
    return all(
        a.weight.shape == b.weight.shape
        and np.array_equal(a.weight, b.weight)
        and np.array_equal(a.bias, b.bias)
        for a, b in pairs
    )


def train_altm(
    net: Network,
    teacher: TeacherSnapshot,
    transition: TransitionSpec,
    cfg: RegimeConfig,
    *,
    replay: bool,
) -> RunRecord:
    """
    Maturity phase: ``phase_epochs[-1]`` epochs of paired steps.

    The teacher is only ever read.  Rows report every head's task loss and
    accuracy on its own environment.

    Raises:
        UsageError: if the teacher lacks an old head, *net* does not start
            at the teacher, or label supervision is requested without replay.
    """
    env1, env2 = transition.env1, transition.env2
    missing = [t.head for t in cfg.old_tasks if t.head not in teacher.head_ids]
    if missing:
        raise UsageError(f"teacher has no head for old tasks {missing}")
    if any(t.head not in net.heads for t in cfg.old_tasks):
        raise UsageError("student must be initialised from the teacher, old heads are missing")
    if not _starts_at_teacher(net, teacher, [t.head for t in cfg.old_tasks]):
        raise UsageError("student trunk or old heads differ from the teacher")
    if cfg.supervision is Supervision.LABELS and not replay:
        raise UsageError("label supervision needs the replayed old environment")
    old = [(t, env1) for t in cfg.old_tasks]
    new = [(t, env2) for t in cfg.new_tasks]
    check_heads(net, old + new)
    check_heads(teacher.network, old)
    attach_missing_heads(net, new, cfg)

    retained = env1
    if replay and cfg.replay_cap is not None and cfg.replay_cap < env1.size:
        retained = env1.columns(Rng(cfg.seed).child("replay").choice(env1.size, cfg.replay_cap))
    old_stream = make_stream(retained, cfg, "env1") if replay else None
    new_stream = make_stream(env2, cfg, "env2")
    old_heads = [t.head for t in cfg.old_tasks]

    def build_old(idx_old, idx_new):
        if cfg.supervision is Supervision.LABELS:
            return retained.inputs[:, idx_old], task_terms(cfg.old_tasks, retained, idx_old, cfg)
        x = retained.inputs[:, idx_old] if replay else env2.inputs[:, idx_new]
        targets = teacher.logits(x, old_heads)
        return x, [
            LossTerm(t.head, LossKind.L2_DISTILL, targets[t.head], cfg.weight_for(t))
            for t in cfg.old_tasks
        ]

    def build_new(idx_old, idx_new):
        return env2.inputs[:, idx_new], task_terms(cfg.new_tasks, env2, idx_new, cfg)

    digest = teacher.digest()
    tracker = RunTracker(net, cfg, old + new)
    tracker.record.teacher = teacher
    total = cfg.phase_epochs[-1]
    lr = cfg.lr_for(len(cfg.phase_epochs))
    tracker.evaluate(1, 0)
    logger.info(
        "%s: maturity for %d epochs, %s of %d old examples",
        cfg.label,
        total,
        "replaying" if replay else "no replay",
        retained.size,
    )
    for epoch in range(1, total + 1):
        paired_steps(net, old_stream, new_stream, build_old, build_new, lr)
        tracker.after_epoch(1, epoch, 0, total)
    if teacher.digest() != digest:
        raise UsageError(f"teacher {digest[:12]} was modified during maturity")
    return tracker.record


class _Altm:
    replay: bool
    name: str

    def __call__(
        self,
        net: Network,
        transition: TransitionSpec,
        cfg: RegimeConfig,
        *,
        teacher: TeacherSnapshot | None = None,
    ) -> RunRecord:
        """
        Develop a teacher on *net* unless one is given, then mature *net* in place.

        A given teacher must be the starting point of *net*, e.g.
        ``teacher.network.copy()``.
        """
        if teacher is None:
            teacher = develop_teacher(net, transition, cfg)
        return train_altm(net, teacher, transition, cfg, replay=self.replay)


@register
class AltmNaive(_Altm):
    """Distil on the new inputs only."""

    name: str = RegimeKind.ALTM_NAIVE.value
    replay: bool = False


@register
class AltmReplay(_Altm):
    """Distil on retained old inputs."""

    name: str = RegimeKind.ALTM_REPLAY.value
    replay: bool = True
