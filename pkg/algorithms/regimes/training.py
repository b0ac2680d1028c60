"""
Training primitives shared by every regime.

Random streams, all children of ``Rng(cfg.seed)``:

* ``network/head/<id>``  heads attached during a run
* ``batches/env1``, ``batches/env2``  minibatch order
* ``replay``  subsample of the retained old environment
"""

from __future__ import annotations

__all__ = [
    "evaluate",
    "RunTracker",
    "attach_missing_heads",
    "check_heads",
    "task_terms",
    "train_epoch",
    "paired_steps",
    "PairedTerms",
    "make_stream",
]

import logging
from typing import Callable, Iterable, Sequence

import numpy as np

from altm.errors import ShapeError, UsageError
from altm.linalg import Matrix, Rng
from altm.losses import LossKind, LossTerm, composite_loss
from altm.network import Network, attach_head, backward, forward, sgd_step
from altm.regime import EvalRow, RegimeConfig, RunRecord, TaskSpec
from datagen.batching import BatchStream
from datagen.environment import Environment
from utils.timers import Stopwatch

logger = logging.getLogger(__name__)

PairedTerms = Callable[[np.ndarray | None, np.ndarray], tuple[Matrix, list[LossTerm]]]


def evaluate(
    net: Network, env: Environment, task: TaskSpec, loss: LossKind | str = LossKind.CROSS_ENTROPY
) -> tuple[float, float]:
    """
    Loss and accuracy of head *task.head* on the whole of *env*.

    Accuracy counts columns whose argmax logit equals the label index; on
    ties the lowest index wins.

    Raises:
        ShapeError: if the head's width differs from the label space.
    """
    labels = env.labels(task.labels)
    logits, _ = forward(net, env.inputs, [task.head])
    out = logits[task.head]
    if out.shape != labels.shape:
        raise ShapeError(
            f"head {task.head!r} emits {out.shape[0]} logits but {env.name!r} "
            f"has {labels.shape[0]} {task.labels.value} classes"
        )
    value, _ = composite_loss([LossTerm(task.head, LossKind(loss), labels)], logits)
    hits = np.argmax(out, axis=0) == np.argmax(labels, axis=0)
    return value, float(hits.mean())


class RunTracker:
    """Collects evaluation rows of one run at the configured stride."""

    def __init__(self, net: Network, cfg: RegimeConfig, tasks: Sequence[tuple[TaskSpec, Environment]]) -> None:
        self.net = net
        self.cfg = cfg
        self.tasks = list(tasks)
        self.watch = Stopwatch()
        self.record = RunRecord(
            regime=cfg.label,
            rows=[],
            network=net,
            tasks={task.head: task for task, _ in self.tasks},
        )

    def evaluate(self, phase: int, epoch: int) -> EvalRow:
        losses: dict[str, float] = {}
        accuracies: dict[str, float] = {}
        for task, env in self.tasks:
            if task.head not in self.net.heads:
                continue
            losses[task.head], accuracies[task.head] = evaluate(self.net, env, task, self.cfg.task_loss)
        row = EvalRow(phase, epoch, losses, accuracies, self.watch.elapsed())
        self.record.append(row)
        logger.debug("%s phase %d epoch %d: %s", self.cfg.label, phase, epoch, losses)
        return row

    def after_epoch(self, phase: int, epoch: int, phase_start: int, phase_end: int) -> None:
        if (epoch - phase_start) % self.cfg.eval_every == 0 or epoch == phase_end:
            self.evaluate(phase, epoch)


def attach_missing_heads(net: Network, tasks: Iterable[tuple[TaskSpec, Environment]], cfg: RegimeConfig) -> None:
    """Gaussian heads for tasks *net* does not have yet, sized to their label space."""
    head_rng = Rng(cfg.seed).child("network")
    for task, env in tasks:
        if task.head not in net.heads:
            attach_head(net, task.head, env.num_classes(task.labels), cfg.sigma, head_rng.child(f"head/{task.head}"))


def check_heads(net: Network, tasks: Iterable[tuple[TaskSpec, Environment]]) -> None:
    """
    Raises:
        UsageError: if a resident head does not fit its task's label space.
    """
    for task, env in tasks:
        if task.head in net.heads and net.heads[task.head].out_dim != env.num_classes(task.labels):
            raise UsageError(
                f"head {task.head!r} has {net.heads[task.head].out_dim} outputs, "
                f"task needs {env.num_classes(task.labels)}"
            )


def task_terms(
    tasks: Sequence[TaskSpec], env: Environment, idx: np.ndarray, cfg: RegimeConfig
) -> list[LossTerm]:
    """Label-supervised loss terms of *tasks* on the batch columns *idx*."""
    return [
        LossTerm(task.head, cfg.task_loss, env.labels(task.labels)[:, idx], cfg.weight_for(task))
        for task in tasks
    ]


def _step(net: Network, x: np.ndarray, terms: list[LossTerm], lr: float) -> float:
    logits, cache = forward(net, x, [t.head for t in terms])
    total, upstream = composite_loss(terms, logits)
    sgd_step(net, backward(net, cache, upstream), lr)
    return total


def train_epoch(
    net: Network, stream: BatchStream, tasks: Sequence[TaskSpec], cfg: RegimeConfig, lr: float
) -> float:
    """One pass over *stream*'s environment training *tasks*; returns the mean step loss."""
    env = stream.env
    losses = [
        _step(net, env.inputs[:, idx], task_terms(tasks, env, idx, cfg), lr)
        for idx in stream.epoch()
    ]
    return float(np.mean(losses))


def paired_steps(
    net: Network,
    old_stream: BatchStream | None,
    new_stream: BatchStream,
    build_old: PairedTerms,
    build_new: PairedTerms,
    lr: float,
) -> float:
    """
    One epoch of paired steps, as many as the longer stream's batch count.

    Each step draws the next batch from each stream, asks the builders for
    ``(inputs, terms)`` given ``(idx_old, idx_new)`` and takes a single SGD
    step on the summed gradients.  Without an old stream ``idx_old`` is None.
    """
    steps = new_stream.batches_per_epoch
    if old_stream is not None:
        steps = max(steps, old_stream.batches_per_epoch)
    losses = []
    for _ in range(steps):
        idx_old = None if old_stream is None else old_stream.next_batch()
        idx_new = new_stream.next_batch()
        parts = [build_old(idx_old, idx_new), build_new(idx_old, idx_new)]
        losses.append(_summed_step(net, parts, lr))
    return float(np.mean(losses))


def _summed_step(net: Network, parts: list[tuple[Matrix, list[LossTerm]]], lr: float) -> float:
    total = 0.0
    grads = None
    for x, terms in parts:
        if not terms:
            continue
        logits, cache = forward(net, x, [t.head for t in terms])
        value, upstream = composite_loss(terms, logits)
        g = backward(net, cache, upstream)
        grads = g if grads is None else grads + g
        total += value
    if grads is not None:
        sgd_step(net, grads, lr)
    return total


def make_stream(env: Environment, cfg: RegimeConfig, role: str) -> BatchStream:
    """Minibatch stream of *env* seeded from ``batches/<role>``."""
    return BatchStream(env, cfg.batch_size, Rng(cfg.seed).child(f"batches/{role}"))
