"""
Loss algebra on raw head logits.

Both task losses and the distillation loss are batch means, so learning
rates do not depend on batch size.  There is no softmax temperature
anywhere: distillation matches logits directly with an L2 penalty.
"""

from __future__ import annotations

__all__ = [
    "LossKind",
    "LossTerm",
    "softmax",
    "softmax_cross_entropy",
    "l2_distillation",
    "squared_error",
    "composite_loss",
    "check_one_hot",
]

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from altm.errors import HeadLookupError, LabelError, NumericalError, ParameterError, ShapeError
from altm.linalg import Matrix

_SOFTMAX_SUM_TOL = 1e-12


class LossKind(str, Enum):
    CROSS_ENTROPY = "cross-entropy"
    L2_DISTILL = "l2-distill"
    SQUARED_ERROR = "squared-error"


@dataclass(frozen=True, slots=True, eq=False)
class LossTerm:
    """
    One weighted term of a composite objective.

    Attributes:
        head: head whose logits the term reads.
        kind: which loss to apply.
        target: one-hot labels (cross-entropy, squared-error) or teacher
            logits (l2-distill); same shape as the head's logits.
        weight: non-negative scale of this term.
    """

    head: str
    kind: LossKind
    target: Matrix
    weight: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", LossKind(self.kind))
        if not self.weight >= 0.0:
            raise ParameterError(f"loss weight for head {self.head!r} must be >= 0, got {self.weight}")


def check_one_hot(labels: Matrix) -> None:
    """
    Raises:
        LabelError: unless every column has exactly one 1 and zeros elsewhere.
    """
    ones = labels == 1.0
    valid = np.all(ones | (labels == 0.0), axis=0) & (ones.sum(axis=0) == 1)
    if not np.all(valid):
        bad = int(np.flatnonzero(~valid)[0])
        raise LabelError(f"label column {bad} is not one-hot")


def softmax(logits: Matrix) -> Matrix:
    """Column-wise softmax, stabilised by max subtraction."""
    shifted = logits - logits.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=0, keepdims=True)
    if not np.all(np.abs(probs.sum(axis=0) - 1.0) <= _SOFTMAX_SUM_TOL):
        raise NumericalError("softmax columns do not sum to one; logits are not finite")
    return probs


def softmax_cross_entropy(logits: Matrix, labels: Matrix) -> tuple[float, Matrix]:
    """
    Mean over the batch of ``-log softmax(logits)[true class]``.

    Returns:
        ``(loss, dLoss/dLogits)`` with gradient ``(softmax - labels) / batch``.

    Raises:
        ShapeError: if shapes differ.
        LabelError: if a label column is not one-hot.
    """
    _same_shape(logits, labels, "cross-entropy")
    check_one_hot(labels)
    batch = logits.shape[1]
    shifted = logits - logits.max(axis=0, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=0, keepdims=True))
    log_probs = shifted - log_norm
    loss = float(-(log_probs * labels).sum() / batch)
    grad = (np.exp(log_probs) - labels) / batch
    return loss, grad


def l2_distillation(student: Matrix, teacher: Matrix) -> tuple[float, Matrix]:
    """
    ``(1 / (2 batch)) * ||student - teacher||_F^2``.

    Only the student receives a gradient, ``(student - teacher) / batch``.
    """
    _same_shape(student, teacher, "l2-distill")
    batch = student.shape[1]
    diff = student - teacher
    return float(0.5 * np.sum(diff * diff) / batch), diff / batch


def squared_error(logits: Matrix, labels: Matrix) -> tuple[float, Matrix]:
    """L2 regression of logits onto one-hot labels (deep-linear experiments)."""
    _same_shape(logits, labels, "squared-error")
    check_one_hot(labels)
    return l2_distillation(logits, labels)


_LOSSES = {
    LossKind.CROSS_ENTROPY: softmax_cross_entropy,
    LossKind.L2_DISTILL: l2_distillation,
    LossKind.SQUARED_ERROR: squared_error,
}


def composite_loss(
    terms: Sequence[LossTerm], logits: Mapping[str, Matrix]
) -> tuple[float, dict[str, Matrix]]:
    """
    ``sum_i weight_i * loss_i`` and the per-head summed gradients.

    Heads with no term get no entry in the gradient mapping; pass the mapping
    straight to :func:`altm.network.backward`.

    Raises:
        HeadLookupError: if a term names a head missing from *logits*.
    """
    total = 0.0
    grads: dict[str, Matrix] = {}
    for term in terms:
        if term.head not in logits:
            raise HeadLookupError(f"loss term refers to head {term.head!r} which has no logits")
        value, grad = _LOSSES[term.kind](logits[term.head], term.target)
        total += term.weight * value
        scaled = term.weight * grad
        grads[term.head] = grads[term.head] + scaled if term.head in grads else scaled
    return total, grads


def _same_shape(a: Matrix, b: Matrix, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what}: logits {a.shape} and target {b.shape} differ")
