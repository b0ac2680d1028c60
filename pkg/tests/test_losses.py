import math

import numpy as np
import pytest

from altm.errors import HeadLookupError, LabelError, NumericalError, ParameterError, ShapeError
from altm.linalg import Rng
from altm.losses import (
    LossTerm,
    composite_loss,
    l2_distillation,
    softmax,
    softmax_cross_entropy,
    squared_error,
)
from altm.network import build_network, forward, snapshot_teacher
from datagen.environment import one_hot


def test_uniform_logits_cost_log_k():
    labels = one_hot([0, 1, 2, 3], 4)
    loss, grad = softmax_cross_entropy(np.zeros((4, 4)), labels)
    assert loss == pytest.approx(math.log(4))
    assert np.allclose(grad.sum(axis=0), 0.0)
    assert np.allclose(grad, (0.25 - labels) / 4)


def test_confident_correct_logits_cost_nothing():
    labels = one_hot([1, 0], 2)
    loss, _ = softmax_cross_entropy(1000.0 * labels, labels)
    assert loss == pytest.approx(0.0, abs=1e-12)


def test_softmax_is_shift_invariant_and_stable():
    z = Rng(0).normal(5, 3)
    assert np.allclose(softmax(z), softmax(z + 800.0))
    assert np.allclose(softmax(z).sum(axis=0), 1.0)


def test_cross_entropy_rejects_bad_labels():
    with pytest.raises(LabelError):
        softmax_cross_entropy(np.zeros((2, 2)), np.array([[1.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(ShapeError):
        softmax_cross_entropy(np.zeros((3, 2)), one_hot([0, 1], 2))


def test_l2_distillation():
    student = np.array([[1.0, 2.0], [0.0, 0.0]])
    teacher = np.array([[0.0, 0.0], [0.0, 2.0]])
    loss, grad = l2_distillation(student, teacher)
    assert loss == pytest.approx(0.5 * (1 + 4 + 4) / 2)
    assert np.array_equal(grad, (student - teacher) / 2)

    same, zero = l2_distillation(teacher, teacher)
    assert same == 0.0 and not np.any(zero)


def test_squared_error_needs_one_hot_targets():
    labels = one_hot([0, 2], 3)
    assert squared_error(labels, labels)[0] == 0.0
    with pytest.raises(LabelError):
        squared_error(np.zeros((2, 2)), np.full((2, 2), 0.5))


def test_composite_loss_weights_and_sums_per_head():
    logits = {"a": np.array([[1.0], [0.0]]), "b": np.zeros((3, 1))}
    target = np.zeros((2, 1))
    terms = [
        LossTerm("a", "l2-distill", target, 0.5),
        LossTerm("a", "l2-distill", target, 2.0),
        LossTerm("b", "cross-entropy", one_hot([2], 3), 0.0),
    ]
    total, grads = composite_loss(terms, logits)
    assert total == pytest.approx(2.5 * 0.5)
    assert np.allclose(grads["a"], 2.5 * logits["a"])
    assert not np.any(grads["b"])


def test_composite_loss_errors():
    with pytest.raises(HeadLookupError):
        composite_loss([LossTerm("x", "l2-distill", np.zeros((1, 1)))], {})
    with pytest.raises(ParameterError):
        LossTerm("a", "l2-distill", np.zeros((1, 1)), -0.1)


def test_self_distillation_is_a_fixed_point():
    net = build_network(4, [5], "tanh", {"old": 3}, 0.5, Rng(0))
    teacher = snapshot_teacher(net)
    x = Rng(1).normal(4, 6)
    student, _ = forward(net, x)
    total, grads = composite_loss(
        [LossTerm("old", "l2-distill", teacher.logits(x, ["old"])["old"], 0.1)], student
    )
    assert total == 0.0
    assert not np.any(grads["old"])


def test_cross_entropy_of_a_confident_pair():
    loss, _ = softmax_cross_entropy(np.array([[10.0], [-10.0]]), one_hot([0], 2))
    assert loss == pytest.approx(math.log1p(math.exp(-20.0)), rel=1e-6)


def test_cross_entropy_ignores_a_common_offset():
    z = Rng(3).normal(4, 5)
    labels = one_hot([0, 3, 1, 1, 2], 4)
    base, base_grad = softmax_cross_entropy(z, labels)
    shifted, shifted_grad = softmax_cross_entropy(z + 1000.0, labels)
    assert shifted == pytest.approx(base, rel=1e-9)
    assert np.allclose(shifted_grad, base_grad, atol=1e-12)


def test_softmax_of_non_finite_logits_raises():
    with pytest.raises(NumericalError):
        softmax(np.array([[np.nan], [0.0]]))
    with pytest.raises(NumericalError):
        softmax(np.array([[np.inf], [0.0]]))


def test_l2_distillation_gradient_matches_central_differences():
    student, teacher = Rng(4).normal(3, 4), Rng(5).normal(3, 4)
    _, grad = l2_distillation(student, teacher)
    h = 1e-6
    for idx in np.ndindex(student.shape):
        up, down = student.copy(), student.copy()
        up[idx] += h
        down[idx] -= h
        numeric = (l2_distillation(up, teacher)[0] - l2_distillation(down, teacher)[0]) / (2 * h)
        assert abs(numeric - grad[idx]) <= 1e-7


def test_l2_distillation_value_is_symmetric():
    a, b = Rng(6).normal(2, 7), Rng(7).normal(2, 7)
    assert l2_distillation(a, b)[0] == pytest.approx(l2_distillation(b, a)[0], rel=1e-15)
