import numpy as np
import pytest

from altm.errors import ConflictError, HeadLookupError, ModeError, NumericalError, ParameterError, UsageError
from altm.linalg import ActivationKind, Rng, identity
from altm.losses import LossKind, LossTerm, composite_loss
from altm.network import (
    Gradients,
    attach_head,
    backward,
    build_network,
    end_to_end_map,
    forward,
    sgd_step,
    snapshot_teacher,
)
from datagen.environment import one_hot

_KINDS = list(ActivationKind)
_H = 1e-6


def _random_case(seed: int):
    rng = np.random.default_rng(seed)
    depth = 1 + seed % 3
    activation = _KINDS[(seed // 3) % 3]
    n_heads = 1 + seed % 2
    loss = LossKind.CROSS_ENTROPY if (seed // 2) % 2 == 0 else LossKind.L2_DISTILL
    widths = [int(w) for w in rng.integers(2, 6, size=depth)]
    heads = {f"h{k}": int(rng.integers(2, 5)) for k in range(n_heads)}
    net = build_network(4, widths, activation, heads, 0.7, Rng(seed))
    for layer in [*net.trunk, *net.heads.values()]:
        layer.bias = 0.3 * rng.standard_normal(layer.bias.shape)
    batch = 5
    x = rng.standard_normal((4, batch))
    terms = []
    for head, k in heads.items():
        if loss is LossKind.CROSS_ENTROPY:
            target = one_hot(rng.integers(0, k, size=batch), k)
        else:
            target = rng.standard_normal((k, batch))
        terms.append(LossTerm(head, loss, target, float(rng.uniform(0.5, 1.5))))
    return net, x, terms


def _loss(net, x, terms):
    logits, _ = forward(net, x)
    return composite_loss(terms, logits)[0]


@pytest.mark.parametrize("seed", range(24))
def test_gradients_match_central_differences(seed):
    net, x, terms = _random_case(seed)
    logits, cache = forward(net, x)
    _, upstream = composite_loss(terms, logits)
    grads = backward(net, cache, upstream)

    for (name, param), (_, analytic) in zip(net.parameters(), grads.blocks()):
        numeric = np.zeros_like(param)
        for idx in np.ndindex(param.shape):
            saved = param[idx]
            param[idx] = saved + _H
            up = _loss(net, x, terms)
            param[idx] = saved - _H
            down = _loss(net, x, terms)
            param[idx] = saved
            numeric[idx] = (up - down) / (2 * _H)
        scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-4)
        assert np.max(np.abs(analytic - numeric)) / scale <= 1e-5, name


def test_untouched_head_gets_zero_gradient():
    net = build_network(3, [4], "tanh", {"a": 2, "b": 2}, 0.5, Rng(1))
    x = Rng(2).normal(3, 6)
    logits, cache = forward(net, x)
    _, upstream = composite_loss([LossTerm("a", "l2-distill", np.zeros((2, 6)))], logits)
    grads = backward(net, cache, upstream)
    assert not np.any(grads.heads["b"].weight)
    assert np.any(grads.heads["a"].weight)


def test_cache_is_single_use_and_tied_to_version():
    net = build_network(3, [4], "relu", {"a": 2}, 0.5, Rng(1))
    x = Rng(2).normal(3, 6)
    _, cache = forward(net, x)
    up = {"a": np.ones((2, 6))}
    grads = backward(net, cache, up)
    with pytest.raises(UsageError):
        backward(net, cache, up)

    _, stale = forward(net, x)
    sgd_step(net, grads, 0.1)
    with pytest.raises(UsageError):
        backward(net, stale, up)


def test_sgd_step_validation():
    net = build_network(3, [4], "tanh", {"a": 2}, 0.5, Rng(1))
    grads = Gradients.zeros_like(net)
    with pytest.raises(ParameterError):
        sgd_step(net, grads, 0.0)

    grads.trunk[0].weight[0, 0] = np.nan
    before = net.digest()
    with pytest.raises(NumericalError):
        sgd_step(net, grads, 0.1)
    assert net.digest() == before


def test_sgd_step_moves_against_gradient():
    net = build_network(3, [4], "tanh", {"a": 2}, 0.5, Rng(1))
    x = Rng(2).normal(3, 8)
    target = Rng(3).normal(2, 8)
    terms = [LossTerm("a", "l2-distill", target)]
    before = _loss(net, x, terms)
    logits, cache = forward(net, x)
    sgd_step(net, backward(net, cache, composite_loss(terms, logits)[1]), 0.01)
    assert _loss(net, x, terms) < before


def test_heads():
    net = build_network(3, [4], "tanh", {"a": 2}, 0.5, Rng(1))
    with pytest.raises(ConflictError):
        attach_head(net, "a", 2, 0.1, Rng(0))
    with pytest.raises(HeadLookupError):
        forward(net, np.ones((3, 1)), ["missing"])
    version = net.version
    attach_head(net, "b", 5, 0.1, Rng(0))
    assert net.head_ids == ("a", "b")
    assert net.version == version + 1


def test_same_seed_same_network():
    a = build_network(5, [4, 3], "relu", {"x": 2}, 0.1, Rng(9))
    b = build_network(5, [4, 3], "relu", {"x": 2}, 0.1, Rng(9))
    assert a.digest() == b.digest()


def test_teacher_snapshot_is_independent_and_frozen():
    net = build_network(3, [4], "tanh", {"a": 2}, 0.5, Rng(1))
    teacher = snapshot_teacher(net)
    digest = teacher.digest()
    x = Rng(2).normal(3, 4)

    logits, cache = forward(net, x)
    sgd_step(net, backward(net, cache, {"a": np.ones_like(logits["a"])}), 0.5)
    assert teacher.digest() == digest
    assert net.digest() != digest

    with pytest.raises(UsageError):
        sgd_step(teacher.network, Gradients.zeros_like(teacher.network), 0.1)
    with pytest.raises(UsageError):
        attach_head(teacher.network, "b", 2, 0.1, Rng(0))
    with pytest.raises(ValueError):
        teacher.network.trunk[0].weight[0, 0] = 1.0
    assert snapshot_teacher(teacher) == teacher


def test_end_to_end_map_of_deep_linear_network():
    net = build_network(5, [4, 3], "linear", {"a": 2}, 0.5, Rng(4), use_bias=False)
    x = Rng(5).normal(5, 7)
    logits, _ = forward(net, x)
    assert np.allclose(end_to_end_map(net, "a") @ x, logits["a"])

    with pytest.raises(ModeError):
        end_to_end_map(build_network(5, [4], "tanh", {"a": 2}, 0.5, Rng(4)), "a")


def test_biases_stay_zero_without_bias():
    net = build_network(5, [4], "linear", {"a": 2}, 0.5, Rng(4), use_bias=False)
    x = Rng(5).normal(5, 7)
    logits, cache = forward(net, x)
    sgd_step(net, backward(net, cache, {"a": np.ones_like(logits["a"])}), 0.1)
    assert all(not np.any(layer.bias) for layer in [*net.trunk, *net.heads.values()])


def test_trunk_gradient_is_additive_over_heads():
    net = build_network(4, [5, 3], "tanh", {"g": 3, "s": 2}, 0.5, Rng(6))
    x = Rng(7).normal(4, 6)
    up_g, up_s = Rng(8).normal(3, 6), Rng(9).normal(2, 6)

    def trunk_grads(upstream):
        _, cache = forward(net, x)
        return backward(net, cache, upstream).trunk

    both = trunk_grads({"g": up_g, "s": up_s})
    only_g = trunk_grads({"g": up_g})
    only_s = trunk_grads({"s": up_s})
    for joint, a, b in zip(both, only_g, only_s):
        assert np.max(np.abs(joint.weight - (a.weight + b.weight))) <= 1e-12
        assert np.max(np.abs(joint.bias - (a.bias + b.bias))) <= 1e-12


def test_end_to_end_map_is_the_response_to_the_identity():
    net = build_network(5, [4, 6], "linear", {"a": 3}, 0.5, Rng(4), use_bias=False)
    logits, _ = forward(net, identity(5))
    assert np.allclose(end_to_end_map(net, "a"), logits["a"], rtol=0.0, atol=1e-12)

    eye = build_network(5, [5, 5], "linear", {"a": 5}, 0.5, Rng(4), use_bias=False)
    for layer in [*eye.trunk, *eye.heads.values()]:
        layer.weight = identity(5)
    assert np.array_equal(end_to_end_map(eye, "a"), identity(5))


def test_identity_and_zero_weights():
    x = Rng(1).normal(4, 3)
    eye = build_network(4, [4], "linear", {"a": 4}, 0.5, Rng(2), use_bias=False)
    zero = build_network(4, [4], "tanh", {"a": 2}, 0.5, Rng(2))
    for layer in [*eye.trunk, *eye.heads.values()]:
        layer.weight = identity(4)
    for layer in [*zero.trunk, *zero.heads.values()]:
        layer.weight = np.zeros_like(layer.weight)
        layer.bias = np.zeros_like(layer.bias)
    assert np.array_equal(forward(eye, x)[0]["a"], x)
    assert not np.any(forward(zero, x)[0]["a"])


def test_attaching_a_head_leaves_the_others_alone():
    net = build_network(3, [4], "tanh", {"a": 2}, 0.5, Rng(1))
    x = Rng(2).normal(3, 5)
    before = forward(net, x)[0]["a"]
    attach_head(net, "b", 3, 1e-12, Rng(3))
    after = forward(net, x)[0]
    assert np.array_equal(after["a"], before)
    assert after["b"].shape == (3, 5)
    assert np.max(np.abs(after["b"])) < 1e-10


def test_snapshot_computes_what_its_source_computes():
    net = build_network(3, [4, 2], "relu", {"a": 2, "b": 3}, 0.5, Rng(1))
    x = Rng(2).normal(3, 5)
    source = forward(net, x)[0]
    copied = forward(snapshot_teacher(net).network, x)[0]
    assert all(np.array_equal(source[h], copied[h]) for h in ("a", "b"))


def test_scalar_sgd_step():
    net = build_network(1, [1], "linear", {"a": 1}, 0.5, Rng(0), use_bias=False)
    net.trunk[0].weight = np.array([[1.0]])
    grads = Gradients.zeros_like(net)
    grads.trunk[0].weight[0, 0] = 2.0
    sgd_step(net, grads, 0.1)
    assert net.trunk[0].weight[0, 0] == pytest.approx(0.8)
