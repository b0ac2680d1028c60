"""
Multi-head feed-forward networks with a shared trunk.

The trunk is a stack of affine layers, each followed by the network's
activation; its final output is the shared representation.  Every head is a
single affine map from that representation to raw logits, so the same
logits feed both cross-entropy and L2 distillation.

Gradients are computed by hand (no autodiff).  A forward call returns a
:class:`ForwardCache` that is good for exactly one :func:`backward` call and
only while the network has not been updated since.
"""

from __future__ import annotations

__all__ = [
    "Layer",
    "Network",
    "ForwardCache",
    "Gradients",
    "TeacherSnapshot",
    "build_network",
    "forward",
    "backward",
    "sgd_step",
    "snapshot_teacher",
    "attach_head",
    "end_to_end_map",
]

import hashlib
import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from altm.errors import (
    ConflictError,
    HeadLookupError,
    ModeError,
    NumericalError,
    ParameterError,
    ShapeError,
    UsageError,
)
from altm.linalg import ActivationKind, Matrix, Rng, activate, gaussian_init, identity, zeros

logger = logging.getLogger(__name__)

_NETWORK_IDS = itertools.count()


@dataclass(slots=True, eq=False)
class Layer:
    """
    One affine block ``W x + b``; also reused as a gradient block.

    Attributes:
        weight: ``(out_dim, in_dim)`` matrix.
        bias: ``(out_dim, 1)`` column.
    """

    weight: Matrix
    bias: Matrix

    def __post_init__(self) -> None:
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0], 1):
            raise ShapeError(
                f"bias shape {self.bias.shape} does not fit weight {self.weight.shape}"
            )

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    def copy(self) -> "Layer":
        return Layer(self.weight.copy(), self.bias.copy())

    @classmethod
    def zeros_like(cls, other: "Layer") -> "Layer":
        return cls(np.zeros_like(other.weight), np.zeros_like(other.bias))


@dataclass(slots=True, eq=False)
class Network:
    """
    Shared trunk plus named task heads.

    Attributes:
        trunk: affine layers; layer k output dim == layer k+1 input dim.
        heads: head id -> affine layer on the final trunk output.
        activation: nonlinearity applied after every trunk layer.
        use_bias: when False all biases stay exactly zero (DLN mode).
        frozen: set on teacher copies; frozen networks reject updates.
    """

    trunk: list[Layer]
    heads: dict[str, Layer]
    activation: ActivationKind = ActivationKind.TANH
    use_bias: bool = True
    frozen: bool = False
    version: int = field(default=0, compare=False)
    uid: int = field(default_factory=lambda: next(_NETWORK_IDS), compare=False)

    def __post_init__(self) -> None:
        self.activation = ActivationKind(self.activation)
        if not self.trunk:
            raise ShapeError("a network needs at least one trunk layer")
        for k in range(len(self.trunk) - 1):
            if self.trunk[k].out_dim != self.trunk[k + 1].in_dim:
                raise ShapeError(
                    f"trunk layer {k} emits {self.trunk[k].out_dim} values "
                    f"but layer {k + 1} expects {self.trunk[k + 1].in_dim}"
                )
        for head_id, head in self.heads.items():
            self._check_head(head_id, head)

    # ------------------------------------------------------------------
    # Read-only views
    # ------------------------------------------------------------------
    @property
    def input_dim(self) -> int:
        return self.trunk[0].in_dim

    @property
    def representation_dim(self) -> int:
        return self.trunk[-1].out_dim

    @property
    def head_ids(self) -> tuple[str, ...]:
        return tuple(self.heads)

    def head(self, head_id: str) -> Layer:
        try:
            return self.heads[head_id]
        except KeyError as exc:
            raise HeadLookupError(f"no head named {head_id!r}") from exc

    def parameters(self) -> Iterator[tuple[str, Matrix]]:
        """Yield ``(name, block)`` in a fixed order: trunk first, then heads."""
        for k, layer in enumerate(self.trunk):
            yield f"trunk.{k}.weight", layer.weight
            yield f"trunk.{k}.bias", layer.bias
        for head_id, layer in self.heads.items():
            yield f"head.{head_id}.weight", layer.weight
            yield f"head.{head_id}.bias", layer.bias

    def digest(self) -> str:
        """SHA-256 over parameter names, shapes and raw bytes."""
        h = hashlib.sha256()
        h.update(f"{self.activation.value}|{self.use_bias}".encode())
        for name, block in self.parameters():
            h.update(f"{name}{block.shape}".encode())
            h.update(np.ascontiguousarray(block).tobytes())
        return h.hexdigest()

    def copy(self, *, frozen: bool = False) -> "Network":
        """Deep copy; with *frozen* the copy's arrays are read-only."""
        net = Network(
            trunk=[layer.copy() for layer in self.trunk],
            heads={k: v.copy() for k, v in self.heads.items()},
            activation=self.activation,
            use_bias=self.use_bias,
            frozen=frozen,
        )
        if frozen:
            for _, block in net.parameters():
                block.setflags(write=False)
        return net

    # ------------------------------------------------------------------
    def _check_head(self, head_id: str, head: Layer) -> None:
        if head.in_dim != self.representation_dim:
            raise ShapeError(
                f"head {head_id!r} expects {head.in_dim} inputs, "
                f"trunk emits {self.representation_dim}"
            )


@dataclass(slots=True, eq=False)
class ForwardCache:
    """Activations kept by :func:`forward` for a single :func:`backward`."""

    network_uid: int
    version: int
    inputs: Matrix
    pre: list[Matrix]
    post: list[Matrix]
    logit_shapes: dict[str, tuple[int, int]]
    used: bool = False


@dataclass(slots=True, eq=False)
class Gradients:
    """Gradient blocks mirroring a :class:`Network` exactly."""

    trunk: list[Layer]
    heads: dict[str, Layer]

    @classmethod
    def zeros_like(cls, net: Network) -> "Gradients":
        return cls(
            trunk=[Layer.zeros_like(layer) for layer in net.trunk],
            heads={k: Layer.zeros_like(v) for k, v in net.heads.items()},
        )

    def blocks(self) -> Iterator[tuple[str, Matrix]]:
        for k, layer in enumerate(self.trunk):
            yield f"trunk.{k}.weight", layer.weight
            yield f"trunk.{k}.bias", layer.bias
        for head_id, layer in self.heads.items():
            yield f"head.{head_id}.weight", layer.weight
            yield f"head.{head_id}.bias", layer.bias

    def __add__(self, other: "Gradients") -> "Gradients":
        if len(self.trunk) != len(other.trunk) or self.heads.keys() != other.heads.keys():
            raise ShapeError("gradient trees do not match")
        return Gradients(
            trunk=[
                Layer(a.weight + b.weight, a.bias + b.bias)
                for a, b in zip(self.trunk, other.trunk)
            ],
            heads={
                k: Layer(v.weight + other.heads[k].weight, v.bias + other.heads[k].bias)
                for k, v in self.heads.items()
            },
        )

    def all_finite(self) -> bool:
        return all(bool(np.all(np.isfinite(block))) for _, block in self.blocks())


@dataclass(frozen=True, slots=True, eq=False)
class TeacherSnapshot:
    """
    Immutable frozen copy of a network, used as a supervision source.

    Its parameters are read-only arrays and :func:`sgd_step` refuses it, so
    the snapshot equals its source at snapshot time forever after.
    """

    network: Network

    @property
    def head_ids(self) -> tuple[str, ...]:
        return self.network.head_ids

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TeacherSnapshot):
            return NotImplemented
        return self.digest() == other.digest()

    def __hash__(self) -> int:
        return hash(self.digest())

    def digest(self) -> str:
        return self.network.digest()

    def logits(self, x: Matrix, head_ids: Sequence[str]) -> dict[str, Matrix]:
        """Teacher outputs on *x*; no cache is kept."""
        out, _ = forward(self.network, x, head_ids)
        return out


# ------------------------------------------------------------------
# Construction
# ------------------------------------------------------------------
def build_network(
    input_dim: int,
    widths: Sequence[int],
    activation: ActivationKind | str,
    heads: Mapping[str, int],
    sigma: float,
    rng: Rng,
    *,
    use_bias: bool = True,
) -> Network:
    """
    Gaussian-initialised network (weights N(0, sigma), zero biases).

    Trunk layer k draws from ``rng.child("trunk/k")`` and head h from
    ``rng.child("head/h")``, so heads attached later with the same child
    stream get the same weights.
    """
    if not widths:
        raise ParameterError("at least one trunk width is required")
    dims = [input_dim, *widths]
    trunk = [
        Layer(gaussian_init(dims[k + 1], dims[k], sigma, rng.child(f"trunk/{k}")), zeros(dims[k + 1], 1))
        for k in range(len(widths))
    ]
    net = Network(trunk=trunk, heads={}, activation=ActivationKind(activation), use_bias=use_bias)
    for head_id, out_dim in heads.items():
        attach_head(net, head_id, out_dim, sigma, rng.child(f"head/{head_id}"))
    return net


def attach_head(net: Network, head_id: str, out_dim: int, sigma: float, rng: Rng) -> Network:
    """
    Add a Gaussian-initialised head with zero bias; the trunk is untouched.

    Raises:
        ConflictError: if *head_id* is already in use.
        UsageError: if *net* is frozen.
    """
    if net.frozen:
        raise UsageError("cannot attach a head to a frozen network")
    if head_id in net.heads:
        raise ConflictError(f"head {head_id!r} already exists")
    if out_dim < 1:
        raise ParameterError(f"head {head_id!r} needs a positive output dim, got {out_dim}")
    net.heads[head_id] = Layer(
        gaussian_init(out_dim, net.representation_dim, sigma, rng), zeros(out_dim, 1)
    )
    net.version += 1
    logger.debug("attached head %r (%d outputs)", head_id, out_dim)
    return net


def snapshot_teacher(net: Network | TeacherSnapshot) -> TeacherSnapshot:
    """Independent, read-only deep copy of *net*."""
    source = net.network if isinstance(net, TeacherSnapshot) else net
    return TeacherSnapshot(source.copy(frozen=True))


# ------------------------------------------------------------------
# Forward / backward
# ------------------------------------------------------------------
def forward(
    net: Network, x: Matrix, head_ids: Sequence[str] | None = None
) -> tuple[dict[str, Matrix], ForwardCache]:
    """
    Logits for every requested head on the column batch *x*.

    Raises:
        ShapeError: if ``x.rows`` differs from the trunk input dim.
        HeadLookupError: if a requested head does not exist.
    """
    if x.ndim != 2 or x.shape[0] != net.input_dim:
        raise ShapeError(f"input batch {x.shape} does not fit trunk input dim {net.input_dim}")
    ids = tuple(net.heads) if head_ids is None else tuple(head_ids)
    layers = [net.head(h) for h in ids]

    pre: list[Matrix] = []
    post: list[Matrix] = [x]
    a = x
    for layer in net.trunk:
        z = layer.weight @ a + layer.bias
        a = activate(z, net.activation)
        pre.append(z)
        post.append(a)

    logits = {h: layer.weight @ a + layer.bias for h, layer in zip(ids, layers)}
    cache = ForwardCache(
        network_uid=net.uid,
        version=net.version,
        inputs=x,
        pre=pre,
        post=post,
        logit_shapes={h: v.shape for h, v in logits.items()},
    )
    return logits, cache


def backward(net: Network, cache: ForwardCache, upstream: Mapping[str, Matrix]) -> Gradients:
    """
    Exact gradients of the composite loss given ``dLoss/dLogits`` per head.

    Heads without an upstream block get explicit zero gradients; every head
    gradient flows into the shared trunk.

    Raises:
        UsageError: if the cache was already used, or belongs to another
            network or to an older parameter version.
        ShapeError: if an upstream block does not match its logits.
    """
    if cache.used:
        raise UsageError("forward cache already consumed by a backward call")
    if cache.network_uid != net.uid or cache.version != net.version:
        raise UsageError("forward cache is stale: network changed since forward()")
    cache.used = True

    grads = Gradients.zeros_like(net)
    rep = cache.post[-1]
    d_rep = np.zeros_like(rep)
    for head_id, d_logits in upstream.items():
        if head_id not in cache.logit_shapes:
            raise HeadLookupError(f"head {head_id!r} was not part of the forward call")
        if d_logits.shape != cache.logit_shapes[head_id]:
            raise ShapeError(
                f"upstream gradient {d_logits.shape} for head {head_id!r} "
                f"does not match logits {cache.logit_shapes[head_id]}"
            )
        head = net.heads[head_id]
        block = grads.heads[head_id]
        block.weight = d_logits @ rep.T
        if net.use_bias:
            block.bias = d_logits.sum(axis=1, keepdims=True)
        d_rep = d_rep + head.weight.T @ d_logits

    d_a = d_rep
    for k in range(len(net.trunk) - 1, -1, -1):
        d_z = d_a * activate(cache.pre[k], net.activation, derivative=True)
        grads.trunk[k].weight = d_z @ cache.post[k].T
        if net.use_bias:
            grads.trunk[k].bias = d_z.sum(axis=1, keepdims=True)
        d_a = net.trunk[k].weight.T @ d_z
    return grads


def sgd_step(net: Network, grads: Gradients, lr: float) -> Network:
    """
    In-place ``theta <- theta - lr * grad`` for every parameter block.

    The whole step is rejected before any block changes if a gradient is
    non-finite.

    Raises:
        ParameterError: if *lr* is not positive.
        NumericalError: on NaN/Inf gradient entries.
        UsageError: if *net* is frozen.
        ShapeError: if the gradient tree does not mirror *net*.
    """
    if net.frozen:
        raise UsageError("frozen networks are never updated")
    if not lr > 0.0:
        raise ParameterError(f"learning rate must be positive, got {lr}")
    if len(grads.trunk) != len(net.trunk) or grads.heads.keys() != net.heads.keys():
        raise ShapeError("gradient tree does not mirror the network")
    for (name, p), (_, g) in zip(net.parameters(), grads.blocks()):
        if p.shape != g.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, expected {p.shape}")
    if not grads.all_finite():
        raise NumericalError("non-finite gradient entries; step aborted")

    for layer, g in zip(
        [*net.trunk, *net.heads.values()], [*grads.trunk, *grads.heads.values()]
    ):
        layer.weight = layer.weight - lr * g.weight
        if net.use_bias:
            layer.bias = layer.bias - lr * g.bias
    net.version += 1
    return net


# ------------------------------------------------------------------
# Deep linear networks
# ------------------------------------------------------------------
def end_to_end_map(net: Network, head_id: str) -> Matrix:
    """
    Collapse a deep linear network to ``W_head @ W_L @ ... @ W_1``.

    Raises:
        ModeError: if the activation is not linear or a bias is non-zero.
    """
    if net.activation is not ActivationKind.LINEAR:
        raise ModeError(f"end_to_end_map needs a linear network, got {net.activation.value}")
    head = net.head(head_id)
    if any(np.any(layer.bias != 0.0) for layer in [*net.trunk, head]):
        raise ModeError("end_to_end_map needs zero biases")
    product = identity(net.input_dim)
    for layer in net.trunk:
        product = layer.weight @ product
    return head.weight @ product
