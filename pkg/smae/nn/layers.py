"""Graph layers: GIN, GCN, batch normalization and perceptrons."""

from typing import Iterable

import numpy as np

from smae.nn import ParamStore, init_batchnorm, init_linear
from smae.tensor import BatchStatistics, Tensor
from smae.tensor.ops import (
    add,
    add_scalar,
    batch_norm,
    gcn_propagator,
    matmul,
    propagate,
    relu,
    scale,
    sum_propagator,
)

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def linear(store: ParamStore, prefix: str, x: Tensor) -> Tensor:
    """Affine map ``x W + b`` (bias optional).

    :param store: Parameter store
    :param prefix: Name prefix of the map
    :param x: n x d_in input
    :return: n x d_out output
    """
    out = matmul(x, store[prefix + ".weight"])
    if prefix + ".bias" in store:
        out = add(out, store[prefix + ".bias"])
    return out


def batchnorm(
    store: ParamStore, prefix: str, h: Tensor, train: bool
) -> Tensor:
    """Batch normalization with the named parameters.

    :param store: Parameter store
    :param prefix: Name prefix
    :param h: n x d input
    :param train: Batch statistics (True) or running statistics (False)
    :return: Normalized output
    """
    return batch_norm(
        h,
        store[prefix + ".gamma"],
        store[prefix + ".beta"],
        store.buffer(prefix + ".running_mean"),
        store.buffer(prefix + ".running_var"),
        train=train,
        eps=BN_EPS,
        prefix=prefix,
    )


def apply_batch_stats(
    store: ParamStore,
    stats: Iterable[BatchStatistics],
    momentum: float = BN_MOMENTUM,
):
    """Fold observed batch statistics into running statistics, in order.

    :param store: Parameter store
    :param stats: Statistics recorded on tapes
    :param momentum: Weight of the new observation
    """
    for stat in stats:
        mean_name = stat.prefix + ".running_mean"
        var_name = stat.prefix + ".running_var"
        store.set_buffer(
            mean_name,
            (1.0 - momentum) * store.buffer(mean_name) + momentum * stat.mean,
        )
        store.set_buffer(
            var_name,
            (1.0 - momentum) * store.buffer(var_name) + momentum * stat.var,
        )


def init_mlp2(
    store: ParamStore,
    prefix: str,
    fan_in: int,
    hidden: int,
    fan_out: int,
    rng: np.random.Generator,
):
    """Create Linear -> BatchNorm -> ReLU -> Linear parameters."""
    init_linear(store, prefix + ".lin1", fan_in, hidden, rng)
    init_batchnorm(store, prefix + ".bn", hidden)
    init_linear(store, prefix + ".lin2", hidden, fan_out, rng)


def mlp2(store: ParamStore, prefix: str, h: Tensor, train: bool) -> Tensor:
    """Linear -> BatchNorm -> ReLU -> Linear."""
    h = linear(store, prefix + ".lin1", h)
    h = batchnorm(store, prefix + ".bn", h, train)
    h = relu(h)
    return linear(store, prefix + ".lin2", h)


def init_gin_layer(
    store: ParamStore,
    prefix: str,
    fan_in: int,
    hidden: int,
    fan_out: int,
    rng: np.random.Generator,
):
    """Create GIN layer parameters; epsilon starts at 0."""
    store.add_param(prefix + ".eps", np.zeros(1))
    init_mlp2(store, prefix + ".mlp", fan_in, hidden, fan_out, rng)


def gin_aggregate(
    store: ParamStore, prefix: str, graph, h: Tensor
) -> Tensor:
    """Compute ``(1 + eps) h_i + sum_{j in N(i)} h_j``.

    :param store: Parameter store
    :param prefix: Layer prefix holding ``eps``
    :param graph: The graph
    :param h: n x d node states
    :return: Aggregated n x d states
    """
    self_term = scale(h, add_scalar(store[prefix + ".eps"], 1.0))
    return add(self_term, propagate(sum_propagator(graph), h))


def gin_layer(
    store: ParamStore, prefix: str, graph, h: Tensor, train: bool
) -> Tensor:
    """GIN layer: two-layer perceptron over the sum aggregation."""
    return mlp2(
        store, prefix + ".mlp", gin_aggregate(store, prefix, graph, h), train
    )


def init_gcn_layer(
    store: ParamStore,
    prefix: str,
    fan_in: int,
    fan_out: int,
    rng: np.random.Generator,
):
    """Create GCN layer parameters (weight only)."""
    init_linear(store, prefix, fan_in, fan_out, rng, bias=False)


def gcn_layer(
    store: ParamStore,
    prefix: str,
    graph,
    h: Tensor,
    activation: bool = True,
) -> Tensor:
    """GCN layer ``ReLU(D^-1/2 (A + I) D^-1/2 H W)``.

    :param activation: Apply the rectifier (decoders drop it on the \
    output layer)
    """
    out = propagate(
        gcn_propagator(graph), matmul(h, store[prefix + ".weight"])
    )
    if activation:
        out = relu(out)
    return out
