"""Learnable node scorer and feature modulation."""

import numpy as np

from smae.errors import ConfigError
from smae.nn import ParamStore, init_linear
from smae.nn.layers import gin_aggregate, linear
from smae.scoring import ScoreVector
from smae.tensor import Tensor
from smae.tensor.ops import (
    add,
    gcn_propagator,
    matmul,
    mul_const,
    propagate,
    relu,
    reshape,
    row_scale,
    sigmoid,
)

SCORER_PREFIX = "scorer"
SCORER_LAYERS = ("gin", "gcn")
SCORER_FUNCTIONS = ("mix", "gnn", "mlp")


class ScorerParams:
    """Lightweight scoring network: one message-passing layer and a
    one-hidden-layer perceptron, both mapping node features to a logit.

    The logits are combined as ``z_gnn + alpha * z_mlp`` (``mix``), or one of
    them alone (``gnn``, ``mlp``); only the parameters the combination uses
    exist in the store.
    """

    def __init__(
        self,
        store: ParamStore,
        alpha: float,
        layer: str = "gin",
        function: str = "mix",
        prefix: str = SCORER_PREFIX,
    ):
        """Initialize.

        :param store: Store holding the scorer tensors
        :param alpha: Balance between the two logits
        :param layer: Message-passing style, gin or gcn
        :param function: Logit combination, mix, gnn or mlp
        :param prefix: Parameter name prefix
        """
        if layer not in SCORER_LAYERS:
            raise ConfigError('unknown scorer layer "{}"'.format(layer))
        if function not in SCORER_FUNCTIONS:
            raise ConfigError(
                'unknown scorer function "{}"'.format(function)
            )
        if not alpha >= 0:
            raise ConfigError("alpha must be >= 0, got {}".format(alpha))
        self.store = store
        self.alpha = float(alpha)
        self.layer = layer
        self.function = function
        self.prefix = prefix

    @property
    def uses_gnn(self) -> bool:
        """Get whether the message-passing logit is used."""
        return self.function in ("mix", "gnn")

    @property
    def uses_mlp(self) -> bool:
        """Get whether the perceptron logit is used."""
        return self.function in ("mix", "mlp")

    def initialize(
        self, feature_dim: int, hidden: int, rng: np.random.Generator
    ):
        """Create the scorer tensors.

        :param feature_dim: Node feature width
        :param hidden: Perceptron hidden width
        :param rng: Random stream
        """
        if self.uses_gnn:
            if self.layer == "gin":
                self.store.add_param(self.prefix + ".gnn.eps", np.zeros(1))
            init_linear(self.store, self.prefix + ".gnn", feature_dim, 1, rng)
        if self.uses_mlp:
            init_linear(
                self.store, self.prefix + ".mlp.lin1", feature_dim, hidden, rng
            )
            init_linear(self.store, self.prefix + ".mlp.lin2", hidden, 1, rng)

    def gnn_logits(self, graph, x: Tensor) -> Tensor:
        """Get the n x 1 message-passing logits."""
        prefix = self.prefix + ".gnn"
        if self.layer == "gin":
            h = gin_aggregate(self.store, prefix, graph, x)
            return linear(self.store, prefix, h)
        out = propagate(
            gcn_propagator(graph), matmul(x, self.store[prefix + ".weight"])
        )
        return add(out, self.store[prefix + ".bias"])

    def mlp_logits(self, x: Tensor) -> Tensor:
        """Get the n x 1 per-node perceptron logits."""
        h = relu(linear(self.store, self.prefix + ".mlp.lin1", x))
        return linear(self.store, self.prefix + ".mlp.lin2", h)


def learnable_scores(params: ScorerParams, graph, x: Tensor) -> ScoreVector:
    """Score nodes with the scoring network.

    :param params: Scorer
    :param graph: The graph
    :param x: n x d node features
    :return: Scores in (0, 1) carrying a differentiable ``tensor``
    """
    if params.function == "gnn":
        logits = params.gnn_logits(graph, x)
    elif params.function == "mlp":
        logits = params.mlp_logits(x)
    else:
        logits = add(
            params.gnn_logits(graph, x),
            mul_const(params.mlp_logits(x), params.alpha),
        )
    scores = reshape(sigmoid(logits), (graph.node_count,))
    return ScoreVector(scores.data, "learnable", tensor=scores)


def modulate_features(x: Tensor, scores) -> Tensor:
    """Scale row i of the features by score i.

    :param x: n x d features
    :param scores: ScoreVector (its tensor when learnable) or Tensor
    :return: Modulated features
    """
    if isinstance(scores, ScoreVector):
        scores = (
            scores.tensor
            if scores.tensor is not None
            else Tensor(scores.values)
        )
    return row_scale(x, scores)
