"""Masked graph autoencoder: model assembly, checkpoints and loss."""

import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from smae.config import ModelConfig
from smae.errors import DataError, ErrorDescriptor, ErrorGeneratorMixin
from smae.graph import Graph
from smae.masking import MaskPlan, apply_mask, plan_mask
from smae.nn import ParamStore, glorot_uniform
from smae.nn.checkpoint import CheckpointCodec
from smae.nn.layers import (
    gcn_layer,
    gin_layer,
    init_gcn_layer,
    init_gin_layer,
)
from smae.scoring import ScoreVector
from smae.scoring.learnable import (
    ScorerParams,
    learnable_scores,
    modulate_features,
)
from smae.seeding import stream
from smae.tensor import Tensor
from smae.tensor.ops import (
    matmul,
    prelu,
    replace_rows,
    scaled_cosine_error,
    take_rows,
)

logger = logging.getLogger(__name__)

PRELU_INIT = 0.25


class CheckpointErrorDescriptor(ErrorDescriptor):
    """Error descriptor."""

    def __init__(self, *args):
        """Initialize.

        :param args: Any other ErrorDescriptor arguments
        """
        super().__init__(*args, exception_class=DataError)


class ModelCheckpoint(ErrorGeneratorMixin):
    """Parameters, configuration and training log of a model."""

    MODEL_ERR_DIM = 700
    MODEL_ERR_TENSORS = 701
    MODEL_ERR_HEADER = 702
    MODEL_ERR_IO = 703
    MODEL_ERR_EMPTY_MASK = 704
    _ERRORS = {
        MODEL_ERR_DIM: CheckpointErrorDescriptor(
            MODEL_ERR_DIM,
            "Feature width mismatch",
            "model expects {want} input features, got {got}",
        ),
        MODEL_ERR_TENSORS: CheckpointErrorDescriptor(
            MODEL_ERR_TENSORS,
            "Tensor set mismatch",
            "checkpoint tensors do not match the configuration: "
            "missing {missing}, unexpected {extra}",
        ),
        MODEL_ERR_HEADER: CheckpointErrorDescriptor(
            MODEL_ERR_HEADER,
            "Bad header",
            "checkpoint header lacks {what}",
        ),
        MODEL_ERR_IO: CheckpointErrorDescriptor(
            MODEL_ERR_IO,
            "I/O error",
            "cannot access checkpoint {path}: {reason}",
        ),
        MODEL_ERR_EMPTY_MASK: CheckpointErrorDescriptor(
            MODEL_ERR_EMPTY_MASK,
            "Empty masked set",
            "reconstruction loss needs at least one masked node",
        ),
    }

    def __init__(
        self,
        store: ParamStore,
        config: ModelConfig,
        feature_dim: int,
        log: Optional[List[float]] = None,
    ):
        """Initialize.

        :param store: Parameters and buffers
        :param config: Run configuration
        :param feature_dim: Input feature width
        :param log: Per-epoch mean losses
        """
        self._store = store
        self._config = config
        self._feature_dim = feature_dim
        self.log: List[float] = list(log or [])
        self._scorer = None
        if config.variant == "L":
            self._scorer = ScorerParams(
                store,
                config.alpha,
                config.scorer_layer,
                config.scorer_function,
            )

    @property
    def store(self) -> ParamStore:
        """Get parameter store."""
        return self._store

    @property
    def config(self) -> ModelConfig:
        """Get configuration."""
        return self._config

    @property
    def feature_dim(self) -> int:
        """Get input feature width."""
        return self._feature_dim

    @property
    def scorer(self) -> Optional[ScorerParams]:
        """Get the learnable scorer (variant L only)."""
        return self._scorer

    def check_features(self, width: int):
        """Check an input feature width against the model."""
        if width != self._feature_dim:
            raise self.get_error_from_code(
                self.MODEL_ERR_DIM, want=self._feature_dim, got=width
            )

    def to_bytes(self) -> bytes:
        """Serialize."""
        header = {
            "config": self._config.to_dict(),
            "feature_dim": self._feature_dim,
            "log": [float(x) for x in self.log],
        }
        return CheckpointCodec.encode(self._store, header)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ModelCheckpoint":
        """Deserialize.

        :param data: Container bytes
        :return: The checkpoint
        """
        store, header = CheckpointCodec.decode(data)
        for key in ("config", "feature_dim", "log"):
            if key not in header:
                raise cls.get_error_from_code(cls.MODEL_ERR_HEADER, what=key)
        config = ModelConfig.from_dict(header["config"])
        feature_dim = int(header["feature_dim"])
        if config.dtype != "float64":
            rebuilt = ParamStore(config.dtype)
            for name, tensor in store.params():
                rebuilt.add_param(name, tensor.data)
            for name, array in store.buffers():
                rebuilt.add_buffer(name, array)
            store = rebuilt
        expected = init_checkpoint(config, feature_dim).store
        want = set(expected.param_names()) | {n for n, _ in expected.buffers()}
        have = set(store.param_names()) | {n for n, _ in store.buffers()}
        if want != have:
            raise cls.get_error_from_code(
                cls.MODEL_ERR_TENSORS,
                missing=sorted(want - have) or "none",
                extra=sorted(have - want) or "none",
            )
        return cls(store, config, feature_dim, header["log"])

    def save(self, path: str):
        """Write to a file.

        :param path: Output path
        """
        try:
            with open(path, "wb") as ckpt_file:
                ckpt_file.write(self.to_bytes())
        except OSError as ex:
            raise self.get_error_from_code(
                self.MODEL_ERR_IO, path=path, reason=ex, _exception=ex
            )

    @classmethod
    def load(cls, path: str) -> "ModelCheckpoint":
        """Read from a file.

        :param path: Checkpoint path
        :return: The checkpoint
        """
        try:
            with open(path, "rb") as ckpt_file:
                data = ckpt_file.read()
        except OSError as ex:
            raise cls.get_error_from_code(
                cls.MODEL_ERR_IO, path=path, reason=ex, _exception=ex
            )
        return cls.from_bytes(data)


def _init_layer(store, prefix, layer_type, fan_in, fan_out, rng):
    if layer_type == "gin":
        init_gin_layer(store, prefix, fan_in, fan_out, fan_out, rng)
    else:
        init_gcn_layer(store, prefix, fan_in, fan_out, rng)


def init_checkpoint(config: ModelConfig, feature_dim: int) -> ModelCheckpoint:
    """Create a freshly initialized model.

    :param config: Run configuration
    :param feature_dim: Input feature width
    :return: Untrained checkpoint
    """
    if feature_dim < 1:
        raise DataError("model needs at least one input feature")
    rng = stream(config.seed, "init")
    store = ParamStore(config.dtype)
    hidden = config.encoder.hidden
    for layer in range(config.encoder.num_layers):
        prefix = "encoder.{}".format(layer)
        fan_in = feature_dim if layer == 0 else hidden
        _init_layer(
            store, prefix, config.encoder.layer_type, fan_in, hidden, rng
        )
        if config.encoder.layer_type == "gin":
            store.add_param(prefix + ".prelu", np.full(1, PRELU_INIT))
    store.add_param("enc_mask_token", np.zeros(feature_dim))
    store.add_param(
        "encoder_to_decoder.weight", glorot_uniform(rng, hidden, hidden)
    )
    store.add_param("dec_mask_token", np.zeros(hidden))
    last = config.decoder.num_layers - 1
    for layer in range(config.decoder.num_layers):
        prefix = "decoder.{}".format(layer)
        fan_out = feature_dim if layer == last else hidden
        _init_layer(
            store, prefix, config.decoder.layer_type, hidden, fan_out, rng
        )
        if config.decoder.layer_type == "gin" and layer != last:
            store.add_param(prefix + ".prelu", np.full(1, PRELU_INIT))
    ckpt = ModelCheckpoint(store, config, feature_dim)
    if ckpt.scorer is not None:
        ckpt.scorer.initialize(feature_dim, config.scorer_hidden, rng)
    return ckpt


def node_features(ckpt: ModelCheckpoint, graph: Graph) -> Tensor:
    """Get the graph's features as a constant tensor of the model dtype."""
    ckpt.check_features(graph.feature_dim)
    return Tensor(graph.features, dtype=ckpt.store.dtype)


def _stack(ckpt, part, graph, h, train, activate_last):
    store = ckpt.store
    cfg = ckpt.config.encoder if part == "encoder" else ckpt.config.decoder
    last = cfg.num_layers - 1
    for layer in range(cfg.num_layers):
        prefix = "{}.{}".format(part, layer)
        active = activate_last or layer != last
        if cfg.layer_type == "gin":
            h = gin_layer(store, prefix, graph, h, train)
            if active:
                h = prelu(h, store[prefix + ".prelu"])
        else:
            h = gcn_layer(store, prefix, graph, h, activation=active)
    return h


def encode(
    ckpt: ModelCheckpoint, graph: Graph, x: Tensor, train: bool = False
) -> Tensor:
    """Embed nodes over the full adjacency.

    :param ckpt: Model
    :param graph: The graph
    :param x: n x d (possibly masked) features
    :param train: Batch statistics (True) or running statistics
    :return: n x hidden embeddings
    """
    ckpt.check_features(x.shape[1])
    return _stack(ckpt, "encoder", graph, x, train, activate_last=True)


def remask(h: Tensor, plan: MaskPlan, decoder_token: Tensor) -> Tensor:
    """Replace embeddings of masked nodes by the decoder token."""
    return replace_rows(h, plan.masked, decoder_token)


def decode(
    ckpt: ModelCheckpoint, graph: Graph, h: Tensor, train: bool = False
) -> Tensor:
    """Reconstruct n x d features from (re-masked) embeddings."""
    h = matmul(h, ckpt.store["encoder_to_decoder.weight"])
    return _stack(ckpt, "decoder", graph, h, train, activate_last=False)


def sce_loss(pred: Tensor, target: np.ndarray, gamma: float) -> Tensor:
    """Scaled cosine error over reconstructed rows.

    :param pred: m x d reconstructions
    :param target: m x d original features
    :param gamma: Exponent
    :return: Scalar loss
    """
    target = np.asarray(target)
    if target.ndim != 2 or target.shape[0] == 0:
        raise ModelCheckpoint.get_error_from_code(
            ModelCheckpoint.MODEL_ERR_EMPTY_MASK
        )
    zero_rows = int(np.sum(np.linalg.norm(target, axis=1) == 0))
    if zero_rows:
        logger.warning(
            "%d reconstruction target row(s) are zero; cosine undefined",
            zero_rows,
        )
    return scaled_cosine_error(pred, target, gamma)


def graph_scores(
    ckpt: ModelCheckpoint, graph: Graph, x: Tensor
) -> Tuple[ScoreVector, Tensor]:
    """Score nodes with the learnable scorer and modulate features.

    :return: Scores and modulated features
    """
    scores = learnable_scores(ckpt.scorer, graph, x)
    return scores, modulate_features(x, scores)


def pretrain_loss(
    ckpt: ModelCheckpoint,
    graph: Graph,
    epoch: int,
    rng: np.random.Generator,
    scores: Optional[ScoreVector] = None,
    train: bool = True,
) -> Tuple[Tensor, MaskPlan]:
    """Masked reconstruction loss of one graph.

    :param ckpt: Model
    :param graph: The graph (at least 2 nodes)
    :param epoch: Epoch t, drives the masking curriculum
    :param rng: Masking stream of this graph and epoch
    :param scores: Predefined scores (variant P)
    :param train: Batch normalization mode
    :return: Loss and the mask plan used
    """
    x = node_features(ckpt, graph)
    x_in = x
    ranking = None if scores is None else scores.values
    if ckpt.scorer is not None:
        learned, x_in = graph_scores(ckpt, graph, x)
        ranking = learned.values
    plan = plan_mask(
        ranking, ckpt.config.schedule(), epoch, graph.node_count, rng
    )
    store = ckpt.store
    x_masked = apply_mask(x_in, plan, store["enc_mask_token"])
    h = encode(ckpt, graph, x_masked, train)
    h = remask(h, plan, store["dec_mask_token"])
    recon = decode(ckpt, graph, h, train)
    loss = sce_loss(
        take_rows(recon, plan.masked),
        graph.features[list(plan.masked)],
        ckpt.config.sce_gamma,
    )
    return loss, plan


def checkpoint_summary(ckpt: ModelCheckpoint) -> Dict[str, Any]:
    """Get a short description of a model."""
    return {
        "variant": ckpt.config.variant,
        "feature_dim": ckpt.feature_dim,
        "parameters": ckpt.store.parameter_count(),
        "epochs_trained": len(ckpt.log),
    }
