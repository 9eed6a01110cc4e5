"""Pretraining loop."""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from smae.config import ModelConfig
from smae.errors import ConfigError, DataError, NumericError
from smae.gmae import ModelCheckpoint, init_checkpoint, pretrain_loss
from smae.graph import GraphCorpus
from smae.masking import schedule_k
from smae.nn.layers import apply_batch_stats
from smae.nn.optim import adam_step
from smae.scoring import ScoreVector, score_graph
from smae.seeding import stream
from smae.tensor import BatchStatistics, Tape, Tensor
from smae.tensor.ops import mul_const

logger = logging.getLogger(__name__)

THREADS_ENV = "SMAE_THREADS"

GraphResult = Tuple[
    float, Dict[int, Tuple[Tensor, np.ndarray]], List[BatchStatistics]
]


def worker_count(threads: Optional[int] = None) -> int:
    """Get the number of worker threads.

    :param threads: Explicit count; else the ``SMAE_THREADS`` variable, else 1
    """
    if threads is None:
        text = os.environ.get(THREADS_ENV, "1")
        try:
            threads = int(text)
        except ValueError:
            raise ConfigError(
                "{} must be an integer, got {!r}".format(THREADS_ENV, text)
            )
    if threads < 1:
        raise ConfigError("thread count must be >= 1, got {}".format(threads))
    return threads


class Trainer:
    """Runs masked-reconstruction pretraining over a corpus.

    Every graph of a batch is differentiated on its own tape, possibly on a
    worker thread; gradients and batch statistics are folded into the model
    in batch order, so results never depend on the number of workers.
    """

    def __init__(
        self,
        corpus: GraphCorpus,
        config: ModelConfig,
        threads: Optional[int] = None,
        checkpoint: Optional[ModelCheckpoint] = None,
    ):
        """Initialize.

        :param corpus: Training graphs
        :param config: Run configuration
        :param threads: Worker count (see :func:`worker_count`)
        :param checkpoint: Start from this model instead of a fresh one
        """
        if len(corpus) == 0:
            raise DataError("cannot pretrain on an empty corpus")
        self._corpus = corpus
        self._config = config
        self._threads = worker_count(threads)
        self._schedule = config.schedule()
        if (
            self._schedule.warmup_ratio >= 1.0
            and self._schedule.strategy != "random"
        ):
            logger.warning(
                "warm-up spans all %d epochs: no informative nodes are "
                "picked and masking stays random",
                config.epochs,
            )
        if checkpoint is None:
            checkpoint = init_checkpoint(config, corpus.feature_dim)
        else:
            checkpoint.check_features(corpus.feature_dim)
        self._ckpt = checkpoint

        self._indices = []
        for index, graph in enumerate(corpus):
            if graph.node_count < 2:
                logger.warning(
                    "skipping graph %d: %d node(s) cannot be masked",
                    index,
                    graph.node_count,
                )
                continue
            self._indices.append(index)
        if not self._indices:
            raise DataError("no graph in the corpus has at least 2 nodes")

        self._scores: Dict[int, ScoreVector] = {}
        if config.variant == "P" and self._schedule.strategy != "random":
            for index in self._indices:
                self._scores[index] = score_graph(
                    corpus[index], config.scorer_metric
                )
        self._largest = max(
            corpus[i].node_count for i in self._indices
        )

    @property
    def checkpoint(self) -> ModelCheckpoint:
        """Get the model being trained."""
        return self._ckpt

    def _graph_step(
        self, index: int, epoch: int, weight: float
    ) -> GraphResult:
        rng = stream(self._config.seed, "mask", index, epoch)
        with Tape() as tape:
            loss, _ = pretrain_loss(
                self._ckpt,
                self._corpus[index],
                epoch,
                rng,
                scores=self._scores.get(index),
                train=True,
            )
            scaled = mul_const(loss, weight)
        leaves = tape.backward(scaled, accumulate=False)
        return loss.item(), leaves, tape.batch_stats

    def _run_batch(
        self, pool, batch: Sequence[int], epoch: int
    ) -> List[float]:
        weight = 1.0 / len(batch)
        if pool is None:
            results = [self._graph_step(i, epoch, weight) for i in batch]
        else:
            results = list(
                pool.map(lambda i: self._graph_step(i, epoch, weight), batch)
            )
        store = self._ckpt.store
        store.zero_grad()
        losses = []
        for loss, leaves, stats in results:
            losses.append(loss)
            for tensor, grad in leaves.values():
                tensor.accumulate(grad)
            apply_batch_stats(store, stats)
        cfg = self._config
        adam_step(store, cfg.lr, weight_decay=cfg.weight_decay)
        return losses

    def train_epoch(self, pool, epoch: int) -> float:
        """Run one epoch.

        :param pool: Worker pool or None
        :param epoch: Epoch t in [1, T]
        :return: Mean per-graph loss
        """
        order = list(self._indices)
        stream(self._config.seed, "shuffle", epoch).shuffle(order)
        size = self._config.batch_size
        losses: List[float] = []
        for batch_no, start in enumerate(range(0, len(order), size)):
            batch = order[start : start + size]
            try:
                losses.extend(self._run_batch(pool, batch, epoch))
            except NumericError as ex:
                raise NumericError(
                    "training diverged at epoch {}, batch {}: {}".format(
                        epoch, batch_no, ex.msg
                    ),
                    ex.code,
                    ex,
                )
        return float(np.mean(losses))

    def run(self) -> ModelCheckpoint:
        """Train for the configured number of epochs.

        :return: Trained checkpoint, rounded to checkpoint precision
        """
        cfg = self._config
        logger.info(
            "pretraining variant %s on %d graphs for %d epochs "
            "(%d parameters, %d worker(s))",
            cfg.variant,
            len(self._indices),
            cfg.epochs,
            self._ckpt.store.parameter_count(),
            self._threads,
        )
        pool = None
        if self._threads > 1:
            pool = ThreadPoolExecutor(max_workers=self._threads)
        try:
            for epoch in range(1, cfg.epochs + 1):
                mean_loss = self.train_epoch(pool, epoch)
                self._ckpt.log.append(mean_loss)
                logger.info(
                    "epoch %d/%d: loss %.6f, K=%d",
                    epoch,
                    cfg.epochs,
                    mean_loss,
                    schedule_k(epoch, self._schedule, self._largest),
                )
        finally:
            if pool is not None:
                pool.shutdown()
        self._ckpt.store.quantize()
        return self._ckpt


def pretrain(
    corpus: GraphCorpus, config: ModelConfig, threads: Optional[int] = None
) -> ModelCheckpoint:
    """Pretrain a model.

    :param corpus: Training graphs
    :param config: Run configuration
    :param threads: Worker count
    :return: Trained checkpoint
    """
    return Trainer(corpus, config, threads).run()
