"""Graph embeddings for downstream evaluation."""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from smae.errors import DataError, ErrorDescriptor, ErrorGeneratorMixin
from smae.gmae import ModelCheckpoint, encode, graph_scores, node_features
from smae.graph import Graph, GraphCorpus
from smae.tensor import Tensor
from smae.tensor.ops import reduce_rows

logger = logging.getLogger(__name__)


class EmbeddingErrorDescriptor(ErrorDescriptor):
    """Error descriptor."""

    def __init__(self, *args):
        """Initialize.

        :param args: Any other ErrorDescriptor arguments
        """
        super().__init__(*args, exception_class=DataError)


class EmbeddingMatrix(ErrorGeneratorMixin):
    """One embedding vector per graph, with optional graph labels."""

    EMB_ERR_SHAPE = 800
    EMB_ERR_NONFINITE = 801
    EMB_ERR_LABELS = 802
    EMB_ERR_RECORD = 803
    EMB_ERR_ORDER = 804
    _ERRORS = {
        EMB_ERR_SHAPE: EmbeddingErrorDescriptor(
            EMB_ERR_SHAPE,
            "Bad shape",
            "embeddings must form a non-empty matrix, got shape {shape}",
        ),
        EMB_ERR_NONFINITE: EmbeddingErrorDescriptor(
            EMB_ERR_NONFINITE,
            "Non-finite embedding",
            "embedding of graph {index} is not finite",
        ),
        EMB_ERR_LABELS: EmbeddingErrorDescriptor(
            EMB_ERR_LABELS,
            "Label count",
            "{got} labels for {rows} embeddings",
        ),
        EMB_ERR_RECORD: EmbeddingErrorDescriptor(
            EMB_ERR_RECORD,
            "Malformed record",
            "line {line}: {reason}",
        ),
        EMB_ERR_ORDER: EmbeddingErrorDescriptor(
            EMB_ERR_ORDER,
            "Record order",
            'line {line}: expected "i" = {want}, got {got}',
        ),
    }

    def __init__(
        self, rows: np.ndarray, labels: Optional[Iterable[int]] = None
    ):
        """Initialize.

        :param rows: N x h matrix
        :param labels: Optional class of each graph
        """
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise self.get_error_from_code(
                self.EMB_ERR_SHAPE, shape=rows.shape
            )
        bad = np.flatnonzero(~np.all(np.isfinite(rows), axis=1))
        if bad.size:
            raise self.get_error_from_code(
                self.EMB_ERR_NONFINITE, index=int(bad[0])
            )
        if labels is not None:
            labels = np.asarray(list(labels), dtype=int)
            if labels.shape != (rows.shape[0],):
                raise self.get_error_from_code(
                    self.EMB_ERR_LABELS, got=labels.size, rows=rows.shape[0]
                )
        rows.setflags(write=False)
        self._rows = rows
        self._labels = labels

    @property
    def rows(self) -> np.ndarray:
        """Get the embedding matrix."""
        return self._rows

    @property
    def labels(self) -> Optional[np.ndarray]:
        """Get graph labels, if known."""
        return self._labels

    def __len__(self):
        """Get number of graphs."""
        return self._rows.shape[0]

    def records(self) -> List[Dict[str, Any]]:
        """Get one ``{"i", "v", "y"?}`` record per graph."""
        ret = []
        for index, row in enumerate(self._rows):
            record: Dict[str, Any] = {"i": index, "v": row.tolist()}
            if self._labels is not None:
                record["y"] = int(self._labels[index])
            ret.append(record)
        return ret

    @classmethod
    def from_records(cls, text: str) -> "EmbeddingMatrix":
        """Parse JSON-lines embedding records.

        Labels are kept only when every record carries one.

        :param text: File contents
        :return: Embeddings
        """
        rows: List[List[float]] = []
        labels: List[Optional[int]] = []
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                index = record["i"]
                vector = [float(v) for v in record["v"]]
                label = record.get("y")
            except (ValueError, KeyError, TypeError, AttributeError) as ex:
                raise cls.get_error_from_code(
                    cls.EMB_ERR_RECORD,
                    line=line_no,
                    reason=str(ex),
                    _exception=ex,
                )
            if index != len(rows):
                raise cls.get_error_from_code(
                    cls.EMB_ERR_ORDER, line=line_no, want=len(rows), got=index
                )
            if rows and len(vector) != len(rows[0]):
                raise cls.get_error_from_code(
                    cls.EMB_ERR_RECORD,
                    line=line_no,
                    reason="vector width {} differs from {}".format(
                        len(vector), len(rows[0])
                    ),
                )
            rows.append(vector)
            labels.append(label)
        if not rows:
            raise cls.get_error_from_code(cls.EMB_ERR_SHAPE, shape=(0,))
        if all(label is not None for label in labels):
            return cls(np.array(rows), labels)
        return cls(np.array(rows))

    @classmethod
    def load(cls, path: str) -> "EmbeddingMatrix":
        """Read a JSON-lines embedding file."""
        try:
            with open(path, "r") as emb_file:
                text = emb_file.read()
        except OSError as ex:
            raise DataError(
                "cannot read embeddings {}: {}".format(path, ex), exception=ex
            )
        return cls.from_records(text)


def readout(h: Tensor, pooling: str) -> np.ndarray:
    """Pool node embeddings into one graph vector (mean, max or sum)."""
    return reduce_rows(h, pooling).data


def embed_graph(
    ckpt: ModelCheckpoint, graph: Graph, modulate: bool = False
) -> np.ndarray:
    """Embed one graph without masking.

    :param ckpt: Model
    :param graph: The graph
    :param modulate: Scale features by learned scores first (variant L)
    :return: Graph embedding
    """
    x = node_features(ckpt, graph)
    if modulate and ckpt.scorer is not None:
        _, x = graph_scores(ckpt, graph, x)
    h = encode(ckpt, graph, x, train=False)
    return readout(h, ckpt.config.pooling)


def embed_corpus(
    ckpt: ModelCheckpoint,
    corpus: GraphCorpus,
    modulate: Optional[bool] = None,
    threads: int = 1,
) -> EmbeddingMatrix:
    """Embed every graph of a corpus.

    :param ckpt: Model
    :param corpus: Graphs
    :param modulate: Override the configured inference-time modulation
    :param threads: Worker threads
    :return: Embeddings, labelled when the corpus is
    """
    ckpt.check_features(corpus.feature_dim)
    if modulate is None:
        modulate = ckpt.config.modulate_at_inference
    if modulate and ckpt.scorer is None:
        logger.warning("model has no learnable scorer; ignoring modulation")

    def _embed(graph):
        return embed_graph(ckpt, graph, modulate)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_embed, corpus))
    else:
        rows = [_embed(graph) for graph in corpus]
    return EmbeddingMatrix(np.stack(rows), corpus.labels)
