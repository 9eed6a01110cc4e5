"""Line-delimited JSON corpus reader and writer.

One graph per line::

    {"n": 3, "edges": [[0, 1], [1, 2]], "node_labels": [0, 1, 0], "label": 1}

``features`` (a list of rows) may replace or accompany ``node_labels``.
"""

import json
import logging
from typing import Any, Dict, List, Optional, Union

import numpy as np

from smae.errors import DataError, ErrorDescriptor, ErrorGeneratorMixin
from smae.graph import Featurization, Graph, GraphCorpus

logger = logging.getLogger(__name__)


class CorpusErrorDescriptor(ErrorDescriptor):
    """Error descriptor."""

    def __init__(self, *args):
        """Initialize.

        :param args: Any other ErrorDescriptor arguments
        """
        super().__init__(*args, exception_class=DataError)


class CorpusReader(ErrorGeneratorMixin):
    """Parse corpus text into graphs, tracking line numbers for errors."""

    READ_ERR_MALFORMED = 200
    READ_ERR_FIELD = 201
    READ_ERR_MISSING = 202
    READ_ERR_GRAPH = 203
    READ_ERR_FEATURE_WIDTH = 204
    READ_ERR_UNKNOWN_KEY = 205
    READ_ERR_EMPTY = 206
    _ERRORS = {
        READ_ERR_MALFORMED: CorpusErrorDescriptor(
            READ_ERR_MALFORMED,
            "Malformed record",
            "line {line}: malformed record: {reason}",
        ),
        READ_ERR_FIELD: CorpusErrorDescriptor(
            READ_ERR_FIELD,
            "Invalid field",
            'line {line}: invalid field "{field}": {reason}',
        ),
        READ_ERR_MISSING: CorpusErrorDescriptor(
            READ_ERR_MISSING,
            "Missing field",
            'line {line}: field "{field}" is required for {why}',
        ),
        READ_ERR_GRAPH: CorpusErrorDescriptor(
            READ_ERR_GRAPH,
            "Invalid graph",
            "line {line}: {reason}",
        ),
        READ_ERR_FEATURE_WIDTH: CorpusErrorDescriptor(
            READ_ERR_FEATURE_WIDTH,
            "Inconsistent feature width",
            "line {line}: feature width {got} differs from {want}",
        ),
        READ_ERR_UNKNOWN_KEY: CorpusErrorDescriptor(
            READ_ERR_UNKNOWN_KEY,
            "Unknown key",
            'line {line}: unknown key "{key}"',
        ),
        READ_ERR_EMPTY: CorpusErrorDescriptor(
            READ_ERR_EMPTY,
            "Empty corpus",
            "corpus contains no graphs",
        ),
    }

    KNOWN_KEYS = ("n", "edges", "node_labels", "features", "label")

    def __init__(self, featurization: Featurization):
        """Initialize.

        :param featurization: How node features are to be built
        """
        self._featurization = featurization
        self._current_line = 0

    @property
    def current_line(self):
        """Get current line."""
        return self._current_line

    def _int_field(self, record: Dict[str, Any], name: str) -> int:
        value = record[name]
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.get_error_from_code(
                self.READ_ERR_FIELD,
                line=self._current_line,
                field=name,
                reason="expected an integer",
            )
        return value

    def _parse_record(self, text: str) -> Dict[str, Any]:
        try:
            record = json.loads(text)
        except json.JSONDecodeError as ex:
            raise self.get_error_from_code(
                self.READ_ERR_MALFORMED,
                line=self._current_line,
                reason=ex.msg,
                _exception=ex,
            )
        if not isinstance(record, dict):
            raise self.get_error_from_code(
                self.READ_ERR_MALFORMED,
                line=self._current_line,
                reason="expected a JSON object",
            )
        for key in record:
            if key not in self.KNOWN_KEYS:
                raise self.get_error_from_code(
                    self.READ_ERR_UNKNOWN_KEY, line=self._current_line, key=key
                )
        if "n" not in record:
            raise self.get_error_from_code(
                self.READ_ERR_MISSING,
                line=self._current_line,
                field="n",
                why="every graph",
            )
        return record

    def _build_graph(self, record: Dict[str, Any]) -> Graph:
        line = self._current_line
        n = self._int_field(record, "n")
        edges = record.get("edges", [])
        if not isinstance(edges, list) or any(
            not isinstance(edge, list)
            or len(edge) != 2
            or any(isinstance(v, bool) or not isinstance(v, int) for v in edge)
            for edge in edges
        ):
            raise self.get_error_from_code(
                self.READ_ERR_FIELD,
                line=line,
                field="edges",
                reason="expected a list of integer pairs",
            )
        node_labels = record.get("node_labels")
        if node_labels is not None and (
            not isinstance(node_labels, list)
            or any(
                isinstance(v, bool) or not isinstance(v, int) or v < 0
                for v in node_labels
            )
        ):
            raise self.get_error_from_code(
                self.READ_ERR_FIELD,
                line=line,
                field="node_labels",
                reason="expected a list of nonnegative integers",
            )
        features = None
        if "features" in record:
            try:
                features = np.array(record["features"], dtype=np.float64)
            except (TypeError, ValueError) as ex:
                raise self.get_error_from_code(
                    self.READ_ERR_FIELD,
                    line=line,
                    field="features",
                    reason="expected a rectangular list of numbers",
                    _exception=ex,
                )
            if features.ndim != 2:
                raise self.get_error_from_code(
                    self.READ_ERR_FIELD,
                    line=line,
                    field="features",
                    reason="expected a matrix",
                )
            if not np.all(np.isfinite(features)):
                raise self.get_error_from_code(
                    self.READ_ERR_FIELD,
                    line=line,
                    field="features",
                    reason="non-finite value",
                )
        label = None
        if "label" in record and record["label"] is not None:
            label = self._int_field(record, "label")
        try:
            return Graph(
                n, edges, features, label=label, node_labels=node_labels
            )
        except DataError as ex:
            raise self.get_error_from_code(
                self.READ_ERR_GRAPH, line=line, reason=ex.msg, _exception=ex
            )

    def _check_requirements(self, record: Dict[str, Any]):
        kind = self._featurization.kind
        if kind == Featurization.RAW and "features" not in record:
            raise self.get_error_from_code(
                self.READ_ERR_MISSING,
                line=self._current_line,
                field="features",
                why="raw featurization",
            )
        if kind == Featurization.LABEL_ONEHOT and "node_labels" not in record:
            raise self.get_error_from_code(
                self.READ_ERR_MISSING,
                line=self._current_line,
                field="node_labels",
                why="label_onehot featurization",
            )

    def parse(self, text: str) -> GraphCorpus:
        """Parse corpus text.

        :param text: Corpus contents
        :return: Featurized corpus
        """
        graphs: List[Graph] = []
        width = None
        self._current_line = 0
        for raw_line in text.split("\n"):
            self._current_line += 1
            if not raw_line.strip():
                continue
            record = self._parse_record(raw_line)
            self._check_requirements(record)
            graph = self._build_graph(record)
            if self._featurization.kind == Featurization.RAW:
                if width is None:
                    width = graph.feature_dim
                elif graph.feature_dim != width:
                    raise self.get_error_from_code(
                        self.READ_ERR_FEATURE_WIDTH,
                        line=self._current_line,
                        got=graph.feature_dim,
                        want=width,
                    )
            graphs.append(graph)

        if not graphs:
            raise self.get_error_from_code(self.READ_ERR_EMPTY)
        logger.debug("parsed %d graphs", len(graphs))
        return featurize(graphs, self._featurization)


def featurize(
    graphs: List[Graph], featurization: Featurization
) -> GraphCorpus:
    """Build node features according to a featurization.

    :param graphs: Parsed graphs
    :param featurization: Featurization to apply
    :return: Corpus with materialized features
    """
    kind = featurization.kind
    if kind == Featurization.RAW:
        return GraphCorpus(graphs, Featurization(kind))

    if kind == Featurization.LABEL_ONEHOT:
        label_count = featurization.label_count
        if label_count is None:
            label_count = 1 + max(max(g.node_labels) for g in graphs)
        built = []
        for graph in graphs:
            if max(graph.node_labels) >= label_count:
                raise DataError(
                    "node label {} exceeds label count {}".format(
                        max(graph.node_labels), label_count
                    )
                )
            features = np.zeros((graph.node_count, label_count))
            features[np.arange(graph.node_count), graph.node_labels] = 1.0
            built.append(graph.with_features(features))
        return GraphCorpus(
            built, Featurization(kind, label_count=label_count)
        )

    max_degree = featurization.max_degree
    built = []
    for graph in graphs:
        buckets = np.minimum(graph.degrees(), max_degree)
        features = np.zeros((graph.node_count, max_degree + 1))
        features[np.arange(graph.node_count), buckets] = 1.0
        built.append(graph.with_features(features))
    return GraphCorpus(built, Featurization(kind, max_degree=max_degree))


def loads_corpus(
    text: str, featurization: Union[Featurization, str, None] = None
) -> GraphCorpus:
    """Parse a corpus from text.

    :param text: Corpus contents
    :param featurization: Featurization or its kind name
    :return: The corpus
    """
    if featurization is None:
        featurization = Featurization()
    elif isinstance(featurization, str):
        featurization = Featurization(featurization)
    return CorpusReader(featurization).parse(text)


def load_corpus(
    path: str, featurization: Union[Featurization, str, None] = None
) -> GraphCorpus:
    """Load a corpus file.

    :param path: Path to the corpus
    :param featurization: Featurization or its kind name
    :return: The corpus
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as ex:
        raise DataError(
            "cannot read corpus {}: {}".format(path, ex.strerror),
            exception=ex,
        )
    corpus = loads_corpus(text, featurization)
    logger.info(
        "loaded %d graphs from %s (d=%d, classes=%d)",
        len(corpus),
        path,
        corpus.feature_dim,
        corpus.class_count,
    )
    return corpus


def graph_record(graph: Graph) -> Dict[str, Any]:
    """Get the corpus record of a graph."""
    record: Dict[str, Any] = {
        "n": graph.node_count,
        "edges": [[i, j] for i, j in graph.edges],
    }
    if graph.node_labels is not None:
        record["node_labels"] = list(graph.node_labels)
    record["features"] = graph.features.tolist()
    if graph.label is not None:
        record["label"] = graph.label
    return record


def dumps_corpus(corpus: GraphCorpus) -> str:
    """Serialize a corpus.

    Features are always materialized, so the result reparses under the raw
    featurization to an equal corpus.

    :param corpus: The corpus
    :return: Corpus text
    """
    return "".join(
        json.dumps(graph_record(graph), separators=(",", ":")) + "\n"
        for graph in corpus
    )


def dump_corpus(corpus: GraphCorpus, path: str):
    """Write a corpus file.

    :param corpus: The corpus
    :param path: Destination path
    """
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_corpus(corpus))
