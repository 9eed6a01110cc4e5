"""Graphs and graph corpora."""

from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from smae.errors import (
    DataError,
    ErrorDescriptor,
    ErrorGeneratorMixin,
)

EdgeType = Tuple[int, int]


class GraphErrorDescriptor(ErrorDescriptor):
    """Graph error descriptor."""

    def __init__(self, *args):
        """Initialize.

        :param args: Any other ErrorDescriptor arguments
        """
        super().__init__(*args, exception_class=DataError)


class Graph(ErrorGeneratorMixin):
    """Undirected simple graph with node features.

    Graphs are immutable once built; derived structures (neighbor lists,
    propagation operators) are computed lazily and cached.
    """

    GRAPH_ERR_EMPTY = 100
    GRAPH_ERR_ENDPOINT = 101
    GRAPH_ERR_SELF_LOOP = 102
    GRAPH_ERR_DUPLICATE_EDGE = 103
    GRAPH_ERR_FEATURE_ROWS = 104
    GRAPH_ERR_NODE_INDEX = 105
    GRAPH_ERR_NODE_LABELS = 106
    _ERRORS = {
        GRAPH_ERR_EMPTY: GraphErrorDescriptor(
            GRAPH_ERR_EMPTY,
            "Empty graph",
            "graph must have at least one node, got n={n}",
        ),
        GRAPH_ERR_ENDPOINT: GraphErrorDescriptor(
            GRAPH_ERR_ENDPOINT,
            "Endpoint out of range",
            "edge ({i}, {j}) has an endpoint outside [0, {n})",
        ),
        GRAPH_ERR_SELF_LOOP: GraphErrorDescriptor(
            GRAPH_ERR_SELF_LOOP,
            "Self loop",
            "self-loop on node {i} is not allowed",
        ),
        GRAPH_ERR_DUPLICATE_EDGE: GraphErrorDescriptor(
            GRAPH_ERR_DUPLICATE_EDGE,
            "Duplicate edge",
            "duplicate undirected edge ({i}, {j})",
        ),
        GRAPH_ERR_FEATURE_ROWS: GraphErrorDescriptor(
            GRAPH_ERR_FEATURE_ROWS,
            "Feature row count mismatch",
            "feature matrix has {rows} rows, expected {n}",
        ),
        GRAPH_ERR_NODE_INDEX: GraphErrorDescriptor(
            GRAPH_ERR_NODE_INDEX,
            "Node index out of range",
            "node index {i} outside [0, {n})",
        ),
        GRAPH_ERR_NODE_LABELS: GraphErrorDescriptor(
            GRAPH_ERR_NODE_LABELS,
            "Node label count mismatch",
            "{count} node labels given for {n} nodes",
        ),
    }

    __slots__ = (
        "_n",
        "_edges",
        "_features",
        "_label",
        "_node_labels",
        "_neighbors",
        "_derived",
    )

    def __init__(
        self,
        node_count: int,
        edges: Iterable[Sequence[int]],
        features: Optional[np.ndarray] = None,
        label: Optional[int] = None,
        node_labels: Optional[Sequence[int]] = None,
    ):
        """Initialize.

        :param node_count: Number of nodes
        :param edges: Undirected edges as index pairs, any orientation
        :param features: Node feature matrix (n x d); defaults to an n x 0 \
        matrix
        :param label: Optional graph class
        :param node_labels: Optional per-node integer labels
        """
        if node_count < 1:
            raise self.get_error_from_code(self.GRAPH_ERR_EMPTY, n=node_count)
        self._n = int(node_count)

        seen = set()
        canonical: List[EdgeType] = []
        for edge in edges:
            i, j = int(edge[0]), int(edge[1])
            if not (0 <= i < self._n and 0 <= j < self._n):
                raise self.get_error_from_code(
                    self.GRAPH_ERR_ENDPOINT, i=i, j=j, n=self._n
                )
            if i == j:
                raise self.get_error_from_code(self.GRAPH_ERR_SELF_LOOP, i=i)
            pair = (min(i, j), max(i, j))
            if pair in seen:
                raise self.get_error_from_code(
                    self.GRAPH_ERR_DUPLICATE_EDGE, i=pair[0], j=pair[1]
                )
            seen.add(pair)
            canonical.append(pair)
        self._edges = tuple(sorted(canonical))

        if features is None:
            features = np.zeros((self._n, 0))
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] != self._n:
            raise self.get_error_from_code(
                self.GRAPH_ERR_FEATURE_ROWS,
                rows=features.shape[0] if features.ndim else 0,
                n=self._n,
            )
        features.setflags(write=False)
        self._features = features
        self._label = None if label is None else int(label)
        if node_labels is not None:
            if len(node_labels) != self._n:
                raise self.get_error_from_code(
                    self.GRAPH_ERR_NODE_LABELS,
                    count=len(node_labels),
                    n=self._n,
                )
            node_labels = tuple(int(x) for x in node_labels)
        self._node_labels = node_labels
        self._neighbors: Optional[Tuple[Tuple[int, ...], ...]] = None
        self._derived: Dict[str, Any] = {}

    @property
    def node_count(self) -> int:
        """Get number of nodes."""
        return self._n

    @property
    def edges(self) -> Tuple[EdgeType, ...]:
        """Get edges, as sorted (i, j) pairs with i < j."""
        return self._edges

    @property
    def features(self) -> np.ndarray:
        """Get node feature matrix (read-only)."""
        return self._features

    @property
    def feature_dim(self) -> int:
        """Get feature width."""
        return self._features.shape[1]

    @property
    def label(self) -> Optional[int]:
        """Get graph label."""
        return self._label

    @property
    def node_labels(self) -> Optional[Tuple[int, ...]]:
        """Get node labels."""
        return self._node_labels

    @property
    def derived(self) -> Dict[str, Any]:
        """Get cache of derived structures keyed by name."""
        return self._derived

    def with_features(self, features: np.ndarray) -> "Graph":
        """Get a copy of this graph carrying other features.

        :param features: New feature matrix
        :return: New graph
        """
        return Graph(
            self._n,
            self._edges,
            features,
            label=self._label,
            node_labels=self._node_labels,
        )

    def adjacency(self) -> Tuple[Tuple[int, ...], ...]:
        """Get sorted neighbor lists for all nodes."""
        if self._neighbors is None:
            lists: List[List[int]] = [[] for _ in range(self._n)]
            for i, j in self._edges:
                lists[i].append(j)
                lists[j].append(i)
            self._neighbors = tuple(tuple(sorted(lst)) for lst in lists)
        return self._neighbors

    def neighbors(self, i: int) -> List[int]:
        """Get neighbors of a node.

        :param i: Node index
        :return: Neighbor indices in ascending order
        """
        if not 0 <= i < self._n:
            raise self.get_error_from_code(
                self.GRAPH_ERR_NODE_INDEX, i=i, n=self._n
            )
        return list(self.adjacency()[i])

    def degrees(self) -> np.ndarray:
        """Get node degrees."""
        return np.array([len(nbrs) for nbrs in self.adjacency()], dtype=int)

    def permute(self, perm: Sequence[int]) -> "Graph":
        """Relabel nodes.

        Node ``i`` of this graph becomes node ``perm[i]`` of the result.

        :param perm: A permutation of range(n)
        :return: Relabeled graph
        """
        perm = np.asarray(perm, dtype=int)
        if sorted(perm.tolist()) != list(range(self._n)):
            raise ValueError("not a permutation of the node indices")
        features = np.empty_like(self._features)
        features[perm] = self._features
        node_labels = None
        if self._node_labels is not None:
            relabeled = [0] * self._n
            for old, new in enumerate(perm):
                relabeled[new] = self._node_labels[old]
            node_labels = relabeled
        return Graph(
            self._n,
            [(perm[i], perm[j]) for i, j in self._edges],
            features,
            label=self._label,
            node_labels=node_labels,
        )

    def __eq__(self, other: Any) -> bool:
        """Compare structure, features and labels."""
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self._n == other._n
            and self._edges == other._edges
            and self._label == other._label
            and self._node_labels == other._node_labels
            and self._features.shape == other._features.shape
            and np.array_equal(self._features, other._features)
        )

    __hash__ = object.__hash__

    def __repr__(self):
        """Get representation."""
        return "Graph(n={}, edges={}, d={}, label={})".format(
            self._n, len(self._edges), self.feature_dim, self._label
        )


def neighbors(graph: Graph, i: int) -> List[int]:
    """Get neighbors of a node.

    :param graph: The graph
    :param i: Node index
    :return: Sorted neighbor list
    """
    return graph.neighbors(i)


def disjoint_union(*graphs: Graph) -> Graph:
    """Place graphs side by side, renumbering nodes consecutively.

    :param graphs: Graphs with identical feature widths
    :return: Union graph; carries the label of the first graph
    """
    offset = 0
    edges: List[EdgeType] = []
    features = []
    for graph in graphs:
        edges.extend((i + offset, j + offset) for i, j in graph.edges)
        features.append(graph.features)
        offset += graph.node_count
    return Graph(
        offset,
        edges,
        np.vstack(features),
        label=graphs[0].label if graphs else None,
    )


class Featurization:
    """Record of how node features were built."""

    RAW = "raw"
    LABEL_ONEHOT = "label_onehot"
    DEGREE_ONEHOT = "degree_onehot"
    KINDS = (RAW, LABEL_ONEHOT, DEGREE_ONEHOT)
    DEFAULT_MAX_DEGREE = 64

    __slots__ = ("kind", "max_degree", "label_count")

    def __init__(
        self,
        kind: str = RAW,
        max_degree: int = DEFAULT_MAX_DEGREE,
        label_count: Optional[int] = None,
    ):
        """Initialize.

        :param kind: One of raw, label_onehot, degree_onehot
        :param max_degree: Degree clamp for degree_onehot
        :param label_count: Number of node label values seen \
        (label_onehot only, filled in by the loader)
        """
        if kind not in self.KINDS:
            raise DataError("unknown featurization: {}".format(kind))
        if max_degree < 1:
            raise DataError("max_degree must be >= 1")
        self.kind = kind
        self.max_degree = int(max_degree)
        self.label_count = label_count

    def to_dict(self) -> Dict[str, Any]:
        """Get dictionary representation."""
        ret: Dict[str, Any] = {"kind": self.kind}
        if self.kind == self.DEGREE_ONEHOT:
            ret["max_degree"] = self.max_degree
        if self.label_count is not None:
            ret["label_count"] = self.label_count
        return ret

    def __eq__(self, other: Any) -> bool:
        """Compare."""
        if not isinstance(other, Featurization):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self):
        """Get representation."""
        return "Featurization({})".format(self.to_dict())


class GraphCorpus(ErrorGeneratorMixin):
    """Ordered collection of graphs sharing a feature width."""

    CORPUS_ERR_FEATURE_DIM = 120
    CORPUS_ERR_LABEL_RANGE = 121
    CORPUS_ERR_PARTIAL_LABELS = 122
    _ERRORS = {
        CORPUS_ERR_FEATURE_DIM: GraphErrorDescriptor(
            CORPUS_ERR_FEATURE_DIM,
            "Inconsistent feature width",
            "graph {index} has feature width {got}, corpus width is {want}",
        ),
        CORPUS_ERR_LABEL_RANGE: GraphErrorDescriptor(
            CORPUS_ERR_LABEL_RANGE,
            "Label out of range",
            "graph {index} label {label} outside [0, {count})",
        ),
        CORPUS_ERR_PARTIAL_LABELS: GraphErrorDescriptor(
            CORPUS_ERR_PARTIAL_LABELS,
            "Partially labeled corpus",
            "graph {index} is unlabeled but others carry labels",
        ),
    }

    __slots__ = ("_graphs", "_feature_dim", "_class_count", "_featurization")

    def __init__(
        self,
        graphs: Sequence[Graph],
        featurization: Optional[Featurization] = None,
        class_count: Optional[int] = None,
    ):
        """Initialize.

        :param graphs: The graphs, order preserved
        :param featurization: How features were built
        :param class_count: Number of graph classes; inferred when omitted
        """
        self._graphs = tuple(graphs)
        self._featurization = featurization or Featurization()
        self._feature_dim = (
            self._graphs[0].feature_dim if self._graphs else 0
        )
        labels = []
        for index, graph in enumerate(self._graphs):
            if graph.feature_dim != self._feature_dim:
                raise self.get_error_from_code(
                    self.CORPUS_ERR_FEATURE_DIM,
                    index=index,
                    got=graph.feature_dim,
                    want=self._feature_dim,
                )
            labels.append(graph.label)
        labeled = [label for label in labels if label is not None]
        if labeled and len(labeled) != len(labels):
            raise self.get_error_from_code(
                self.CORPUS_ERR_PARTIAL_LABELS, index=labels.index(None)
            )
        if class_count is None:
            class_count = max(labeled) + 1 if labeled else 0
        for index, label in enumerate(labels):
            if label is not None and not 0 <= label < class_count:
                raise self.get_error_from_code(
                    self.CORPUS_ERR_LABEL_RANGE,
                    index=index,
                    label=label,
                    count=class_count,
                )
        self._class_count = int(class_count)

    @property
    def graphs(self) -> Tuple[Graph, ...]:
        """Get graphs."""
        return self._graphs

    @property
    def feature_dim(self) -> int:
        """Get feature width."""
        return self._feature_dim

    @property
    def class_count(self) -> int:
        """Get number of classes (0 when unlabeled)."""
        return self._class_count

    @property
    def featurization(self) -> Featurization:
        """Get featurization record."""
        return self._featurization

    @property
    def labels(self) -> Optional[np.ndarray]:
        """Get graph labels, or None for an unlabeled corpus."""
        if self._class_count == 0 or not self._graphs:
            return None
        return np.array([graph.label for graph in self._graphs], dtype=int)

    def __len__(self):
        """Get number of graphs."""
        return len(self._graphs)

    def __iter__(self):
        """Iterate over graphs."""
        return iter(self._graphs)

    def __getitem__(self, index: int) -> Graph:
        """Get graph by index."""
        return self._graphs[index]

    def __eq__(self, other: Any) -> bool:
        """Compare."""
        if not isinstance(other, GraphCorpus):
            return NotImplemented
        return (
            self._graphs == other._graphs
            and self._class_count == other._class_count
            and self._feature_dim == other._feature_dim
        )

    __hash__ = object.__hash__
