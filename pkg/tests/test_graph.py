"""Graph, corpus and synthetic generator tests."""

import json

import networkx as nx
import numpy as np
import pytest
from numpy.testing import assert_array_equal

from smae.errors import DataError
from smae.graph import (
    Featurization,
    Graph,
    GraphCorpus,
    disjoint_union,
    neighbors,
)
from smae.graph.corpus import (
    dump_corpus,
    dumps_corpus,
    load_corpus,
    loads_corpus,
)
from smae.graph.synthetic import (
    MOTIF_SIZE,
    SyntheticSpec,
    generate_synthetic_corpus,
)


def _line(**record):
    return json.dumps(record)


def test_neighbors(path3, k4):
    """Neighbor lists are sorted and symmetric."""
    assert neighbors(path3, 1) == [0, 2]
    assert neighbors(Graph(1, []), 0) == []
    for i in range(4):
        assert neighbors(k4, i) == [j for j in range(4) if j != i]
    for i in range(3):
        for j in neighbors(path3, i):
            assert i in neighbors(path3, j)


def test_neighbors_out_of_range(path3):
    """Bad node index."""
    with pytest.raises(DataError):
        neighbors(path3, 3)


@pytest.mark.parametrize(
    "n,edges",
    [
        (0, []),
        (3, [(0, 3)]),
        (3, [(1, 1)]),
        (3, [(0, 1), (1, 0)]),
    ],
)
def test_graph_rejects(n, edges):
    """Empty graphs, bad endpoints, self loops and duplicates."""
    with pytest.raises(DataError):
        Graph(n, edges)


def test_edges_canonical():
    """Edges are stored with i < j, sorted."""
    graph = Graph(3, [(2, 1), (1, 0)])
    assert graph.edges == ((0, 1), (1, 2))
    assert_array_equal(graph.degrees(), [1, 2, 1])


def test_permute():
    """Relabeling moves features and edges together."""
    graph = Graph(3, [(0, 1)], np.array([[1.0], [2.0], [3.0]]))
    moved = graph.permute([2, 0, 1])
    assert moved.edges == ((0, 2),)
    assert_array_equal(moved.features[:, 0], [2.0, 3.0, 1.0])


def test_disjoint_union(path3):
    """Node indices of later graphs are shifted."""
    union = disjoint_union(path3, path3)
    assert union.node_count == 6
    assert union.edges == ((0, 1), (1, 2), (3, 4), (4, 5))


def test_corpus_rejects_mixed_widths():
    """Graphs must share a feature width."""
    with pytest.raises(DataError):
        GraphCorpus(
            [
                Graph(1, [], np.zeros((1, 2))),
                Graph(1, [], np.zeros((1, 3))),
            ]
        )


def test_corpus_rejects_partial_labels():
    """Either every graph is labelled or none is."""
    with pytest.raises(DataError):
        GraphCorpus([Graph(1, [], label=0), Graph(1, [])])


def test_load_label_onehot():
    """Node labels become one-hot rows."""
    text = _line(n=3, edges=[[0, 1], [1, 2]], node_labels=[0, 1, 0])
    corpus = loads_corpus(text, "label_onehot")
    assert corpus.feature_dim == 2
    assert_array_equal(corpus[0].features, [[1, 0], [0, 1], [1, 0]])


def test_load_degree_onehot():
    """Degree buckets, clamped at the maximum degree."""
    text = _line(n=3, edges=[[0, 1], [1, 2]])
    corpus = loads_corpus(text, Featurization("degree_onehot", max_degree=2))
    assert_array_equal(
        corpus[0].features, [[0, 1, 0], [0, 0, 1], [0, 1, 0]]
    )

    star = _line(n=6, edges=[[0, k] for k in range(1, 6)])
    corpus = loads_corpus(star, Featurization("degree_onehot", max_degree=3))
    assert corpus[0].features[0, 3] == 1.0
    assert_array_equal(corpus[0].features.sum(axis=1), np.ones(6))


def test_load_preserves_order_and_labels():
    """Input order and graph labels survive loading."""
    text = "\n".join(
        [
            _line(n=2, edges=[[0, 1]], label=1),
            "",
            _line(n=1, edges=[], label=0),
        ]
    )
    corpus = loads_corpus(text, "degree_onehot")
    assert len(corpus) == 2
    assert corpus.class_count == 2
    assert_array_equal(corpus.labels, [1, 0])


@pytest.mark.parametrize(
    "text,code",
    [
        ("{not json", 200),
        (_line(n="3", features=[[1]]), 201),
        (_line(edges=[]), 202),
        (_line(n=2, edges=[[0, 2]], features=[[1], [1]]), 203),
        (
            _line(n=1, features=[[1]])
            + "\n"
            + _line(n=1, features=[[1, 2]]),
            204,
        ),
        (_line(n=1, colour="red", features=[[1]]), 205),
        ("\n\n", 206),
    ],
)
def test_load_errors(text, code):
    """Malformed records report their error code."""
    with pytest.raises(DataError) as info:
        loads_corpus(text, "raw")
    assert info.value.code == code


def test_load_error_reports_line():
    """Errors name the offending line."""
    text = _line(n=1, features=[[0.5]]) + "\n" + "[1, 2]"
    with pytest.raises(DataError) as info:
        loads_corpus(text, "raw")
    assert "line 2" in str(info.value)


def test_label_onehot_needs_labels():
    """label_onehot requires node labels on every graph."""
    with pytest.raises(DataError):
        loads_corpus(_line(n=2, edges=[[0, 1]]), "label_onehot")


def test_unknown_featurization():
    """Unknown featurization kind."""
    with pytest.raises(DataError):
        loads_corpus(_line(n=1), "spectral")


def test_round_trip(tmp_path):
    """Dumped corpora reparse under raw featurization to equal corpora."""
    text = "\n".join(
        [
            _line(n=3, edges=[[0, 1], [1, 2]], node_labels=[0, 2, 1], label=0),
            _line(n=4, edges=[[0, 3]], node_labels=[1, 1, 0, 0], label=1),
        ]
    )
    corpus = loads_corpus(text, "label_onehot")
    path = str(tmp_path / "corpus.jsonl")
    dump_corpus(corpus, path)
    again = load_corpus(path, "raw")
    assert again == corpus
    assert dumps_corpus(again) == dumps_corpus(corpus)


def test_load_missing_file(tmp_path):
    """Unreadable corpus files are data errors."""
    with pytest.raises(DataError):
        load_corpus(str(tmp_path / "missing.jsonl"))


def _to_networkx(graph):
    nx_graph = nx.Graph()
    nx_graph.add_nodes_from(range(graph.node_count))
    nx_graph.add_edges_from(graph.edges)
    return nx_graph


def test_synthetic_deterministic():
    """Same seed, same corpus."""
    spec = SyntheticSpec(10, 12, "cycle")
    first = generate_synthetic_corpus(spec, 7)
    second = generate_synthetic_corpus(spec, 7)
    assert dumps_corpus(first) == dumps_corpus(second)
    assert len(first) == 20
    assert sorted(first.labels.tolist()) == [0] * 10 + [1] * 10


def test_synthetic_connected_with_motif():
    """Graphs are connected and carry the motif of their class."""
    corpus = generate_synthetic_corpus(SyntheticSpec(5, 8, "cycle"), 11)
    cycle = nx.cycle_graph(MOTIF_SIZE)
    clique = nx.complete_graph(MOTIF_SIZE)
    for graph in corpus:
        nx_graph = _to_networkx(graph)
        assert nx.is_connected(nx_graph)
        # a tree backbone holds no 5-clique, so the clique decides the class
        matcher = nx.algorithms.isomorphism.GraphMatcher(nx_graph, clique)
        has_clique = matcher.subgraph_is_isomorphic()
        assert has_clique == (graph.label == 1)
        if graph.label == 0:
            matcher = nx.algorithms.isomorphism.GraphMatcher(nx_graph, cycle)
            assert matcher.subgraph_is_monomorphic()


@pytest.mark.parametrize(
    "args", [(0, 12, "cycle"), (3, 5, "cycle"), (3, 12, "star")]
)
def test_synthetic_spec_errors(args):
    """Invalid sizes and motifs."""
    with pytest.raises(DataError):
        SyntheticSpec(*args)
