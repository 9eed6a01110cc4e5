"""Embedding, linear probe and retrieval tests."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from smae.errors import DataError
from smae.eval import EmbeddingMatrix, embed_corpus, embed_graph, readout
from smae.eval.probe import (
    LogisticRegression,
    Probe,
    Standardizer,
    fit_fold,
    linear_probe_cv,
    stratified_folds,
)
from smae.eval.retrieval import cosine_similarities, nearest_neighbors
from smae.gmae import init_checkpoint
from smae.graph import GraphCorpus, disjoint_union
from smae.seeding import stream
from smae.tensor import Tensor


def _clusters(rng, per_class=20, classes=2, spread=0.3):
    centers = np.eye(classes, 4) * 5.0
    rows = np.concatenate(
        [
            centers[c] + spread * rng.standard_normal((per_class, 4))
            for c in range(classes)
        ]
    )
    labels = np.repeat(np.arange(classes), per_class)
    return EmbeddingMatrix(rows, labels)


@pytest.mark.parametrize(
    "rows,labels,code",
    [
        (np.zeros((0, 3)), None, EmbeddingMatrix.EMB_ERR_SHAPE),
        (np.zeros(3), None, EmbeddingMatrix.EMB_ERR_SHAPE),
        (np.array([[1.0, np.inf]]), None, EmbeddingMatrix.EMB_ERR_NONFINITE),
        (np.zeros((2, 2)), [0], EmbeddingMatrix.EMB_ERR_LABELS),
    ],
)
def test_embedding_matrix_errors(rows, labels, code):
    """Shape, finiteness and label count."""
    with pytest.raises(DataError) as info:
        EmbeddingMatrix(rows, labels)
    assert info.value.code == code


def test_embedding_records():
    """Records parse back; partial labels are dropped."""
    emb = EmbeddingMatrix(np.array([[1.0, 2.0], [3.0, 4.5]]), [1, 0])
    assert emb.records()[1] == {"i": 1, "v": [3.0, 4.5], "y": 0}
    text = "\n".join(
        '{{"i": {}, "v": {}, "y": {}}}'.format(r["i"], r["v"], r["y"])
        for r in emb.records()
    )
    again = EmbeddingMatrix.from_records(text)
    assert_array_equal(again.rows, emb.rows)
    assert_array_equal(again.labels, [1, 0])

    unlabeled = EmbeddingMatrix.from_records(
        '{"i": 0, "v": [1.0], "y": 1}\n{"i": 1, "v": [2.0]}\n'
    )
    assert unlabeled.labels is None


@pytest.mark.parametrize(
    "text,code",
    [
        ("", EmbeddingMatrix.EMB_ERR_SHAPE),
        ("{oops", EmbeddingMatrix.EMB_ERR_RECORD),
        ('{"i": 0}', EmbeddingMatrix.EMB_ERR_RECORD),
        ('{"i": 1, "v": [1.0]}', EmbeddingMatrix.EMB_ERR_ORDER),
        (
            '{"i": 0, "v": [1.0]}\n{"i": 1, "v": [1.0, 2.0]}',
            EmbeddingMatrix.EMB_ERR_RECORD,
        ),
    ],
)
def test_embedding_record_errors(text, code):
    """Malformed, out-of-order and ragged records."""
    with pytest.raises(DataError) as info:
        EmbeddingMatrix.from_records(text)
    assert info.value.code == code


def test_readout():
    """Mean, max and sum pooling."""
    h = Tensor(np.array([[1.0, -2.0], [3.0, 4.0]]))
    assert_array_equal(readout(h, "mean"), [2.0, 1.0])
    assert_array_equal(readout(h, "max"), [3.0, 4.0])
    assert_array_equal(readout(h, "sum"), [4.0, 2.0])


def test_readout_disjoint_copy(tiny_config, small_corpus):
    """Two disjoint copies double the sum and keep the mean."""
    graph = small_corpus[0]
    doubled = disjoint_union(graph, graph)
    dim = small_corpus.feature_dim
    ckpt = init_checkpoint(tiny_config(pooling="sum"), dim)
    assert_allclose(
        embed_graph(ckpt, doubled), 2 * embed_graph(ckpt, graph), rtol=1e-10
    )
    ckpt = init_checkpoint(tiny_config(pooling="mean"), dim)
    assert_allclose(
        embed_graph(ckpt, doubled), embed_graph(ckpt, graph), rtol=1e-10
    )


def test_embed_corpus_permutation_invariant(tiny_config, small_corpus, rng):
    """Relabeling nodes leaves graph embeddings unchanged."""
    ckpt = init_checkpoint(tiny_config(variant="L"), small_corpus.feature_dim)
    moved = GraphCorpus(
        [g.permute(rng.permutation(g.node_count)) for g in small_corpus],
        small_corpus.featurization,
        small_corpus.class_count,
    )
    for modulate in (False, True):
        base = embed_corpus(ckpt, small_corpus, modulate)
        again = embed_corpus(ckpt, moved, modulate, threads=2)
        assert_allclose(again.rows, base.rows, rtol=1e-9, atol=1e-12)
        assert_array_equal(again.labels, small_corpus.labels)


def test_embed_corpus_modulation(tiny_config, small_corpus):
    """Modulation changes variant L embeddings only."""
    ckpt = init_checkpoint(tiny_config(variant="L"), small_corpus.feature_dim)
    plain = embed_corpus(ckpt, small_corpus, modulate=False).rows
    scaled = embed_corpus(ckpt, small_corpus, modulate=True).rows
    assert not np.allclose(plain, scaled)
    ckpt = init_checkpoint(tiny_config(), small_corpus.feature_dim)
    assert_array_equal(
        embed_corpus(ckpt, small_corpus, modulate=True).rows,
        embed_corpus(ckpt, small_corpus).rows,
    )


def test_stratified_folds(rng):
    """Folds partition the items with balanced classes."""
    labels = np.array([0] * 12 + [1] * 8 + [2] * 5)
    folds = stratified_folds(labels, 4, rng)
    joined = np.sort(np.concatenate(folds))
    assert_array_equal(joined, np.arange(labels.size))
    for label, size in ((0, 12), (1, 8)):
        counts = [int(np.sum(labels[fold] == label)) for fold in folds]
        assert max(counts) - min(counts) <= 1
        assert sum(counts) == size
    sizes = [fold.size for fold in folds]
    assert max(sizes) - min(sizes) <= 1


def test_standardizer():
    """Statistics come from the fitted rows; flat columns pass through."""
    train = np.array([[1.0, 5.0], [3.0, 5.0]])
    scale = Standardizer(train)
    assert_allclose(scale(train), [[-1.0, 0.0], [1.0, 0.0]])
    assert_allclose(scale(np.array([[5.0, 7.0]])), [[3.0, 2.0]])


def test_fold_fit_ignores_held_rows(rng):
    """Outliers and reordering inside the test fold change nothing."""
    emb = _clusters(rng)
    held = np.array([0, 5, 21, 30])
    train = np.setdiff1d(np.arange(len(emb)), held)
    scale, model = fit_fold(emb.rows, emb.labels, 2, held, stream(0, "cv"))
    assert_allclose(scale.mean, emb.rows[train].mean(axis=0))
    assert_allclose(scale.std, emb.rows[train].std(axis=0))

    moved = emb.rows.copy()
    moved[held[0]] = 1e6
    moved[held[1:]] = moved[held[1:]][::-1]
    again, refit = fit_fold(moved, emb.labels, 2, held, stream(0, "cv"))
    assert_array_equal(again.mean, scale.mean)
    assert_array_equal(again.std, scale.std)
    assert_array_equal(refit.weight, model.weight)
    assert_array_equal(refit.bias, model.bias)


def test_logistic_regression_separable(rng):
    """Well separated classes are fit exactly."""
    emb = _clusters(rng, classes=3)
    model = LogisticRegression(3, 1e-3).fit(emb.rows, emb.labels)
    assert model.accuracy(emb.rows, emb.labels) == 1.0


def test_probe_separable(rng):
    """Cross-validated accuracy on separable data is perfect."""
    report = linear_probe_cv(_clusters(rng), folds=5, repeats=2, seed=1)
    assert report.mean_accuracy == 1.0
    assert report.std_accuracy == 0.0
    assert len(report.fold_accuracies) == 2
    assert all(len(r) == 5 for r in report.fold_accuracies)


def test_probe_deterministic(rng):
    """Same seed, same report, whatever the worker count."""
    emb = EmbeddingMatrix(rng.standard_normal((60, 3)), rng.integers(0, 2, 60))
    first = linear_probe_cv(emb, folds=50, repeats=1, seed=3).to_dict()
    assert first == linear_probe_cv(emb, folds=50, repeats=1, seed=3).to_dict()
    second = linear_probe_cv(emb, folds=5, repeats=3, seed=3).to_dict()
    threaded = linear_probe_cv(emb, folds=5, repeats=3, seed=3, threads=3)
    assert second == threaded.to_dict()
    assert second["seed"] == 3
    assert second["settings"]["folds"] == 5


def test_probe_shuffled_labels(rng):
    """Labels unrelated to the rows leave the probe near chance."""
    emb = _clusters(rng, per_class=100)
    shuffled = EmbeddingMatrix(emb.rows, rng.permutation(emb.labels))
    report = linear_probe_cv(shuffled, folds=5, repeats=2, seed=0)
    assert report.mean_accuracy <= 0.5 + 0.15


def test_probe_errors():
    """Labels, class sizes and fold counts."""
    rows = np.arange(12.0).reshape(6, 2)
    with pytest.raises(DataError) as info:
        linear_probe_cv(EmbeddingMatrix(rows), folds=2)
    assert info.value.code == Probe.PROBE_ERR_LABELS
    with pytest.raises(DataError) as info:
        linear_probe_cv(EmbeddingMatrix(rows, [0, 0, 0, 0, 0, 1]), folds=2)
    assert info.value.code == Probe.PROBE_ERR_CLASS_SIZE
    with pytest.raises(DataError) as info:
        linear_probe_cv(EmbeddingMatrix(rows, [0, 0, 0, 1, 1, 1]), folds=10)
    assert info.value.code == Probe.PROBE_ERR_TOO_FEW


def test_retrieval_duplicate_first():
    """An exact duplicate of the query ranks first."""
    rows = np.array([[1.0, 0.0], [0.6, 0.8], [2.0, 0.0], [0.0, 1.0]])
    neighbors = nearest_neighbors(EmbeddingMatrix(rows), 0, 3)
    assert neighbors[0] == (2, pytest.approx(1.0))
    assert [index for index, _ in neighbors] == [2, 1, 3]


def test_retrieval_ties_by_index():
    """Orthogonal rows tie at zero and come back in index order."""
    emb = EmbeddingMatrix(np.eye(4))
    assert nearest_neighbors(emb, 2, 3) == [(0, 0.0), (1, 0.0), (3, 0.0)]


def test_retrieval_zero_rows(caplog):
    """Zero-norm rows have similarity zero."""
    emb = EmbeddingMatrix(np.array([[0.0, 0.0], [1.0, 1.0]]))
    assert_array_equal(cosine_similarities(emb, 1), [0.0, 1.0])
    assert_array_equal(cosine_similarities(emb, 0), [0.0, 0.0])
    assert "zero norm" in caplog.text


@pytest.mark.parametrize("query,k", [(-1, 1), (4, 1), (0, 0), (0, 4)])
def test_retrieval_errors(query, k):
    """Query index and k ranges."""
    with pytest.raises(DataError):
        nearest_neighbors(EmbeddingMatrix(np.eye(4)), query, k)
