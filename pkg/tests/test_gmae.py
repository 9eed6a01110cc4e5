"""Masked autoencoder model and training tests."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from smae.config import ModelConfig
from smae.errors import ConfigError, DataError
from smae.eval import embed_corpus
from smae.eval.probe import linear_probe_cv
from smae.gmae import (
    ModelCheckpoint,
    decode,
    encode,
    init_checkpoint,
    node_features,
    pretrain_loss,
    remask,
    sce_loss,
)
from smae.gmae.train import THREADS_ENV, Trainer, pretrain, worker_count
from smae.graph import Graph, GraphCorpus
from smae.graph.synthetic import SyntheticSpec, generate_synthetic_corpus
from smae.masking import MaskPlan, apply_mask, mask_count
from smae.nn.gradcheck import grad_check
from smae.scoring import score_graph
from smae.seeding import stream
from smae.tensor import Tape, Tensor
from smae.tensor.ops import take_rows
from smae.verify import gin_oracle, random_graph


def _plan(masked, n):
    return MaskPlan(masked, np.zeros(n), (), 0, 0)


def test_parameter_names(tiny_config):
    """Tensors present for each variant."""
    ckpt = init_checkpoint(tiny_config(), 3)
    names = set(ckpt.store.param_names())
    assert {
        "encoder.0.eps",
        "encoder.0.mlp.lin1.weight",
        "encoder.0.prelu",
        "enc_mask_token",
        "encoder_to_decoder.weight",
        "dec_mask_token",
        "decoder.0.mlp.lin2.weight",
    } <= names
    assert "decoder.0.prelu" not in names
    assert not any(name.startswith("scorer") for name in names)

    learnable = init_checkpoint(tiny_config(variant="L"), 3)
    assert "scorer.gnn.weight" in learnable.store
    assert "scorer.mlp.lin2.weight" in learnable.store
    assert learnable.scorer is not None

    gcn = init_checkpoint(
        tiny_config(
            encoder={"layer_type": "gcn", "num_layers": 2, "hidden": 4}
        ),
        3,
    )
    assert "encoder.1.weight" in gcn.store
    assert "encoder.1.prelu" not in gcn.store


def test_init_deterministic(tiny_config):
    """Initialization depends on the seed only."""
    first = init_checkpoint(tiny_config(), 3).to_bytes()
    assert first == init_checkpoint(tiny_config(), 3).to_bytes()
    assert first != init_checkpoint(tiny_config(seed=6), 3).to_bytes()


def test_encode_zero_weights_constant(tiny_config, rng):
    """Zero weights leave only shift terms, equal on every node."""
    ckpt = init_checkpoint(tiny_config(), 2)
    for _, tensor in ckpt.store.params():
        tensor.data[...] = 0.0
    graph = random_graph(rng, 5, 0.5, True, feature_dim=2)
    h = encode(ckpt, graph, node_features(ckpt, graph))
    assert_allclose(h.data, np.broadcast_to(h.data[0], h.shape))
    out = decode(ckpt, graph, h)
    assert_allclose(out.data, np.broadcast_to(out.data[0], out.shape))


def test_encode_permutation_equivariant(tiny_config, rng):
    """Permuting the graph permutes the embeddings."""
    ckpt = init_checkpoint(tiny_config(), 3)
    graph = random_graph(rng, 7, 0.4, True, feature_dim=3)
    perm = rng.permutation(7)
    moved = graph.permute(perm)
    h = encode(ckpt, graph, node_features(ckpt, graph)).data
    h_moved = encode(ckpt, moved, node_features(ckpt, moved)).data
    assert_allclose(h_moved[perm], h, rtol=1e-10, atol=1e-12)
    out = decode(ckpt, graph, Tensor(h)).data
    out_moved = decode(ckpt, moved, Tensor(h_moved)).data
    assert_allclose(out_moved[perm], out, rtol=1e-10, atol=1e-12)


def test_encode_matches_oracle(tiny_config, path3):
    """One GIN layer plus PReLU in eval mode."""
    ckpt = init_checkpoint(tiny_config(), 2)
    store = ckpt.store
    x = np.array([[1.0, 0.5], [0.0, 2.0], [-1.0, 1.0]])
    graph = path3.with_features(x)
    want = gin_oracle(
        graph,
        x,
        store["encoder.0.eps"].item(),
        store["encoder.0.mlp.lin1.weight"].data,
        store["encoder.0.mlp.lin1.bias"].data,
        store["encoder.0.mlp.bn.gamma"].data,
        store["encoder.0.mlp.bn.beta"].data,
        store["encoder.0.mlp.lin2.weight"].data,
        store["encoder.0.mlp.lin2.bias"].data,
        running=[np.zeros(8), np.ones(8)],
    )
    want = np.where(want > 0, want, 0.25 * want)
    h = encode(ckpt, graph, Tensor(x))
    assert_allclose(h.data, want, rtol=1e-10, atol=1e-12)


def test_feature_width_checked(tiny_config, path3):
    """Inputs must match the model width."""
    ckpt = init_checkpoint(tiny_config(), 2)
    with pytest.raises(DataError):
        node_features(ckpt, path3.with_features(np.zeros((3, 3))))
    with pytest.raises(DataError):
        init_checkpoint(tiny_config(), 0)


def test_remask(rng):
    """Token rows, identity on empty plans, idempotent."""
    h = Tensor(rng.standard_normal((4, 3)))
    token = Tensor(np.zeros(3))
    assert_array_equal(remask(h, _plan((), 4), token).data, h.data)
    once = remask(h, _plan((1, 2), 4), token)
    assert_array_equal(once.data[1:3], np.zeros((2, 3)))
    twice = remask(once, _plan((1, 2), 4), token)
    assert_array_equal(twice.data, once.data)


def test_sce_loss(caplog):
    """Parallel, antiparallel and zero-target rows; empty sets fail."""
    target = np.array([[1.0, 2.0], [3.0, -1.0]])
    loss = sce_loss(Tensor(2 * target), target, 2.0)
    assert loss.item() == pytest.approx(0.0)
    assert sce_loss(Tensor(-target), target, 2.0).item() == pytest.approx(4.0)
    zero = np.array([[0.0, 0.0]])
    loss = sce_loss(Tensor(np.ones((1, 2))), zero, 2.0)
    assert loss.item() == pytest.approx(1.0)
    assert "zero" in caplog.text
    with pytest.raises(DataError):
        sce_loss(Tensor(np.zeros((0, 2))), np.zeros((0, 2)), 2.0)


def test_loss_ignores_unmasked_targets(tiny_config, rng):
    """Changing an unmasked node's target leaves the loss unchanged."""
    ckpt = init_checkpoint(tiny_config(), 3)
    graph = random_graph(rng, 6, 0.5, True, feature_dim=3)
    scores = score_graph(graph, "pagerank")
    loss, plan = pretrain_loss(
        ckpt, graph, 1, stream(0, "mask", 0, 1), scores, train=False
    )
    unmasked = [i for i in range(6) if i not in plan.masked]
    features = graph.features.copy()
    # rebuild the loss against altered targets
    x = node_features(ckpt, graph)
    h = encode(ckpt, graph, apply_mask(x, plan, ckpt.store["enc_mask_token"]))
    h = remask(h, plan, ckpt.store["dec_mask_token"])
    recon = decode(ckpt, graph, h)
    features[unmasked[0]] += 10.0
    altered = sce_loss(
        take_rows(recon, plan.masked),
        features[list(plan.masked)],
        ckpt.config.sce_gamma,
    )
    assert altered.item() == loss.item()
    assert len(plan.masked) == mask_count(ckpt.config.masking.p, 6)


@pytest.mark.parametrize("variant", ["P", "L"])
@pytest.mark.parametrize("layer", ["gin", "gcn"])
def test_loss_gradients(tiny_config, variant, layer):
    """End-to-end loss against central differences."""
    config = tiny_config(
        variant=variant,
        encoder={"layer_type": layer, "num_layers": 2, "hidden": 4},
        decoder={"layer_type": layer, "num_layers": 1},
    )
    rng = np.random.default_rng(17)
    graph = random_graph(rng, 6, 0.4, True, feature_dim=3)
    ckpt = init_checkpoint(config, 3)
    scores = score_graph(graph, "pagerank") if variant == "P" else None
    error = grad_check(
        lambda: pretrain_loss(
            ckpt, graph, 0, stream(1, "mask", 0, 0), scores
        )[0],
        ckpt.store,
    )
    assert error < 1e-4


def test_scorer_gradient_live(tiny_config, small_corpus):
    """Modulation feeds gradients back into the scorer."""
    config = tiny_config(variant="L")
    ckpt = init_checkpoint(config, small_corpus.feature_dim)
    live = 0
    for index, graph in enumerate(small_corpus):
        ckpt.store.zero_grad()
        with Tape() as tape:
            rng = stream(0, "mask", index, 1)
            loss, _ = pretrain_loss(ckpt, graph, 1, rng)
        tape.backward(loss)
        norm = sum(
            float(np.sum(tensor.grad ** 2))
            for name, tensor in ckpt.store.params()
            if name.startswith("scorer") and tensor.grad is not None
        )
        live += norm > 0
    assert live >= 0.95 * len(small_corpus)


def test_checkpoint_round_trip(tiny_config, small_corpus, tmp_path):
    """save, load, encode gives identical embeddings."""
    ckpt = pretrain(small_corpus, tiny_config(variant="L", epochs=1))
    path = str(tmp_path / "model.smae")
    ckpt.save(path)
    loaded = ModelCheckpoint.load(path)
    assert loaded.config == ckpt.config
    assert loaded.log == ckpt.log
    assert loaded.to_bytes() == ckpt.to_bytes()
    graph = small_corpus[0]
    assert_array_equal(
        encode(loaded, graph, node_features(loaded, graph)).data,
        encode(ckpt, graph, node_features(ckpt, graph)).data,
    )


def test_checkpoint_float32(tiny_config, small_corpus):
    """32-bit configurations train and reload at 32 bits."""
    ckpt = pretrain(small_corpus, tiny_config(dtype="float32", epochs=1))
    loaded = ModelCheckpoint.from_bytes(ckpt.to_bytes())
    assert loaded.store.dtype == np.float32
    assert loaded.to_bytes() == ckpt.to_bytes()


def test_checkpoint_tensor_mismatch(tiny_config):
    """A checkpoint must hold exactly the configured tensors."""
    ckpt = init_checkpoint(tiny_config(), 3)
    ckpt.store.add_param("stray", np.zeros(1))
    with pytest.raises(DataError) as info:
        ModelCheckpoint.from_bytes(ckpt.to_bytes())
    assert info.value.code == ModelCheckpoint.MODEL_ERR_TENSORS


def test_checkpoint_missing_file(tmp_path):
    """Unreadable checkpoints are data errors."""
    with pytest.raises(DataError):
        ModelCheckpoint.load(str(tmp_path / "none.smae"))


def test_pretrain_deterministic(tiny_config, small_corpus):
    """Same seed twice, and any worker count, gives identical bytes."""
    config = tiny_config(variant="L")
    first = pretrain(small_corpus, config, threads=1).to_bytes()
    assert first == pretrain(small_corpus, config, threads=1).to_bytes()
    assert first == pretrain(small_corpus, config, threads=3).to_bytes()
    other = pretrain(small_corpus, tiny_config(variant="L", seed=99))
    assert other.to_bytes() != first


def test_pretrain_log(tiny_config, small_corpus):
    """One finite mean loss per epoch."""
    ckpt = pretrain(small_corpus, tiny_config(epochs=3))
    assert len(ckpt.log) == 3
    assert all(np.isfinite(ckpt.log))


def test_pretrain_loss_decreases(tiny_config):
    """Training lowers the reconstruction loss on the synthetic corpus."""
    corpus = generate_synthetic_corpus(SyntheticSpec(6, 8, "cycle"), 0)
    config = tiny_config(
        epochs=40,
        lr=0.01,
        batch_size=6,
        encoder={"layer_type": "gin", "num_layers": 2, "hidden": 16},
    )
    ckpt = pretrain(corpus, config)
    assert np.mean(ckpt.log[-5:]) < ckpt.log[0]


@pytest.fixture(scope="module")
def motif_run():
    """Get a full-length structure-guided run on 200 planted-motif graphs."""
    corpus = generate_synthetic_corpus(SyntheticSpec(100, 12, "cycle"), 0)
    config = ModelConfig.from_dict(
        {
            "variant": "P",
            "scorer_metric": "pagerank",
            "masking": {"p": 0.5, "beta": 0.5},
            "epochs": 100,
            "seed": 0,
        }
    )
    return corpus, config, pretrain(corpus, config, threads=4)


@pytest.mark.slow
def test_motif_run_loss_halves(motif_run):
    """The last epoch loss is below half of the first."""
    _, _, ckpt = motif_run
    assert len(ckpt.log) == 100
    assert ckpt.log[-1] < 0.5 * ckpt.log[0]


@pytest.mark.slow
def test_motif_run_beats_untrained(motif_run):
    """Pretrained embeddings probe at least 10 points above random init."""
    corpus, config, ckpt = motif_run
    untrained = init_checkpoint(config, corpus.feature_dim)
    accuracy = [
        linear_probe_cv(embed_corpus(model, corpus), seed=0).mean_accuracy
        for model in (ckpt, untrained)
    ]
    trained, baseline = accuracy
    assert trained >= min(baseline + 0.10, 1.0)


def test_trainer_skips_tiny_graphs(tiny_config, caplog):
    """Single-node graphs cannot be masked and are skipped."""
    features = np.eye(3)
    corpus = GraphCorpus(
        [
            Graph(1, [], features[:1]),
            Graph(3, [(0, 1), (1, 2)], features),
            Graph(3, [(0, 1)], features),
        ]
    )
    ckpt = Trainer(corpus, tiny_config(epochs=1)).run()
    assert len(ckpt.log) == 1
    assert "skipping graph 0" in caplog.text
    with pytest.raises(DataError):
        Trainer(GraphCorpus([Graph(1, [], features[:1])]), tiny_config())


def test_trainer_warns_full_warmup(tiny_config, small_corpus, caplog):
    """A warm-up covering every epoch is reported once."""
    config = tiny_config(epochs=1, masking={"warmup_ratio": 1.0})
    Trainer(small_corpus, config)
    assert caplog.text.count("warm-up spans all 1 epochs") == 1
    caplog.clear()
    Trainer(small_corpus, tiny_config(epochs=1))
    assert "warm-up" not in caplog.text


def test_worker_count(monkeypatch):
    """Explicit counts win over the environment."""
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert worker_count() == 1
    monkeypatch.setenv(THREADS_ENV, "4")
    assert worker_count() == 4
    assert worker_count(2) == 2
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ConfigError):
        worker_count()
    with pytest.raises(ConfigError):
        worker_count(0)
