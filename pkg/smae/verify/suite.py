"""Packaged oracle, gradient and property checks."""

import logging
import math
import time
from typing import Callable, List, Tuple

import numpy as np

from smae.config import ModelConfig
from smae.graph import GraphCorpus
from smae.graph.synthetic import SyntheticSpec, generate_synthetic_corpus
from smae.gmae import init_checkpoint, pretrain_loss
from smae.gmae.train import pretrain
from smae.masking import (
    MaskSchedule,
    mask_count,
    plan_mask,
    schedule_k,
)
from smae.nn.gradcheck import grad_check
from smae.scoring import (
    betweenness_scores,
    closeness_scores,
    pagerank,
    score_graph,
)
from smae.seeding import stream
from smae.verify import (
    betweenness_oracle,
    closeness_oracle,
    pagerank_oracle,
    random_graph,
)

logger = logging.getLogger(__name__)

CheckFn = Callable[[int], str]
CHECKS: List[Tuple[str, CheckFn]] = []


class CheckFailed(Exception):
    """A self-check did not hold."""


def check(name: str):
    """Register a self-check under a name."""

    def decorator(fn: CheckFn) -> CheckFn:
        CHECKS.append((name, fn))
        return fn

    return decorator


def _require(condition: bool, message: str):
    if not condition:
        raise CheckFailed(message)


@check("pagerank-oracle")
def check_pagerank(seed: int) -> str:
    """PageRank against dense power iteration."""
    rng = stream(seed, "gradcheck", 1)
    worst = 0.0
    for _ in range(20):
        graph = random_graph(rng, int(rng.integers(2, 60)), 0.1, True)
        got = pagerank(graph).values
        worst = max(worst, float(np.abs(got - pagerank_oracle(graph)).max()))
    _require(worst < 1e-8, "max deviation {:.3e}".format(worst))
    return "max deviation {:.3e}".format(worst)


@check("betweenness-oracle")
def check_betweenness(seed: int) -> str:
    """Brandes betweenness against pair enumeration."""
    rng = stream(seed, "gradcheck", 2)
    for _ in range(30):
        graph = random_graph(rng, int(rng.integers(1, 13)), 0.3)
        got = betweenness_scores(graph).values
        _require(
            np.allclose(got, betweenness_oracle(graph), atol=1e-9),
            "mismatch on {!r}".format(graph),
        )
    return "30 graphs"


@check("closeness-oracle")
def check_closeness(seed: int) -> str:
    """Closeness against the direct formula."""
    rng = stream(seed, "gradcheck", 3)
    for _ in range(30):
        graph = random_graph(rng, int(rng.integers(1, 13)), 0.3)
        got = closeness_scores(graph).values
        _require(
            np.allclose(got, closeness_oracle(graph), atol=1e-12),
            "mismatch on {!r}".format(graph),
        )
    return "30 graphs"


@check("schedule")
def check_schedule(seed: int) -> str:
    """Curriculum size is monotone and hits its endpoints."""
    rng = stream(seed, "gradcheck", 4)
    for _ in range(200):
        epochs = int(rng.integers(1, 50))
        schedule = MaskSchedule(
            float(rng.uniform(0.05, 0.95)),
            0.5,
            epochs,
            float(rng.choice([0.0, 0.2, 0.5])),
        )
        n = int(rng.integers(2, 100))
        ks = [schedule_k(t, schedule, n) for t in range(epochs + 1)]
        _require(ks[0] == 0, "K(0) = {}".format(ks[0]))
        _require(
            ks[-1] == math.floor(round(schedule.p * n, 9)),
            "K(T) = {} for p={}, n={}".format(ks[-1], schedule.p, n),
        )
        _require(
            all(a <= b for a, b in zip(ks, ks[1:])), "K not monotone"
        )
    return "200 schedules"


@check("masking")
def check_masking(seed: int) -> str:
    """Mask count and boosted containment."""
    for trial in range(1000):
        rng = stream(seed, "mask", trial)
        n = int(rng.integers(2, 30))
        p = float(rng.uniform(0.05, 0.95))
        schedule = MaskSchedule(p, 1.0, 1)
        plan = plan_mask(rng.random(n), schedule, 1, n, rng)
        _require(
            len(plan.masked) == mask_count(p, n), "wrong mask count"
        )
        if len(plan.informative_set) <= len(plan.masked):
            _require(
                set(plan.informative_set) <= set(plan.masked),
                "informative node left unmasked",
            )
    return "1000 plans"


def _loss_check(config: ModelConfig, seed: int, tag: int) -> float:
    rng = stream(seed, "gradcheck", tag)
    graph = random_graph(rng, int(rng.integers(3, 9)), 0.4, True, 3)
    ckpt = init_checkpoint(config, 3)
    scores = None
    if config.variant == "P":
        scores = score_graph(graph, config.scorer_metric)
    # epoch 0 keeps the masked set independent of learnable scores
    return grad_check(
        lambda: pretrain_loss(
            ckpt, graph, 0, stream(seed, "mask", tag, 0), scores
        )[0],
        ckpt.store,
        seed=seed,
    )


@check("gradients")
def check_gradients(seed: int) -> str:
    """End-to-end loss gradients against central differences."""
    worst = 0.0
    for tag, (variant, layer) in enumerate(
        [("P", "gin"), ("P", "gcn"), ("L", "gin"), ("L", "gcn")]
    ):
        config = ModelConfig.from_dict(
            {
                "variant": variant,
                "encoder": {"layer_type": layer, "num_layers": 2, "hidden": 4},
                "decoder": {"layer_type": layer, "num_layers": 1},
                "scorer_hidden": 4,
                "seed": seed,
            }
        )
        err = _loss_check(config, seed, 10 + tag)
        _require(
            err < 1e-4,
            "variant {} {} relative error {:.3e}".format(variant, layer, err),
        )
        worst = max(worst, err)
    return "max relative error {:.3e}".format(worst)


@check("determinism")
def check_determinism(seed: int) -> str:
    """Two identical runs give identical checkpoints."""
    corpus: GraphCorpus = generate_synthetic_corpus(
        SyntheticSpec(3, 6, "cycle"), seed
    )
    config = ModelConfig.from_dict(
        {
            "encoder": {"num_layers": 1, "hidden": 8},
            "epochs": 2,
            "batch_size": 4,
            "seed": seed,
        }
    )
    first = pretrain(corpus, config, threads=1).to_bytes()
    second = pretrain(corpus, config, threads=2).to_bytes()
    _require(first == second, "checkpoints differ")
    return "{} bytes".format(len(first))


def run_suite(seed: int = 0) -> List[Tuple[str, bool, str]]:
    """Run every self-check.

    :param seed: Master seed
    :return: (name, passed, detail) per check
    """
    results = []
    for name, fn in CHECKS:
        start = time.perf_counter()
        try:
            detail = fn(seed)
            passed = True
        except CheckFailed as ex:
            detail = str(ex)
            passed = False
        elapsed = time.perf_counter() - start
        logger.info(
            "%s %s (%.2fs): %s",
            "PASS" if passed else "FAIL",
            name,
            elapsed,
            detail,
        )
        results.append((name, passed, detail))
    return results
