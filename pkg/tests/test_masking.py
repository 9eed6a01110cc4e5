"""Curriculum masking tests."""

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from smae.errors import ConfigError, DataError
from smae.masking import (
    MaskPlan,
    MaskSchedule,
    apply_mask,
    informative_set,
    mask_count,
    mask_priorities,
    plan_mask,
    schedule_k,
    select_mask,
)
from smae.seeding import derive_seed, stream
from smae.tensor import Tape, Tensor
from smae.tensor.ops import sum_squares


def test_derive_seed_streams():
    """Roles and keys give independent, reproducible seeds."""
    assert derive_seed(0, "mask", 1, 2) == derive_seed(0, "mask", 1, 2)
    assert derive_seed(0, "mask", 1, 2) != derive_seed(0, "mask", 2, 1)
    assert derive_seed(0, "mask", 1) != derive_seed(0, "shuffle", 1)
    assert derive_seed(1, "mask") ^ derive_seed(0, "mask") == 1
    assert stream(3, "cv", 0).random() == stream(3, "cv", 0).random()


@pytest.mark.parametrize(
    "p,n,m",
    [(0.3, 10, 3), (0.5, 5, 3), (0.01, 10, 1), (0.99, 10, 9), (0.5, 2, 1)],
)
def test_mask_count(p, n, m):
    """ceil(p n) clamped to [1, n - 1]."""
    assert mask_count(p, n) == m


def test_schedule_k_examples():
    """Endpoints and a quarter of the way."""
    schedule = MaskSchedule(0.5, 0.5, 100)
    assert schedule_k(0, schedule, 20) == 0
    assert schedule_k(100, schedule, 20) == 10
    assert schedule_k(25, schedule, 20) == 5


def test_schedule_k_warmup():
    """K stays zero through warm-up, then reaches floor(p n) at T."""
    schedule = MaskSchedule(0.3, 0.5, 10, warmup_ratio=0.2)
    ks = [schedule_k(t, schedule, 15) for t in range(11)]
    assert ks[:3] == [0, 0, 0]
    assert ks[3] > 0
    assert ks[-1] == 4
    assert all(a <= b for a, b in zip(ks, ks[1:]))


def test_schedule_k_monotone(rng):
    """Nondecreasing and bounded by floor(p n)."""
    for _ in range(100):
        epochs = int(rng.integers(1, 40))
        schedule = MaskSchedule(
            float(rng.uniform(0.05, 0.95)),
            1.0,
            epochs,
            float(rng.choice([0.0, 0.1, 0.5])),
        )
        n = int(rng.integers(2, 60))
        ks = [schedule_k(t, schedule, n) for t in range(epochs + 1)]
        assert all(a <= b for a, b in zip(ks, ks[1:]))
        assert max(ks) <= int(np.floor(schedule.p * n + 1e-9))


def test_schedule_k_full_warmup_and_range():
    """All-warm-up schedules never grow K; epochs outside [0, T] fail."""
    schedule = MaskSchedule(0.5, 0.5, 4, warmup_ratio=1.0)
    assert [schedule_k(t, schedule, 10) for t in range(5)] == [0] * 5
    with pytest.raises(DataError):
        schedule_k(5, schedule, 10)
    with pytest.raises(DataError):
        schedule_k(-1, schedule, 10)


def test_full_warmup_masks_at_random(rng):
    """With warm-up over the whole run, plans match random masking."""
    curriculum = MaskSchedule(0.5, 1.0, 4, warmup_ratio=1.0)
    baseline = MaskSchedule(0.5, 1.0, 4, strategy="random")
    scores = rng.random(10)
    for epoch in range(5):
        plan = plan_mask(scores, curriculum, epoch, 10, stream(1, "m", epoch))
        want = plan_mask(scores, baseline, epoch, 10, stream(1, "m", epoch))
        assert plan.informative_set == ()
        assert plan.masked == want.masked
        assert_array_equal(plan.priorities, want.priorities)


def test_informative_set(rng):
    """Largest scores, K = 0, and K out of range."""
    assert informative_set(np.array([3.0, 1.0, 2.0]), 2, rng) == (0, 2)
    assert informative_set(np.array([3.0, 1.0, 2.0]), 0, rng) == ()
    with pytest.raises(DataError):
        informative_set(np.array([3.0, 1.0]), 3, rng)


def test_informative_set_fair_ties():
    """Tied scores are picked uniformly."""
    n, draws = 5, 10000
    counts = np.zeros(n)
    rng = np.random.default_rng(42)
    for _ in range(draws):
        (picked,) = informative_set(np.ones(n), 1, rng)
        counts[picked] += 1
    assert np.all(np.abs(counts / draws - 1 / n) < 0.02)


def test_mask_priorities(rng):
    """Boost ranges are disjoint; noise can be switched off."""
    gamma = mask_priorities(6, [0], 1.0, True, rng)
    assert 1.0 <= gamma[0] < 2.0
    assert np.all((gamma[1:] >= 0) & (gamma[1:] < 1))
    assert np.argmax(gamma) == 0
    assert_array_equal(
        mask_priorities(4, [1, 3], 0.5, False, rng), [0.0, 0.5, 0.0, 0.5]
    )


def test_zero_beta_is_pure_noise():
    """beta = 0 leaves a uniform draw."""
    gamma = mask_priorities(5, [0, 1], 0.0, True, np.random.default_rng(9))
    assert_array_equal(gamma, np.random.default_rng(9).random(5))


def test_select_mask_counts(rng):
    """Mask sizes follow the ratio."""
    schedule = MaskSchedule(0.3, 1.0, 1)
    assert len(select_mask(rng.random(10), schedule, 10)) == 3
    schedule = MaskSchedule(0.5, 1.0, 1)
    assert len(select_mask(rng.random(5), schedule, 5)) == 3
    with pytest.raises(DataError):
        select_mask(np.zeros(1), schedule, 1)
    with pytest.raises(DataError):
        select_mask(np.zeros(3), schedule, 4)


def test_select_mask_top_priorities():
    """The m largest priorities, ties by index."""
    schedule = MaskSchedule(0.5, 1.0, 1)
    masked = select_mask(np.array([0.1, 0.9, 0.5, 0.5]), schedule, 4)
    assert masked == (1, 2)


@pytest.mark.parametrize(
    "strategy,want",
    [("top", (4, 5)), ("middle", (2, 3)), ("bottom", (0, 1))],
)
def test_static_strategies(strategy, want):
    """Fixed windows of the score ranking."""
    scores = np.arange(6, dtype=float)
    schedule = MaskSchedule(1 / 3, 0.5, 1, strategy=strategy)
    assert select_mask(np.zeros(6), schedule, 6, scores) == want
    with pytest.raises(DataError):
        select_mask(np.zeros(6), schedule, 6)


def test_boosted_nodes_always_masked(rng):
    """beta >= 1 and |Y| <= m puts Y inside the mask."""
    for trial in range(300):
        n = int(rng.integers(2, 25))
        schedule = MaskSchedule(float(rng.uniform(0.1, 0.9)), 1.0, 1)
        mask_rng = stream(0, "mask", trial)
        plan = plan_mask(rng.random(n), schedule, 1, n, mask_rng)
        assert len(plan.masked) == mask_count(schedule.p, n)
        if len(plan.informative_set) <= len(plan.masked):
            assert set(plan.informative_set) <= set(plan.masked)


def test_random_masking_uniform():
    """beta = 0 gives every node probability m / n."""
    n, draws = 8, 20000
    schedule = MaskSchedule(3 / 8, 0.0, 1)
    counts = np.zeros(n)
    scores = np.arange(n, dtype=float)
    for trial in range(draws):
        plan = plan_mask(scores, schedule, 1, n, stream(1, "mask", trial))
        assert len(plan.masked) == 3
        counts[list(plan.masked)] += 1
    assert np.all(np.abs(counts / draws - 3 / 8) < 0.02)


def test_raising_beta_keeps_members(rng):
    """For a fixed stream a larger boost never drops informative nodes."""
    n = 12
    scores = rng.random(n)
    for trial in range(50):
        previous = None
        for beta in (0.0, 0.2, 0.5, 1.0, 2.0):
            schedule = MaskSchedule(0.4, beta, 1)
            plan = plan_mask(scores, schedule, 1, n, stream(2, "mask", trial))
            kept = set(plan.informative_set) & set(plan.masked)
            if previous is not None:
                assert previous <= kept
            previous = kept


def test_mask_size_constant_across_epochs(rng):
    """Only the composition of the mask changes over epochs."""
    schedule = MaskSchedule(0.45, 0.7, 20, warmup_ratio=0.1)
    scores = rng.random(11)
    sizes = {
        len(plan_mask(scores, schedule, t, 11, stream(0, "mask", 0, t)).masked)
        for t in range(21)
    }
    assert sizes == {mask_count(0.45, 11)}


def test_plan_deterministic():
    """Same inputs, same plan."""
    schedule = MaskSchedule(0.5, 0.5, 10)
    scores = np.linspace(0, 1, 9)
    first = plan_mask(scores, schedule, 4, 9, stream(5, "mask", 0, 4))
    second = plan_mask(scores, schedule, 4, 9, stream(5, "mask", 0, 4))
    assert first == second
    assert first.k_used == schedule_k(4, schedule, 9)


def test_plan_final_epoch_uses_full_k():
    """With T = 1 the first epoch already uses floor(p n)."""
    schedule = MaskSchedule(0.5, 1.0, 1)
    plan = plan_mask(np.arange(10.0), schedule, 1, 10, stream(0, "mask"))
    assert plan.k_used == 5
    assert plan.informative_set == (5, 6, 7, 8, 9)
    assert plan.masked == plan.informative_set


def test_random_strategy_ignores_scores():
    """The random strategy never builds an informative set."""
    schedule = MaskSchedule(0.5, 1.0, 1, strategy="random")
    plan = plan_mask(np.arange(6.0), schedule, 1, 6, stream(0, "mask"))
    assert plan.informative_set == ()
    assert plan.k_used == 0


def test_plan_errors():
    """Bad epochs and score lengths."""
    schedule = MaskSchedule(0.5, 1.0, 3)
    with pytest.raises(DataError):
        plan_mask(np.zeros(4), schedule, 4, 4, stream(0, "mask"))
    with pytest.raises(DataError):
        plan_mask(np.zeros(3), schedule, 1, 4, stream(0, "mask"))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"p": 0.0},
        {"p": 1.0},
        {"beta": -0.1},
        {"epochs": 0},
        {"warmup_ratio": 1.5},
        {"strategy": "hardest"},
    ],
)
def test_schedule_validation(kwargs):
    """Out-of-range hyper-parameters."""
    args = {"p": 0.5, "beta": 0.5, "epochs": 10}
    args.update(kwargs)
    with pytest.raises(ConfigError):
        MaskSchedule(**args)


def _plan(masked, n):
    return MaskPlan(masked, np.zeros(n), (), 0, 0)


def test_apply_mask(rng):
    """Token rows replace masked rows; gradients reach token and kept rows."""
    x = Tensor(rng.standard_normal((4, 2)), requires_grad=True)
    token = Tensor(np.zeros(2), requires_grad=True)
    assert_array_equal(apply_mask(x, _plan((), 4), token).data, x.data)

    out = apply_mask(x, _plan((0, 1, 2), 4), token)
    assert_array_equal(out.data[:3], np.zeros((3, 2)))
    assert_array_equal(out.data[3], x.data[3])

    token.data[...] = 1.0
    with Tape() as tape:
        loss = sum_squares(apply_mask(x, _plan((1,), 4), token))
    tape.backward(loss)
    assert_array_equal(token.grad, [2.0, 2.0])
    assert_array_equal(x.grad[1], [0.0, 0.0])
    assert_array_equal(x.grad[0], 2 * x.data[0])
