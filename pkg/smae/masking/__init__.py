"""Structure-guided masking with an easy-to-hard curriculum."""

import math
from typing import Optional, Sequence, Tuple

import numpy as np

from smae.errors import (
    ConfigError,
    DataError,
    ErrorDescriptor,
    ErrorGeneratorMixin,
)
from smae.tensor import Tensor
from smae.tensor.ops import replace_rows

MASK_STRATEGIES = ("easy_to_hard", "top", "middle", "bottom", "random")
STATIC_STRATEGIES = ("top", "middle", "bottom")


class Masking(ErrorGeneratorMixin):
    """Error table of the masking operations."""

    MASK_ERR_EPOCH = 600
    MASK_ERR_K = 601
    MASK_ERR_TOO_SMALL = 602
    MASK_ERR_LENGTH = 603
    MASK_ERR_SCORES = 604
    _ERRORS = {
        MASK_ERR_EPOCH: ErrorDescriptor(
            MASK_ERR_EPOCH,
            "Epoch out of range",
            "epoch {t} outside [0, {T}]",
            DataError,
        ),
        MASK_ERR_K: ErrorDescriptor(
            MASK_ERR_K,
            "Invalid K",
            "cannot pick {k} informative nodes out of {n}",
            DataError,
        ),
        MASK_ERR_TOO_SMALL: ErrorDescriptor(
            MASK_ERR_TOO_SMALL,
            "Graph too small",
            "masking needs at least 2 nodes, got {n}",
            DataError,
        ),
        MASK_ERR_LENGTH: ErrorDescriptor(
            MASK_ERR_LENGTH,
            "Length mismatch",
            "{what} has length {got}, expected {n}",
            DataError,
        ),
        MASK_ERR_SCORES: ErrorDescriptor(
            MASK_ERR_SCORES,
            "Missing scores",
            'strategy "{strategy}" needs node scores',
            DataError,
        ),
    }


class MaskSchedule:
    """Masking hyper-parameters of a training run."""

    __slots__ = ("p", "beta", "epochs", "warmup_ratio", "strategy", "noise")

    def __init__(
        self,
        p: float,
        beta: float,
        epochs: int,
        warmup_ratio: float = 0.0,
        strategy: str = "easy_to_hard",
        noise: bool = True,
    ):
        """Initialize.

        :param p: Mask ratio in (0, 1)
        :param beta: Priority boost of informative nodes
        :param epochs: Total epochs T
        :param warmup_ratio: Fraction of epochs with purely random masking
        :param strategy: easy_to_hard, top, middle, bottom or random
        :param noise: Add uniform noise to priorities
        """
        if not 0.0 < p < 1.0:
            raise ConfigError(
                "mask ratio must lie in (0, 1), got {}".format(p)
            )
        if not beta >= 0.0:
            raise ConfigError("beta must be >= 0, got {}".format(beta))
        if epochs < 1:
            raise ConfigError("epochs must be >= 1, got {}".format(epochs))
        if not 0.0 <= warmup_ratio <= 1.0:
            raise ConfigError(
                "warmup ratio must lie in [0, 1], got {}".format(warmup_ratio)
            )
        if strategy not in MASK_STRATEGIES:
            raise ConfigError('unknown mask strategy "{}"'.format(strategy))
        self.p = float(p)
        self.beta = float(beta)
        self.epochs = int(epochs)
        self.warmup_ratio = float(warmup_ratio)
        self.strategy = strategy
        self.noise = bool(noise)

    def __repr__(self):
        """Get representation."""
        return (
            "MaskSchedule(p={}, beta={}, T={}, warmup={}, {}, noise={})"
        ).format(
            self.p,
            self.beta,
            self.epochs,
            self.warmup_ratio,
            self.strategy,
            self.noise,
        )


class MaskPlan:
    """Masked node set of one graph at one epoch."""

    __slots__ = ("masked", "priorities", "informative_set", "epoch", "k_used")

    def __init__(
        self,
        masked: Sequence[int],
        priorities: np.ndarray,
        informative_set: Sequence[int],
        epoch: int,
        k_used: int,
    ):
        """Initialize.

        :param masked: Masked node indices, ascending
        :param priorities: Priority of every node
        :param informative_set: Top-K informative nodes
        :param epoch: Epoch t
        :param k_used: K(t)
        """
        self.masked = tuple(sorted(int(i) for i in masked))
        self.priorities = np.asarray(priorities, dtype=np.float64)
        self.informative_set = tuple(sorted(int(i) for i in informative_set))
        self.epoch = epoch
        self.k_used = k_used

    def __eq__(self, other):
        """Compare."""
        if not isinstance(other, MaskPlan):
            return NotImplemented
        return (
            self.masked == other.masked
            and self.informative_set == other.informative_set
            and self.epoch == other.epoch
            and self.k_used == other.k_used
            and np.array_equal(self.priorities, other.priorities)
        )

    def __repr__(self):
        """Get representation."""
        return "MaskPlan(t={}, K={}, masked={})".format(
            self.epoch, self.k_used, self.masked
        )


def mask_count(p: float, n: int) -> int:
    """Get the number of masked nodes, ``ceil(p n)`` clamped to [1, n-1]."""
    # round first so that e.g. 0.3 * 10 is not lifted to 4
    raw = math.ceil(round(p * n, 9))
    return int(min(max(raw, 1), n - 1))


def schedule_k(t: int, schedule: MaskSchedule, n: int) -> int:
    """Get the informative-set size K at epoch ``t``.

    K is 0 during warm-up, then grows as ``floor(p n sqrt(s))`` where ``s``
    is the fraction of the post-warm-up span elapsed, reaching
    ``floor(p n)`` at ``t = T``. A warm-up ratio of 1 keeps K at 0 for the
    whole run, which reduces every strategy to random masking.

    :param t: Epoch in [0, T]
    :param schedule: Masking schedule
    :param n: Node count
    :return: K
    """
    T = schedule.epochs
    if not 0 <= t <= T:
        raise Masking.get_error_from_code(Masking.MASK_ERR_EPOCH, t=t, T=T)
    warmup = round(schedule.warmup_ratio * T, 9)
    if t <= warmup:
        return 0
    fraction = (t - warmup) / (T - warmup)
    top = round(schedule.p * n, 9)
    k = math.floor(round(top * math.sqrt(fraction), 9))
    return int(min(k, math.floor(top)))


def informative_set(
    scores: np.ndarray, k: int, rng: np.random.Generator
) -> Tuple[int, ...]:
    """Pick the K highest-scoring nodes, breaking ties at random.

    One uniform draw per node is always consumed from ``rng``.

    :param scores: Node scores
    :param k: Set size in [0, n]
    :param rng: Random stream
    :return: Ascending node indices
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    if not 0 <= k <= n:
        raise Masking.get_error_from_code(Masking.MASK_ERR_K, k=k, n=n)
    tie_break = rng.random(n)
    order = np.lexsort((tie_break, -scores))
    return tuple(sorted(int(i) for i in order[:k]))


def mask_priorities(
    n: int,
    informative: Sequence[int],
    beta: float,
    noise: bool,
    rng: np.random.Generator,
) -> np.ndarray:
    """Get per-node priorities ``eps_i + beta [i in Y]``.

    :param n: Node count
    :param informative: Informative set Y
    :param beta: Boost
    :param noise: Draw eps uniformly from [0, 1), else eps = 0
    :param rng: Random stream
    :return: Priorities
    """
    priorities = rng.random(n) if noise else np.zeros(n)
    informative = np.asarray(informative, dtype=int)
    if informative.size and (informative.min() < 0 or informative.max() >= n):
        raise Masking.get_error_from_code(
            Masking.MASK_ERR_K, k=informative.size, n=n
        )
    priorities[informative] += beta
    return priorities


def select_mask(
    priorities: np.ndarray,
    schedule: MaskSchedule,
    n: int,
    scores: Optional[np.ndarray] = None,
) -> Tuple[int, ...]:
    """Choose the masked nodes.

    ``easy_to_hard`` and ``random`` mask the ``m`` highest priorities (ties
    by index); ``top``, ``middle`` and ``bottom`` mask a fixed rank window of
    the scores, using priorities only as a tie-break.

    :param priorities: Per-node priorities
    :param schedule: Masking schedule
    :param n: Node count
    :param scores: Node scores, required by the static strategies
    :return: Ascending masked node indices
    """
    if n < 2:
        raise Masking.get_error_from_code(Masking.MASK_ERR_TOO_SMALL, n=n)
    priorities = np.asarray(priorities, dtype=np.float64)
    if priorities.shape != (n,):
        raise Masking.get_error_from_code(
            Masking.MASK_ERR_LENGTH,
            what="priorities",
            got=priorities.size,
            n=n,
        )
    m = mask_count(schedule.p, n)
    if schedule.strategy not in STATIC_STRATEGIES:
        order = np.lexsort((np.arange(n), -priorities))
        return tuple(sorted(int(i) for i in order[:m]))
    if scores is None:
        raise Masking.get_error_from_code(
            Masking.MASK_ERR_SCORES, strategy=schedule.strategy
        )
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (n,):
        raise Masking.get_error_from_code(
            Masking.MASK_ERR_LENGTH, what="scores", got=scores.size, n=n
        )
    order = np.lexsort((np.arange(n), -priorities, -scores))
    if schedule.strategy == "top":
        start = 0
    elif schedule.strategy == "bottom":
        start = n - m
    else:
        start = (n - m) // 2
    return tuple(sorted(int(i) for i in order[start : start + m]))


def apply_mask(x: Tensor, plan: MaskPlan, mask_token: Tensor) -> Tensor:
    """Replace masked rows by the mask token.

    :param x: n x d features
    :param plan: Mask plan
    :param mask_token: Learnable vector of length d
    :return: Masked features
    """
    return replace_rows(x, plan.masked, mask_token)


def plan_mask(
    scores: Optional[np.ndarray],
    schedule: MaskSchedule,
    epoch: int,
    n: int,
    rng: np.random.Generator,
) -> MaskPlan:
    """Build the mask plan of one graph at one epoch.

    :param scores: Node scores (unused by the random strategy)
    :param schedule: Masking schedule
    :param epoch: Epoch t in [0, T]
    :param n: Node count
    :param rng: Stream dedicated to this graph and epoch
    :return: The plan
    """
    if not 0 <= epoch <= schedule.epochs:
        raise Masking.get_error_from_code(
            Masking.MASK_ERR_EPOCH, t=epoch, T=schedule.epochs
        )
    if schedule.strategy == "random" or scores is None:
        k = 0
        ranking = np.zeros(n)
    else:
        k = schedule_k(epoch, schedule, n)
        ranking = np.asarray(scores, dtype=np.float64)
        if ranking.shape != (n,):
            raise Masking.get_error_from_code(
                Masking.MASK_ERR_LENGTH, what="scores", got=ranking.size, n=n
            )
    chosen = informative_set(ranking, k, rng)
    priorities = mask_priorities(n, chosen, schedule.beta, schedule.noise, rng)
    masked = select_mask(priorities, schedule, n, scores)
    return MaskPlan(masked, priorities, chosen, epoch, k)
