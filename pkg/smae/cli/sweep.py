"""Ablation sweeps: one pretrain-and-evaluate run per axis value."""

import logging
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from smae.config import ModelConfig, merge_dicts
from smae.errors import ConfigError
from smae.eval import embed_corpus
from smae.eval.probe import CVReport, linear_probe_cv
from smae.gmae.train import pretrain
from smae.graph import GraphCorpus

logger = logging.getLogger(__name__)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("on", "true", "1", "yes"):
        return True
    if lowered in ("off", "false", "0", "no"):
        return False
    raise ConfigError('expected on/off, got "{}"'.format(text))


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError('expected a number, got "{}"'.format(text))


# axis -> (value parser, config override builder)
SWEEP_AXES: Dict[str, Tuple[Callable[[str], Any], Callable[[Any], Dict]]] = {
    "beta": (_parse_float, lambda v: {"masking": {"beta": v}}),
    "strategy": (str, lambda v: {"masking": {"strategy": v}}),
    "metric": (str, lambda v: {"scorer_metric": v}),
    "noise": (_parse_bool, lambda v: {"masking": {"noise": v}}),
    "scorer_function": (str, lambda v: {"scorer_function": v}),
}


class SweepResult:
    """CV reports of one sweep, in value order."""

    def __init__(self, axis: str):
        """Initialize.

        :param axis: Swept configuration axis
        """
        self.axis = axis
        self.rows: List[Tuple[str, CVReport]] = []

    def __len__(self):
        """Get number of rows."""
        return len(self.rows)


def axis_config(
    base_config: ModelConfig, axis: str, value: Any
) -> ModelConfig:
    """Get the configuration of one sweep point.

    :param base_config: Shared configuration
    :param axis: Swept axis
    :param value: Parsed axis value
    :return: Validated configuration
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(
            'unknown sweep axis "{}"; available: {}'.format(
                axis, ", ".join(sorted(SWEEP_AXES))
            )
        )
    _, override = SWEEP_AXES[axis]
    return ModelConfig.from_dict(
        merge_dicts(base_config.to_dict(), override(value))
    )


def sweep(
    corpus: GraphCorpus,
    base_config: ModelConfig,
    axis: str,
    values: Sequence[str],
    threads: Optional[int] = None,
    folds: int = 10,
    repeats: int = 5,
) -> SweepResult:
    """Pretrain and evaluate once per axis value.

    :param corpus: Labelled corpus
    :param base_config: Shared configuration (seed included)
    :param axis: One of beta, strategy, metric, noise, scorer_function
    :param values: Axis values as text
    :param threads: Worker threads
    :param folds: Probe folds
    :param repeats: Probe repeats
    :return: One row per value
    """
    if not values:
        raise ConfigError("sweep needs at least one value")
    if axis not in SWEEP_AXES:
        raise ConfigError('unknown sweep axis "{}"'.format(axis))
    parse, _ = SWEEP_AXES[axis]
    configs = [
        (text, axis_config(base_config, axis, parse(text)))
        for text in values
    ]
    result = SweepResult(axis)
    for text, config in configs:
        logger.info("sweep %s=%s", axis, text)
        ckpt = pretrain(corpus, config, threads)
        emb = embed_corpus(ckpt, corpus)
        report = linear_probe_cv(
            emb, folds=folds, repeats=repeats, seed=config.seed
        )
        result.rows.append((text, report))
    return result


def sweep_beta(
    corpus: GraphCorpus,
    base_config: ModelConfig,
    betas: Sequence[float],
    seed: Optional[int] = None,
    **kwargs: Any
) -> SweepResult:
    """Sweep the priority boost beta; beta 0 is the random-masking baseline.

    :param corpus: Labelled corpus
    :param base_config: Shared configuration
    :param betas: Boost values, each >= 0
    :param seed: Master seed overriding the configuration's
    :param kwargs: Passed to :func:`sweep`
    :return: One row per beta
    """
    if seed is not None:
        base_config = ModelConfig.from_dict(
            merge_dicts(base_config.to_dict(), {"seed": seed})
        )
    return sweep(
        corpus, base_config, "beta", [repr(float(b)) for b in betas], **kwargs
    )
