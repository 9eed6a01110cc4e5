"""Finite-difference verification of tape gradients."""

import logging
from typing import Callable, List, Optional, Tuple

import numpy as np

from smae.errors import NumericError
from smae.nn import ParamStore
from smae.seeding import stream
from smae.tensor import Tape, Tensor

logger = logging.getLogger(__name__)

GRADCHECK_SAMPLES = 200
GRADCHECK_STEP = 1e-5
GRADCHECK_FLOOR = 1e-6


def _evaluate(f: Callable[[], Tensor]) -> float:
    value = f().item()
    if not np.isfinite(value):
        raise NumericError("function value is not finite under perturbation")
    return value


def relative_error(analytic: float, numeric: float) -> float:
    """Get ``|a - n| / max(|a|, |n|, 1e-6)``."""
    scale = max(abs(analytic), abs(numeric), GRADCHECK_FLOOR)
    return abs(analytic - numeric) / scale


def grad_check(
    f: Callable[[], Tensor],
    store: ParamStore,
    h: float = GRADCHECK_STEP,
    samples: int = GRADCHECK_SAMPLES,
    seed: int = 0,
    names: Optional[List[str]] = None,
) -> float:
    """Compare tape gradients with central differences.

    ``f`` must be a deterministic function of the parameters in ``store``
    returning a single-element tensor.

    :param f: Scalar-valued computation
    :param store: Parameters to differentiate
    :param h: Finite-difference step
    :param samples: Number of coordinates checked (all when fewer exist)
    :param seed: Seed of the coordinate sample
    :param names: Restrict to these parameters
    :return: Maximum relative error over the checked coordinates
    """
    store.zero_grad()
    with Tape() as tape:
        out = f()
    if not np.isfinite(out.item()):
        raise NumericError("function value is not finite")
    tape.backward(out)

    if names is None:
        names = store.param_names()
    coords: List[Tuple[str, int]] = [
        (name, idx) for name in names for idx in range(store[name].data.size)
    ]
    if not coords:
        return 0.0
    rng = stream(seed, "gradcheck")
    if len(coords) > samples:
        picked = np.sort(rng.choice(len(coords), size=samples, replace=False))
        coords = [coords[i] for i in picked]

    worst = 0.0
    worst_coord = None
    for name, idx in coords:
        tensor = store[name]
        flat = tensor.data.reshape(-1)
        grad = tensor.grad
        analytic = 0.0 if grad is None else float(grad.reshape(-1)[idx])
        original = flat[idx]
        flat[idx] = original + h
        upper = _evaluate(f)
        flat[idx] = original - h
        lower = _evaluate(f)
        flat[idx] = original
        numeric = (upper - lower) / (2.0 * h)
        err = relative_error(analytic, numeric)
        if err > worst:
            worst = err
            worst_coord = (name, idx, analytic, numeric)
    store.zero_grad()
    if worst_coord is not None:
        logger.debug(
            "worst coordinate %s[%d]: analytic %.6e, numeric %.6e",
            *worst_coord,
        )
    return worst
