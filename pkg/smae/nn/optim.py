"""Adam optimizer over a parameter store."""

import numpy as np

from smae.errors import NumericError
from smae.nn import ParamStore


def adam_step(
    store: ParamStore,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
):
    """Apply one bias-corrected Adam update to every parameter.

    Weight decay is added to the gradient as an L2 term. Gradients are
    cleared afterwards.

    :param store: Parameter store with populated gradients
    :param lr: Learning rate
    :param beta1: First moment decay
    :param beta2: Second moment decay
    :param eps: Denominator floor
    :param weight_decay: L2 coefficient
    """
    missing = [name for name, tensor in store.params() if tensor.grad is None]
    if missing:
        raise NumericError(
            "missing gradient for parameter(s): {}".format(", ".join(missing))
        )
    for name, tensor in store.params():
        grad = tensor.grad
        if weight_decay:
            grad = grad + weight_decay * tensor.data
        state = store.adam_state(name)
        state.step += 1
        state.m *= beta1
        state.m += (1.0 - beta1) * grad
        state.v *= beta2
        state.v += (1.0 - beta2) * (grad * grad)
        bc1 = 1.0 - beta1 ** state.step
        bc2 = 1.0 - beta2 ** state.step
        denom = np.sqrt(state.v / bc2) + eps
        tensor.data -= (lr / bc1) * state.m / denom
        tensor.zero_grad()
