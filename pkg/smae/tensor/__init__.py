"""Dense tensors with tape-based reverse-mode differentiation."""

import logging
import threading
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from smae.errors import NumericError

# per-operation messages of the reverse pass; see the --trace-backward flag
trace_logger = logging.getLogger("smae.tensor.trace")


def as_array(data: Any, dtype=None) -> np.ndarray:
    """Convert to a floating point array.

    :param data: Array-like data
    :param dtype: Target dtype; floating inputs keep theirs when omitted
    :return: Array
    """
    array = np.asarray(data)
    if dtype is not None:
        return array.astype(dtype, copy=False)
    if not np.issubdtype(array.dtype, np.floating):
        return array.astype(np.float64)
    return array


class Tensor:
    """Dense array with an optional gradient slot.

    Tensors created directly are leaves; tensors produced by recorded
    operations are intermediate values whose gradients live on the tape.
    """

    __slots__ = ("data", "grad", "requires_grad", "is_leaf", "name")

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        name: Optional[str] = None,
        dtype=None,
    ):
        """Initialize.

        :param data: Array-like contents
        :param requires_grad: Whether gradients are tracked for this tensor
        :param name: Optional name, used in error messages
        :param dtype: Optional dtype
        """
        self.data = as_array(data, dtype)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.is_leaf = True
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        """Get shape."""
        return self.data.shape

    def item(self) -> float:
        """Get the value of a single-element tensor."""
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        """Clear gradient."""
        self.grad = None

    def accumulate(self, grad: np.ndarray):
        """Add to the gradient slot.

        :param grad: Gradient with the shape of the tensor
        """
        if self.grad is None:
            self.grad = np.array(grad, dtype=self.data.dtype, copy=True)
        else:
            self.grad += grad

    def __repr__(self):
        """Get representation."""
        return "Tensor(shape={}, name={}, requires_grad={})".format(
            self.shape, self.name, self.requires_grad
        )


class TapeNode:
    """A recorded operation.

    Subclasses are visited by name during the backward pass.
    """

    __slots__ = ("inputs", "output", "cache")

    def __init__(
        self, inputs: Sequence[Tensor], output: Tensor, **cache: Any
    ):
        """Initialize.

        :param inputs: Operation inputs (tensors)
        :param output: Operation output
        :param cache: Values saved for the backward pass
        """
        self.inputs = tuple(inputs)
        self.output = output
        self.cache = cache

    def __repr__(self):
        """Get representation."""
        return "{}(out={})".format(self.__class__.__name__, self.output.shape)


class BatchStatistics:
    """Batch statistics observed by a train-mode batch normalization."""

    __slots__ = ("prefix", "mean", "var")

    def __init__(self, prefix: str, mean: np.ndarray, var: np.ndarray):
        """Initialize.

        :param prefix: Parameter name prefix of the normalization
        :param mean: Per-column batch mean
        :param var: Per-column biased batch variance
        """
        self.prefix = prefix
        self.mean = mean
        self.var = var


_ACTIVE = threading.local()


class Tape:
    """Records operations for one differentiable computation.

    A tape is confined to the thread that entered it. Operations record
    themselves on the innermost active tape of their thread.
    """

    def __init__(self):
        """Initialize."""
        self._nodes: List[TapeNode] = []
        self.batch_stats: List[BatchStatistics] = []

    @staticmethod
    def current() -> Optional["Tape"]:
        """Get the active tape of this thread, if any."""
        stack = getattr(_ACTIVE, "stack", None)
        if not stack:
            return None
        return stack[-1]

    def __enter__(self) -> "Tape":
        """Activate."""
        if not hasattr(_ACTIVE, "stack"):
            _ACTIVE.stack = []
        _ACTIVE.stack.append(self)
        return self

    def __exit__(self, *exc_info):
        """Deactivate."""
        _ACTIVE.stack.pop()
        return False

    @property
    def nodes(self) -> Tuple[TapeNode, ...]:
        """Get recorded nodes, in execution order."""
        return tuple(self._nodes)

    def record(self, node: TapeNode):
        """Record an operation.

        :param node: The recorded operation
        """
        self._nodes.append(node)

    def backward(
        self, output: Tensor, accumulate: bool = True, **options: Any
    ) -> Dict[int, Tuple[Tensor, np.ndarray]]:
        """Propagate gradients from a scalar output.

        :param output: Single-element tensor recorded on this tape
        :param accumulate: Add leaf gradients into their ``grad`` slots
        :param options: Visitor options/flags overriding the defaults, which
            trace every visited operation to ``smae.tensor.trace`` when that
            logger is enabled for DEBUG
        :return: Leaf gradients keyed by ``id(leaf)``, in first-reached order
        """
        from smae.tensor.backward import BackwardVisitor, VisitError

        if output.data.size != 1:
            raise NumericError(
                "backward needs a single-element output, got shape {}".format(
                    output.shape
                )
            )
        options.setdefault(
            "debug_visit", trace_logger.isEnabledFor(logging.DEBUG)
        )
        options.setdefault("logger_fn", trace_logger.debug)
        visitor = BackwardVisitor(**options)
        try:
            leaves = visitor.visit(self._nodes, output)
        except VisitError as ex:
            raise ex.find_embedded_exception()
        if accumulate:
            for tensor, grad in leaves.values():
                tensor.accumulate(grad)
        return leaves


def check_finite(array: np.ndarray, what: str) -> np.ndarray:
    """Check that all entries are finite.

    :param array: Values to check
    :param what: Description used in the error message
    :return: The array
    """
    if not np.all(np.isfinite(array)):
        raise NumericError("non-finite values produced by {}".format(what))
    return array
