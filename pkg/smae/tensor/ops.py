"""Primitive differentiable operations.

Each operation computes its value eagerly and, when a tape is active and an
input requires gradients, records a node named after the operation. The
backward rules live in :mod:`smae.tensor.backward`.
"""

from typing import Any, Optional, Sequence, Tuple, Union

import numpy as np

from smae.errors import NumericError, ShapeError
from smae.tensor import (
    BatchStatistics,
    Tape,
    TapeNode,
    Tensor,
    as_array,
    check_finite,
)

Rows = Union[Sequence[int], np.ndarray]

SIGMOID_EPS = 1e-12


class MatMul(TapeNode):
    """Matrix product."""


class Add(TapeNode):
    """Sum of same-shape tensors, or matrix plus row vector."""


class AddScalar(TapeNode):
    """Tensor plus a constant."""


class MulConst(TapeNode):
    """Tensor times a constant."""


class Scale(TapeNode):
    """Tensor times a learnable scalar."""


class RowScale(TapeNode):
    """Row i multiplied by entry i of a vector."""


class Propagate(TapeNode):
    """Weighted neighbor gather-sum."""


class ReLU(TapeNode):
    """Rectifier."""


class PReLU(TapeNode):
    """Rectifier with learnable negative slope."""


class Sigmoid(TapeNode):
    """Logistic function."""


class BatchNorm(TapeNode):
    """Per-column standardization with scale and shift."""


class ReplaceRows(TapeNode):
    """Rows replaced by a token vector."""


class TakeRows(TapeNode):
    """Row selection."""


class ReduceRows(TapeNode):
    """Column-wise reduction over rows."""


class Reshape(TapeNode):
    """Shape change."""


class SumSquares(TapeNode):
    """Sum of squared entries."""


class SumAll(TapeNode):
    """Sum of all entries."""


class ScaledCosineError(TapeNode):
    """Mean over rows of (1 - cosine)^gamma against a constant target."""


class Propagator:
    """Sparse propagation operator ``out[dst] += weight * h[src]``.

    Entries are sorted by (dst, src) so every output row sums its inputs in
    ascending source order.
    """

    __slots__ = ("src", "dst", "weight", "n")

    def __init__(
        self, src: np.ndarray, dst: np.ndarray, weight: np.ndarray, n: int
    ):
        """Initialize.

        :param src: Source node of each entry
        :param dst: Destination node of each entry
        :param weight: Entry weights
        :param n: Node count
        """
        order = np.lexsort((src, dst))
        self.src = np.asarray(src, dtype=int)[order]
        self.dst = np.asarray(dst, dtype=int)[order]
        self.weight = np.asarray(weight, dtype=np.float64)[order]
        self.n = int(n)

    def apply(self, h: np.ndarray) -> np.ndarray:
        """Apply to a dense matrix.

        :param h: n x d matrix
        :return: Propagated n x d matrix
        """
        out = np.zeros((self.n,) + h.shape[1:], dtype=h.dtype)
        np.add.at(out, self.dst, self.weight[:, None] * h[self.src])
        return out

    def apply_transpose(self, g: np.ndarray) -> np.ndarray:
        """Apply the transposed operator.

        :param g: n x d matrix
        :return: Propagated n x d matrix
        """
        out = np.zeros((self.n,) + g.shape[1:], dtype=g.dtype)
        np.add.at(out, self.src, self.weight[:, None] * g[self.dst])
        return out


def sum_propagator(graph) -> Propagator:
    """Get the neighbor-sum operator of a graph (cached on the graph).

    :param graph: A Graph
    :return: Operator computing sum over neighbors
    """
    cached = graph.derived.get("propagator.sum")
    if cached is None:
        edges = np.array(graph.edges, dtype=int).reshape(-1, 2)
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        cached = Propagator(src, dst, np.ones(len(src)), graph.node_count)
        graph.derived["propagator.sum"] = cached
    return cached


def gcn_propagator(graph) -> Propagator:
    """Get the symmetric-normalized operator D^-1/2 (A + I) D^-1/2.

    :param graph: A Graph
    :return: Operator, cached on the graph
    """
    cached = graph.derived.get("propagator.gcn")
    if cached is None:
        n = graph.node_count
        edges = np.array(graph.edges, dtype=int).reshape(-1, 2)
        loops = np.arange(n)
        src = np.concatenate([edges[:, 0], edges[:, 1], loops])
        dst = np.concatenate([edges[:, 1], edges[:, 0], loops])
        degree = graph.degrees().astype(np.float64) + 1.0
        weight = 1.0 / np.sqrt(degree[src] * degree[dst])
        cached = Propagator(src, dst, weight, n)
        graph.derived["propagator.gcn"] = cached
    return cached


def _emit(
    node_cls, inputs: Sequence[Tensor], value: np.ndarray, /, **cache: Any
) -> Tensor:
    check_finite(value, node_cls.__name__)
    tape = Tape.current()
    tracked = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(value, requires_grad=tracked)
    if tracked:
        out.is_leaf = False
        tape.record(node_cls(inputs, out, **cache))
    return out


def constant(data: Any, dtype=None) -> Tensor:
    """Wrap data in a tensor that does not require gradients."""
    return Tensor(data, requires_grad=False, dtype=dtype)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product ``a @ b``."""
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(
            "matmul shapes {} and {} do not align".format(a.shape, b.shape)
        )
    return _emit(MatMul, (a, b), a.data @ b.data)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Sum ``a + b``; ``b`` may be a row vector broadcast over rows."""
    if a.shape != b.shape and not (
        b.data.ndim == 1 and a.data.ndim == 2 and b.shape[0] == a.shape[1]
    ):
        raise ShapeError(
            "cannot add shapes {} and {}".format(a.shape, b.shape)
        )
    return _emit(Add, (a, b), a.data + b.data)


def add_scalar(x: Tensor, value: float) -> Tensor:
    """Add a constant."""
    return _emit(AddScalar, (x,), x.data + value)


def mul_const(x: Tensor, value: float) -> Tensor:
    """Multiply by a constant."""
    return _emit(MulConst, (x,), x.data * value, value=value)


def scale(x: Tensor, s: Tensor) -> Tensor:
    """Multiply by a single-element tensor."""
    if s.data.size != 1:
        raise ShapeError("scale factor must have one element")
    factor = s.data.reshape(())
    return _emit(Scale, (x, s), x.data * factor)


def row_scale(x: Tensor, s: Tensor) -> Tensor:
    """Multiply row i of ``x`` by ``s[i]``."""
    if x.data.ndim != 2 or s.shape != (x.shape[0],):
        raise ShapeError(
            "row scale of {} by {} is undefined".format(x.shape, s.shape)
        )
    return _emit(RowScale, (x, s), x.data * s.data[:, None])


def propagate(operator: Propagator, h: Tensor) -> Tensor:
    """Apply a propagation operator."""
    if h.data.ndim != 2 or h.shape[0] != operator.n:
        raise ShapeError(
            "cannot propagate {} over {} nodes".format(h.shape, operator.n)
        )
    return _emit(Propagate, (h,), operator.apply(h.data), operator=operator)


def relu(x: Tensor) -> Tensor:
    """Rectifier."""
    return _emit(ReLU, (x,), np.maximum(x.data, 0.0))


def prelu(x: Tensor, slope: Tensor) -> Tensor:
    """Rectifier with a learnable negative slope."""
    if slope.data.size != 1:
        raise ShapeError("prelu slope must have one element")
    a = slope.data.reshape(())
    return _emit(PReLU, (x, slope), np.where(x.data > 0, x.data, a * x.data))


def sigmoid(x: Tensor) -> Tensor:
    """Logistic function, kept strictly inside (0, 1).

    Saturated values are clipped to [SIGMOID_EPS, 1 - SIGMOID_EPS] so that
    scores never reach the ends of the interval and the backward factor
    s (1 - s) stays positive.
    """
    z = np.exp(-np.abs(x.data))
    value = np.where(x.data >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    value = np.clip(value, SIGMOID_EPS, 1.0 - SIGMOID_EPS)
    return _emit(Sigmoid, (x,), value)


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    train: bool,
    eps: float = 1e-5,
    prefix: Optional[str] = None,
) -> Tensor:
    """Batch normalization over rows.

    In train mode the batch statistics are used and recorded on the active
    tape; running statistics are never modified here.

    :param x: n x d input
    :param gamma: Per-column scale
    :param beta: Per-column shift
    :param running_mean: Running mean used in eval mode
    :param running_var: Running variance used in eval mode
    :param train: Train or eval mode
    :param eps: Variance floor
    :param prefix: Parameter prefix recorded with the batch statistics
    """
    if x.data.ndim != 2 or gamma.shape != (x.shape[1],):
        raise ShapeError(
            "batch norm of {} with scale {}".format(x.shape, gamma.shape)
        )
    if train:
        if x.shape[0] < 2:
            raise NumericError(
                "batch norm in train mode needs at least 2 rows, "
                "got {}".format(x.shape[0])
            )
        mean = x.data.mean(axis=0)
        var = x.data.var(axis=0)
        tape = Tape.current()
        if tape is not None:
            tape.batch_stats.append(BatchStatistics(prefix, mean, var))
    else:
        mean = running_mean
        var = running_var
    invstd = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean) * invstd
    return _emit(
        BatchNorm,
        (x, gamma, beta),
        gamma.data * xhat + beta.data,
        xhat=xhat,
        invstd=invstd,
        train=train,
    )


def _row_index(rows: Rows) -> np.ndarray:
    return np.asarray(rows, dtype=int).reshape(-1)


def replace_rows(x: Tensor, rows: Rows, token: Tensor) -> Tensor:
    """Replace rows with a token vector."""
    rows = _row_index(rows)
    if x.data.ndim != 2 or token.data.size != x.shape[1]:
        raise ShapeError(
            "token of size {} cannot replace rows of {}".format(
                token.data.size, x.shape
            )
        )
    value = np.array(x.data, copy=True)
    value[rows] = token.data.reshape(-1)
    return _emit(ReplaceRows, (x, token), value, rows=rows)


def take_rows(x: Tensor, rows: Rows) -> Tensor:
    """Select rows."""
    rows = _row_index(rows)
    return _emit(TakeRows, (x,), x.data[rows], rows=rows)


def reduce_rows(x: Tensor, kind: str) -> Tensor:
    """Reduce over rows with sum, mean or max."""
    if kind == "sum":
        value = x.data.sum(axis=0)
        argmax = None
    elif kind == "mean":
        value = x.data.mean(axis=0)
        argmax = None
    elif kind == "max":
        argmax = x.data.argmax(axis=0)
        value = x.data.max(axis=0)
    else:
        raise ValueError("unknown reduction: {}".format(kind))
    return _emit(ReduceRows, (x,), value, kind=kind, argmax=argmax)


def reshape(x: Tensor, shape: Tuple[int, ...]) -> Tensor:
    """Change shape."""
    return _emit(Reshape, (x,), x.data.reshape(shape))


def sum_squares(x: Tensor) -> Tensor:
    """Sum of squares of all entries."""
    return _emit(SumSquares, (x,), np.asarray(np.sum(x.data * x.data)))


def sum_all(x: Tensor) -> Tensor:
    """Sum of all entries."""
    return _emit(SumAll, (x,), np.asarray(np.sum(x.data)))


def scaled_cosine_error(
    pred: Tensor, target: np.ndarray, gamma: float, eps: float = 1e-12
) -> Tensor:
    """Mean of (1 - cos(target_i, pred_i))^gamma over rows.

    Norms are floored at ``eps``; a zero target row has cosine 0.

    :param pred: m x d predictions
    :param target: m x d constant targets
    :param gamma: Exponent (>= 1)
    :param eps: Norm floor
    """
    target = as_array(target, pred.data.dtype)
    if pred.shape != target.shape or pred.data.ndim != 2:
        raise ShapeError(
            "prediction {} and target {} differ".format(
                pred.shape, target.shape
            )
        )
    pred_norm = np.linalg.norm(pred.data, axis=1)
    target_norm = np.linalg.norm(target, axis=1)
    pred_unit = pred.data / np.maximum(pred_norm, eps)[:, None]
    target_unit = target / np.maximum(target_norm, eps)[:, None]
    cosine = np.sum(pred_unit * target_unit, axis=1)
    base = np.clip(1.0 - cosine, 0.0, None)
    value = np.asarray(np.mean(base ** gamma))
    return _emit(
        ScaledCosineError,
        (pred,),
        value,
        pred_norm=pred_norm,
        pred_unit=pred_unit,
        target_unit=target_unit,
        cosine=cosine,
        base=base,
        gamma=gamma,
        eps=eps,
    )
