"""Reverse pass over a tape."""

from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from smae.errors import NumericError
from smae.tensor import TapeNode, Tensor

# Type aliases
VisitOptionType = Any
InputGrads = Tuple[Optional[np.ndarray], ...]
LeafGrads = Dict[int, Tuple[Tensor, np.ndarray]]


class VisitError(Exception):
    """Exception while visiting."""

    def __init__(self, original_exception: Optional[Exception] = None):
        """Initialize.

        :param original_exception: An embedded exception
        """
        super().__init__(str(original_exception))
        self.ex = original_exception

    def find_embedded_exception(self) -> Exception:
        """Find an embedded exception that is not a VisitError."""
        if isinstance(self.ex, VisitError):
            return self.ex.find_embedded_exception()
        if self.ex is None:
            return RuntimeError("unknown error in visit")
        return self.ex


class BackwardVisitor:
    """Visits recorded operations in reverse, applying the chain rule.

    The rule for an operation class ``Foo`` is the method ``visit_Foo``; it
    receives the node and the gradient of its output and returns one
    gradient (or None) per input.
    """

    def __init__(self, **options: VisitOptionType):
        """Initialize.

        :param options: Dictionary of options (flags)
        """
        self._flags = {"debug_visit": False}
        self._options = {"logger_fn": None}
        for opt_name, opt_value in options.items():
            if isinstance(opt_value, bool):
                if opt_value is True:
                    self.set_flag(opt_name)
                else:
                    self.clear_flag(opt_name)
            else:
                self.set_option(opt_name, opt_value)

        # visit function table
        self._visit_fn_table: Dict[str, Callable] = {
            name[len("visit_") :]: getattr(self, name)
            for name in dir(self)
            if name.startswith("visit_") and callable(getattr(self, name))
        }

    def set_flag(self, flag_name: str):
        """Set flag.

        :param flag_name: Flag name
        """
        self._flags[flag_name] = True

    def clear_flag(self, flag_name: str):
        """Clear flag.

        :param flag_name: Flag name
        """
        self._flags[flag_name] = False

    def get_flag_state(self, flag_name: str) -> bool:
        """Get flag state.

        :param flag_name: Flag name
        :return: Flag state
        """
        return self._flags.get(flag_name, False)

    def set_option(self, option_name: str, option_value: Any):
        """Set option.

        :param option_name: Option name
        :param option_value: Value to set
        """
        self._options[option_name] = option_value

    def get_option(self, option_name: str) -> Any:
        """Get option.

        :param option_name: Option name
        :return: Option value
        """
        return self._options[option_name]

    def _debug_visit(self, message: str):
        """Emit debug messages when visiting."""
        if self.get_flag_state("debug_visit"):
            logger_fn = self.get_option("logger_fn")
            if logger_fn is not None:
                logger_fn(message)

    def _visit_default(self, node: TapeNode, grad: np.ndarray):
        raise NotImplementedError(
            "no backward rule for {}".format(node.__class__.__name__)
        )

    def _visit_fn(self, node: TapeNode, grad: np.ndarray) -> InputGrads:
        cls_name = node.__class__.__name__
        fn = self._visit_fn_table.get(cls_name)
        try:
            if fn is None:
                ret = self._visit_default(node, grad)
            else:
                ret = fn(node, grad)
        except Exception as ex:
            self._debug_visit(
                'exception caught while visiting: "{}"'.format(ex)
            )
            raise VisitError(ex)
        return ret

    def visit(self, nodes: Sequence[TapeNode], output: Tensor) -> LeafGrads:
        """Run the reverse pass.

        :param nodes: Recorded operations in execution order
        :param output: Single-element tensor to differentiate
        :return: Gradients of leaf tensors keyed by ``id``
        """
        grads: Dict[int, np.ndarray] = {id(output): np.ones_like(output.data)}
        leaves: LeafGrads = {}
        for node in reversed(nodes):
            grad = grads.pop(id(node.output), None)
            if grad is None:
                continue
            self._debug_visit("visiting {}".format(node))
            input_grads = self._visit_fn(node, grad)
            for tensor, input_grad in zip(node.inputs, input_grads):
                if input_grad is None or not tensor.requires_grad:
                    continue
                if tensor.is_leaf:
                    key = id(tensor)
                    if key in leaves:
                        leaves[key][1][...] += input_grad
                    else:
                        leaves[key] = (tensor, np.array(input_grad))
                elif id(tensor) in grads:
                    grads[id(tensor)] = grads[id(tensor)] + input_grad
                else:
                    grads[id(tensor)] = input_grad
        for tensor, grad in leaves.values():
            if not np.all(np.isfinite(grad)):
                raise NumericError(
                    "non-finite gradient for {}".format(tensor.name)
                )
        return leaves

    # backward rules

    def visit_MatMul(self, node, grad) -> InputGrads:
        """Matrix product."""
        a, b = node.inputs
        return (grad @ b.data.T, a.data.T @ grad)

    def visit_Add(self, node, grad) -> InputGrads:
        """Sum, with row-vector broadcast."""
        a, b = node.inputs
        if b.shape == a.shape:
            return (grad, grad)
        return (grad, grad.sum(axis=0))

    def visit_AddScalar(self, node, grad) -> InputGrads:
        """Constant shift."""
        return (grad,)

    def visit_MulConst(self, node, grad) -> InputGrads:
        """Constant factor."""
        return (grad * node.cache["value"],)

    def visit_Scale(self, node, grad) -> InputGrads:
        """Learnable scalar factor."""
        x, s = node.inputs
        factor = s.data.reshape(())
        return (
            grad * factor,
            np.sum(grad * x.data).reshape(s.shape),
        )

    def visit_RowScale(self, node, grad) -> InputGrads:
        """Row scaling."""
        x, s = node.inputs
        return (grad * s.data[:, None], np.sum(grad * x.data, axis=1))

    def visit_Propagate(self, node, grad) -> InputGrads:
        """Neighbor gather-sum."""
        return (node.cache["operator"].apply_transpose(grad),)

    def visit_ReLU(self, node, grad) -> InputGrads:
        """Rectifier."""
        (x,) = node.inputs
        return (grad * (x.data > 0),)

    def visit_PReLU(self, node, grad) -> InputGrads:
        """Rectifier with learnable slope."""
        x, slope = node.inputs
        positive = x.data > 0
        a = slope.data.reshape(())
        return (
            grad * np.where(positive, 1.0, a),
            np.sum(grad * np.where(positive, 0.0, x.data)).reshape(
                slope.shape
            ),
        )

    def visit_Sigmoid(self, node, grad) -> InputGrads:
        """Logistic function."""
        s = node.output.data
        return (grad * s * (1.0 - s),)

    def visit_BatchNorm(self, node, grad) -> InputGrads:
        """Batch normalization."""
        x, gamma, beta = node.inputs
        xhat = node.cache["xhat"]
        invstd = node.cache["invstd"]
        grad_gamma = np.sum(grad * xhat, axis=0)
        grad_beta = np.sum(grad, axis=0)
        grad_xhat = grad * gamma.data
        if not node.cache["train"]:
            return (grad_xhat * invstd, grad_gamma, grad_beta)
        n = x.shape[0]
        grad_x = (invstd / n) * (
            n * grad_xhat
            - np.sum(grad_xhat, axis=0)
            - xhat * np.sum(grad_xhat * xhat, axis=0)
        )
        return (grad_x, grad_gamma, grad_beta)

    def visit_ReplaceRows(self, node, grad) -> InputGrads:
        """Token substitution."""
        x, token = node.inputs
        rows = node.cache["rows"]
        grad_x = np.array(grad, copy=True)
        grad_x[rows] = 0.0
        grad_token = grad[rows].sum(axis=0).reshape(token.shape)
        return (grad_x, grad_token)

    def visit_TakeRows(self, node, grad) -> InputGrads:
        """Row selection."""
        (x,) = node.inputs
        grad_x = np.zeros_like(x.data)
        np.add.at(grad_x, node.cache["rows"], grad)
        return (grad_x,)

    def visit_ReduceRows(self, node, grad) -> InputGrads:
        """Column-wise reduction."""
        (x,) = node.inputs
        kind = node.cache["kind"]
        if kind == "sum":
            return (np.broadcast_to(grad, x.shape).copy(),)
        if kind == "mean":
            return (np.broadcast_to(grad / x.shape[0], x.shape).copy(),)
        grad_x = np.zeros_like(x.data)
        grad_x[node.cache["argmax"], np.arange(x.shape[1])] = grad
        return (grad_x,)

    def visit_Reshape(self, node, grad) -> InputGrads:
        """Shape change."""
        (x,) = node.inputs
        return (grad.reshape(x.shape),)

    def visit_SumSquares(self, node, grad) -> InputGrads:
        """Sum of squares."""
        (x,) = node.inputs
        return (2.0 * x.data * grad,)

    def visit_SumAll(self, node, grad) -> InputGrads:
        """Sum of entries."""
        (x,) = node.inputs
        return (np.full_like(x.data, grad),)

    def visit_ScaledCosineError(self, node, grad) -> InputGrads:
        """Scaled cosine error."""
        c = node.cache
        m = c["base"].shape[0]
        gamma = c["gamma"]
        grad_cos = -gamma * c["base"] ** (gamma - 1.0) * (grad / m)
        norm = c["pred_norm"]
        large = norm > c["eps"]
        safe_norm = np.where(large, norm, c["eps"])
        direction = c["target_unit"] - np.where(
            large[:, None], c["cosine"][:, None] * c["pred_unit"], 0.0
        )
        return (grad_cos[:, None] * direction / safe_norm[:, None],)
