"""Parameter storage and initialization."""

from collections import OrderedDict
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from smae.errors import DataError, ErrorDescriptor, ErrorGeneratorMixin
from smae.tensor import Tensor


class StoreErrorDescriptor(ErrorDescriptor):
    """Error descriptor."""

    def __init__(self, *args):
        """Initialize.

        :param args: Any other ErrorDescriptor arguments
        """
        super().__init__(*args, exception_class=DataError)


class AdamState:
    """Adam moments of one parameter."""

    __slots__ = ("m", "v", "step")

    def __init__(self, shape: Tuple[int, ...], dtype=np.float64):
        """Initialize.

        :param shape: Parameter shape
        :param dtype: Moment dtype
        """
        self.m = np.zeros(shape, dtype=dtype)
        self.v = np.zeros(shape, dtype=dtype)
        self.step = 0


class ParamStore(ErrorGeneratorMixin):
    """Named learnable tensors plus non-learnable buffers.

    Insertion order is preserved and is the order used for checkpoints and
    optimizer updates.
    """

    STORE_ERR_DUPLICATE = 300
    STORE_ERR_MISSING = 301
    STORE_ERR_SHAPE = 302
    _ERRORS = {
        STORE_ERR_DUPLICATE: StoreErrorDescriptor(
            STORE_ERR_DUPLICATE,
            "Duplicate name",
            'tensor "{name}" already exists',
        ),
        STORE_ERR_MISSING: StoreErrorDescriptor(
            STORE_ERR_MISSING,
            "Missing tensor",
            'no tensor named "{name}"',
        ),
        STORE_ERR_SHAPE: StoreErrorDescriptor(
            STORE_ERR_SHAPE,
            "Shape mismatch",
            'tensor "{name}" has shape {got}, expected {want}',
        ),
    }

    def __init__(self, dtype=np.float64):
        """Initialize.

        :param dtype: Dtype of all stored tensors
        """
        self._dtype = np.dtype(dtype)
        self._params: Dict[str, Tensor] = OrderedDict()
        self._buffers: Dict[str, np.ndarray] = OrderedDict()
        self._adam: Dict[str, AdamState] = {}

    @property
    def dtype(self):
        """Get dtype."""
        return self._dtype

    def add_param(self, name: str, data: np.ndarray) -> Tensor:
        """Add a learnable tensor.

        :param name: Unique name
        :param data: Initial value
        :return: The parameter tensor
        """
        if name in self._params or name in self._buffers:
            raise self.get_error_from_code(self.STORE_ERR_DUPLICATE, name=name)
        tensor = Tensor(
            np.array(data, dtype=self._dtype),
            requires_grad=True,
            name=name,
        )
        self._params[name] = tensor
        self._adam[name] = AdamState(tensor.shape, self._dtype)
        return tensor

    def add_buffer(self, name: str, data: np.ndarray) -> np.ndarray:
        """Add a non-learnable array.

        :param name: Unique name
        :param data: Initial value
        :return: The stored array
        """
        if name in self._params or name in self._buffers:
            raise self.get_error_from_code(self.STORE_ERR_DUPLICATE, name=name)
        self._buffers[name] = np.array(data, dtype=self._dtype)
        return self._buffers[name]

    def __getitem__(self, name: str) -> Tensor:
        """Get a parameter."""
        if name not in self._params:
            raise self.get_error_from_code(self.STORE_ERR_MISSING, name=name)
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        """Check whether a parameter or buffer exists."""
        return name in self._params or name in self._buffers

    def buffer(self, name: str) -> np.ndarray:
        """Get a buffer."""
        if name not in self._buffers:
            raise self.get_error_from_code(self.STORE_ERR_MISSING, name=name)
        return self._buffers[name]

    def set_buffer(self, name: str, value: np.ndarray):
        """Overwrite a buffer in place.

        :param name: Buffer name
        :param value: New value, same shape
        """
        current = self.buffer(name)
        value = np.asarray(value)
        if value.shape != current.shape:
            raise self.get_error_from_code(
                self.STORE_ERR_SHAPE,
                name=name,
                got=value.shape,
                want=current.shape,
            )
        current[...] = value

    def set_param(self, name: str, value: np.ndarray):
        """Overwrite a parameter value in place.

        :param name: Parameter name
        :param value: New value, same shape
        """
        current = self[name]
        value = np.asarray(value)
        if value.shape != current.shape:
            raise self.get_error_from_code(
                self.STORE_ERR_SHAPE,
                name=name,
                got=value.shape,
                want=current.shape,
            )
        current.data[...] = value

    def params(self) -> Iterator[Tuple[str, Tensor]]:
        """Iterate over (name, parameter)."""
        return iter(self._params.items())

    def buffers(self) -> Iterator[Tuple[str, np.ndarray]]:
        """Iterate over (name, buffer)."""
        return iter(self._buffers.items())

    def param_names(self) -> List[str]:
        """Get parameter names."""
        return list(self._params)

    def adam_state(self, name: str) -> AdamState:
        """Get Adam state of a parameter."""
        return self._adam[name]

    def zero_grad(self):
        """Clear all gradients."""
        for tensor in self._params.values():
            tensor.zero_grad()

    def parameter_count(self) -> int:
        """Get total number of learnable scalars."""
        return int(sum(t.data.size for t in self._params.values()))

    def quantize(self):
        """Round every tensor to 32-bit precision, in place.

        After this, saving and loading a checkpoint reproduces the values
        exactly.
        """
        for tensor in self._params.values():
            tensor.data[...] = tensor.data.astype(np.float32)
        for array in self._buffers.values():
            array[...] = array.astype(np.float32)


def glorot_uniform(
    rng: np.random.Generator, fan_in: int, fan_out: int
) -> np.ndarray:
    """Draw a Glorot-uniform weight matrix.

    :param rng: Random stream
    :param fan_in: Input width
    :param fan_out: Output width
    :return: fan_in x fan_out matrix
    """
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_linear(
    store: ParamStore,
    prefix: str,
    fan_in: int,
    fan_out: int,
    rng: np.random.Generator,
    bias: bool = True,
):
    """Create the parameters of a linear map.

    :param store: Parameter store
    :param prefix: Name prefix
    :param fan_in: Input width
    :param fan_out: Output width
    :param rng: Random stream
    :param bias: Whether to create a bias vector
    """
    store.add_param(prefix + ".weight", glorot_uniform(rng, fan_in, fan_out))
    if bias:
        store.add_param(prefix + ".bias", np.zeros(fan_out))


def init_batchnorm(store: ParamStore, prefix: str, width: int):
    """Create batch normalization scale, shift and running statistics.

    :param store: Parameter store
    :param prefix: Name prefix
    :param width: Number of columns
    """
    store.add_param(prefix + ".gamma", np.ones(width))
    store.add_param(prefix + ".beta", np.zeros(width))
    store.add_buffer(prefix + ".running_mean", np.zeros(width))
    store.add_buffer(prefix + ".running_var", np.ones(width))
