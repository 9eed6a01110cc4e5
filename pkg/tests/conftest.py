"""Shared fixtures."""

import logging

import numpy as np
import pytest

from smae.config import ModelConfig
from smae.graph import Graph
from smae.graph.synthetic import SyntheticSpec, generate_synthetic_corpus


@pytest.fixture
def path3():
    """Get the path a-b-c."""
    return Graph(3, [(0, 1), (1, 2)])


@pytest.fixture
def triangle():
    """Get the 3-cycle."""
    return Graph(3, [(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def k4():
    """Get the complete graph on 4 nodes."""
    return Graph(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])


@pytest.fixture
def star():
    """Get a star with center 0 and 4 leaves."""
    return Graph(5, [(0, leaf) for leaf in range(1, 5)])


@pytest.fixture
def rng():
    """Get a seeded random stream."""
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_corpus():
    """Get a tiny labelled synthetic corpus."""
    return generate_synthetic_corpus(SyntheticSpec(4, 6, "cycle"), 3)


@pytest.fixture
def tiny_config():
    """Get a configuration small enough for quick training."""

    def _build(**overrides):
        data = {
            "encoder": {"layer_type": "gin", "num_layers": 1, "hidden": 8},
            "decoder": {"layer_type": "gin", "num_layers": 1},
            "epochs": 2,
            "batch_size": 4,
            "scorer_hidden": 4,
            "seed": 5,
        }
        data.update(overrides)
        return ModelConfig.from_dict(data)

    return _build


@pytest.fixture(autouse=True)
def reset_logging():
    """Undo the command-line logging setup after each test."""
    yield
    root = logging.getLogger("smae")
    root.handlers[:] = []
    root.setLevel(logging.NOTSET)
    root.propagate = True
    logging.getLogger("smae.tensor.trace").setLevel(logging.NOTSET)
