"""Named hyper-parameter presets of the unsupervised benchmarks.

``<dataset>`` selects predefined (PageRank) scoring, ``<dataset>-l`` the
learnable scorer.
"""

import copy
from typing import Any, Dict, List

from smae.errors import ConfigError

DATASETS = (
    "imdb-b",
    "imdb-m",
    "proteins",
    "collab",
    "mutag",
    "reddit-b",
    "nci1",
)

LABELLED_NODES = ("mutag", "proteins", "nci1")

EPOCHS = {
    "imdb-b": 60,
    "imdb-m": 50,
    "proteins": 100,
    "collab": 20,
    "mutag": 20,
    "reddit-b": 100,
    "nci1": 300,
}

# mask ratio, hidden, layer type, layers, lr, batch size, pooling, beta
_PREDEFINED = {
    "imdb-b": (0.5, 512, "gin", 2, 0.00015, 32, "mean", 0.25),
    "imdb-m": (0.25, 512, "gin", 2, 0.005, 32, "mean", 0.85),
    "proteins": (0.25, 512, "gin", 3, 0.00015, 32, "max", 0.5),
    "collab": (0.75, 256, "gin", 2, 0.00015, 32, "max", 0.5),
    "mutag": (0.9, 32, "gin", 5, 0.0005, 64, "sum", 0.85),
    "reddit-b": (0.75, 512, "gcn", 2, 0.005, 8, "max", 0.25),
    "nci1": (0.3, 512, "gin", 3, 0.005, 16, "sum", 0.25),
}

# mask ratio, layers, beta, alpha, warm-up, scorer layer
_LEARNABLE = {
    "imdb-b": (0.5, 2, 0.75, 0.1, 0.0, "gin"),
    "imdb-m": (0.25, 3, 0.75, 0.1, 0.0, "gin"),
    "proteins": (0.25, 3, 0.85, 100.0, 0.2, "gin"),
    "collab": (0.5, 2, 0.5, 100.0, 0.0, "gin"),
    "mutag": (0.3, 5, 0.25, 10.0, 0.0, "gcn"),
    "reddit-b": (0.75, 2, 0.25, 0.1, 0.0, "gin"),
    "nci1": (0.25, 3, 0.85, 10.0, 0.0, "gin"),
}


def _featurization(dataset: str) -> Dict[str, Any]:
    if dataset in LABELLED_NODES:
        return {"kind": "label_onehot"}
    return {"kind": "degree_onehot", "max_degree": 64}


def _predefined(dataset: str) -> Dict[str, Any]:
    p, hidden, layer, layers, lr, batch, pooling, beta = _PREDEFINED[dataset]
    return {
        "variant": "P",
        "scorer_metric": "pagerank",
        "encoder": {
            "layer_type": layer,
            "num_layers": layers,
            "hidden": hidden,
        },
        "decoder": {"layer_type": layer, "num_layers": 1},
        "masking": {"p": p, "beta": beta, "warmup_ratio": 0.0},
        "featurization": _featurization(dataset),
        "lr": lr,
        "weight_decay": 0.0,
        "batch_size": batch,
        "pooling": pooling,
        "epochs": EPOCHS[dataset],
    }


def _learnable(dataset: str) -> Dict[str, Any]:
    ret = _predefined(dataset)
    p, layers, beta, alpha, warmup, scorer_layer = _LEARNABLE[dataset]
    ret["variant"] = "L"
    ret["encoder"]["num_layers"] = layers
    ret["masking"] = {"p": p, "beta": beta, "warmup_ratio": warmup}
    ret["alpha"] = alpha
    ret["scorer_layer"] = scorer_layer
    return ret


PRESETS: Dict[str, Dict[str, Any]] = {}
for _name in DATASETS:
    PRESETS[_name] = _predefined(_name)
    PRESETS[_name + "-l"] = _learnable(_name)


def preset_names() -> List[str]:
    """Get available preset names."""
    return sorted(PRESETS)


def preset(name: str) -> Dict[str, Any]:
    """Get a preset as a partial configuration dictionary.

    :param name: Preset name
    :return: A fresh copy of the preset
    """
    if name not in PRESETS:
        raise ConfigError(
            'unknown preset "{}"; available: {}'.format(
                name, ", ".join(preset_names())
            )
        )
    return copy.deepcopy(PRESETS[name])
