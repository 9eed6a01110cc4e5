"""Typed run configuration with strict JSON (de)serialization."""

import json
import logging
from dataclasses import MISSING, dataclass, field, fields, is_dataclass
from typing import Any, Dict, Optional

from smae.errors import ConfigError
from smae.graph import Featurization
from smae.masking import MASK_STRATEGIES, MaskSchedule
from smae.scoring import PREDEFINED_METRICS
from smae.scoring.learnable import SCORER_FUNCTIONS, SCORER_LAYERS

logger = logging.getLogger(__name__)

LAYER_TYPES = ("gin", "gcn")
VARIANTS = ("P", "L")
POOLINGS = ("mean", "max", "sum")
DTYPES = ("float64", "float32")

# keys a preset fixes and a config file may not override
ARCHITECTURE_KEYS = ("encoder", "decoder", "variant", "pooling")


def _choice(*choices):
    return {"choices": choices}


def _range(low=None, high=None, low_open=False, high_open=False):
    return {
        "low": low,
        "high": high,
        "low_open": low_open,
        "high_open": high_open,
    }


@dataclass
class EncoderConfig:
    """Encoder architecture."""

    layer_type: str = field(default="gin", metadata=_choice(*LAYER_TYPES))
    num_layers: int = field(default=2, metadata=_range(1))
    hidden: int = field(default=512, metadata=_range(1))


@dataclass
class DecoderConfig:
    """Decoder architecture; its width follows the encoder."""

    layer_type: str = field(default="gin", metadata=_choice(*LAYER_TYPES))
    num_layers: int = field(default=1, metadata=_range(1))


@dataclass
class MaskingConfig:
    """Masking ratio, curriculum and strategy."""

    p: float = field(default=0.5, metadata=_range(0.0, 1.0, True, True))
    beta: float = field(default=0.5, metadata=_range(0.0))
    warmup_ratio: float = field(default=0.0, metadata=_range(0.0, 1.0))
    strategy: str = field(
        default="easy_to_hard", metadata=_choice(*MASK_STRATEGIES)
    )
    noise: bool = True


@dataclass
class FeaturizationConfig:
    """How node features are built from a corpus file."""

    kind: str = field(
        default=Featurization.DEGREE_ONEHOT,
        metadata=_choice(*Featurization.KINDS),
    )
    max_degree: int = field(
        default=Featurization.DEFAULT_MAX_DEGREE, metadata=_range(1)
    )

    def build(self) -> Featurization:
        """Get the featurization record."""
        return Featurization(self.kind, self.max_degree)


@dataclass
class ModelConfig:
    """Every hyper-parameter of a pretraining run."""

    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    masking: MaskingConfig = field(default_factory=MaskingConfig)
    featurization: FeaturizationConfig = field(
        default_factory=FeaturizationConfig
    )
    variant: str = field(default="P", metadata=_choice(*VARIANTS))
    sce_gamma: float = field(default=2.0, metadata=_range(1.0))
    scorer_metric: str = field(
        default="pagerank", metadata=_choice(*PREDEFINED_METRICS)
    )
    alpha: float = field(default=1.0, metadata=_range(0.0))
    scorer_layer: str = field(default="gin", metadata=_choice(*SCORER_LAYERS))
    scorer_function: str = field(
        default="mix", metadata=_choice(*SCORER_FUNCTIONS)
    )
    scorer_hidden: int = field(default=32, metadata=_range(1))
    modulate_at_inference: bool = False
    pooling: str = field(default="mean", metadata=_choice(*POOLINGS))
    lr: float = field(default=0.001, metadata=_range(0.0, low_open=True))
    weight_decay: float = field(default=0.0, metadata=_range(0.0))
    batch_size: int = field(default=32, metadata=_range(1))
    epochs: int = field(default=100, metadata=_range(1))
    seed: int = 0
    dtype: str = field(default="float64", metadata=_choice(*DTYPES))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelConfig":
        """Build from a dictionary; unknown keys and bad values are errors.

        :param data: Possibly partial configuration
        :return: Validated configuration
        """
        return _from_dict(cls, data, "")

    def to_dict(self) -> Dict[str, Any]:
        """Get dictionary representation with every default materialized."""
        return _to_dict(self)

    def to_json(self) -> str:
        """Get canonical JSON text."""
        return json.dumps(self.to_dict(), sort_keys=True)

    def schedule(self) -> MaskSchedule:
        """Get the masking schedule of this run."""
        m = self.masking
        return MaskSchedule(
            m.p, m.beta, self.epochs, m.warmup_ratio, m.strategy, m.noise
        )


def _to_dict(obj) -> Dict[str, Any]:
    ret = {}
    for fld in fields(obj):
        value = getattr(obj, fld.name)
        ret[fld.name] = _to_dict(value) if is_dataclass(value) else value
    return ret


def _check_value(path: str, fld, value: Any) -> Any:
    kind = fld.type
    if isinstance(kind, str):
        kind = {"int": int, "float": float, "bool": bool, "str": str}[kind]
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError('"{}" must be a boolean'.format(path))
    elif kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError('"{}" must be an integer'.format(path))
    elif kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError('"{}" must be a number'.format(path))
        value = float(value)
    elif kind is str:
        if not isinstance(value, str):
            raise ConfigError('"{}" must be a string'.format(path))
    meta = fld.metadata
    if "choices" in meta and value not in meta["choices"]:
        raise ConfigError(
            '"{}" must be one of {}, got "{}"'.format(
                path, ", ".join(meta["choices"]), value
            )
        )
    low, high = meta.get("low"), meta.get("high")
    if low is not None and (
        value < low or (meta["low_open"] and value == low)
    ):
        raise ConfigError(
            '"{}" must be {} {}, got {}'.format(
                path, ">" if meta["low_open"] else ">=", low, value
            )
        )
    if high is not None and (
        value > high or (meta["high_open"] and value == high)
    ):
        raise ConfigError(
            '"{}" must be {} {}, got {}'.format(
                path, "<" if meta["high_open"] else "<=", high, value
            )
        )
    return value


def _from_dict(cls, data: Any, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(
            '"{}" must be an object'.format(prefix.rstrip(".") or "config")
        )
    known = {fld.name: fld for fld in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(
            "unknown configuration key(s): {}".format(
                ", ".join(prefix + key for key in unknown)
            )
        )
    kwargs = {}
    for name, fld in known.items():
        if name not in data:
            continue
        path = prefix + name
        if fld.default_factory is not MISSING:
            kwargs[name] = _from_dict(
                fld.default_factory, data[name], path + "."
            )
        else:
            kwargs[name] = _check_value(path, fld, data[name])
    return cls(**kwargs)


def merge_dicts(
    base: Dict[str, Any], update: Dict[str, Any]
) -> Dict[str, Any]:
    """Recursively merge ``update`` into a copy of ``base``."""
    ret = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(ret.get(key), dict):
            ret[key] = merge_dicts(ret[key], value)
        else:
            ret[key] = value
    return ret


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a JSON configuration file.

    :param path: File path
    :return: Raw dictionary
    """
    try:
        with open(path, "r") as config_file:
            data = json.load(config_file)
    except OSError as ex:
        raise ConfigError(
            "cannot read config {}: {}".format(path, ex), exception=ex
        )
    except ValueError as ex:
        raise ConfigError(
            "config {} is not valid JSON: {}".format(path, ex), exception=ex
        )
    if not isinstance(data, dict):
        raise ConfigError("config {} must hold a JSON object".format(path))
    return data


def resolve_config(
    preset: Optional[str] = None,
    config: Optional[Dict[str, Any]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> ModelConfig:
    """Resolve defaults, then a preset, then a config file, then overrides.

    :param preset: Preset name
    :param config: Contents of a config file
    :param overrides: Values from command line flags
    :return: Validated configuration
    """
    from smae.config.presets import preset as get_preset

    resolved: Dict[str, Any] = {}
    if preset is not None:
        resolved = get_preset(preset)
        if config:
            clashing = [key for key in ARCHITECTURE_KEYS if key in config]
            if clashing:
                raise ConfigError(
                    "config file sets {} which preset {} fixes".format(
                        ", ".join(clashing), preset
                    )
                )
    if config:
        resolved = merge_dicts(resolved, config)
    if overrides:
        resolved = merge_dicts(resolved, overrides)
    result = ModelConfig.from_dict(resolved)
    logger.debug("resolved configuration: %s", result.to_json())
    return result
