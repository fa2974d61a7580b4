"""Sectioned INI configuration for the pipeline and its models.

One file drives every command: a [pipeline] section names the CSV, the
output directory, the configuration to run, and the global seed, while
optional [vae]/[sae]/[classifier]/[joint] sections override model
hyperparameters. Unknown sections and keys are rejected outright so a
typo cannot silently fall back to a default. Relative paths resolve
against the config file's directory.
"""

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .classifiers import ClassifierConfig
from .errors import ConfigError
from .features import SaeConfig
from .joint import JointConfig
from .oversample import VaeConfig
from .preprocessing import make_normalizer

CONFIGURATION_NAMES = ("mlp", "sae_mlp", "sae_cnn", "sae_with_mlp", "sae_with_cnn")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one run needs: paths, seed, and per-model settings."""

    csv: str
    out_dir: str = "artifacts"
    seed: int = 0
    normalizer: str = "minmax"
    configuration: str = "sae_with_cnn"
    split_ratio: float = 0.9
    vae: VaeConfig = field(default_factory=VaeConfig)
    sae: SaeConfig = field(default_factory=SaeConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    joint: JointConfig = field(default_factory=JointConfig)

    def __post_init__(self):
        if self.configuration not in CONFIGURATION_NAMES:
            raise ConfigError(
                f"unknown configuration {self.configuration!r}; "
                f"choose from {CONFIGURATION_NAMES}"
            )
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError(
                f"split ratio must be in (0, 1), got {self.split_ratio}"
            )
        make_normalizer(self.normalizer)  # rejects unknown kinds


def _parse_int(raw, where):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{where} must be an integer, got {raw!r}") from None


def _parse_float(raw, where):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{where} must be a number, got {raw!r}") from None


def _parse_int_tuple(raw, where):
    parts = [p.strip() for p in raw.split(",")]
    return tuple(_parse_int(p, where) for p in parts if p)


def _parse_str(raw, where):
    return raw.strip()


#: section -> {ini key: (dataclass field, parser)}
_SECTION_KEYS = {
    "pipeline": {
        "csv": ("csv", _parse_str),
        "out_dir": ("out_dir", _parse_str),
        "seed": ("seed", _parse_int),
        "normalizer": ("normalizer", _parse_str),
        "configuration": ("configuration", _parse_str),
        "split_ratio": ("split_ratio", _parse_float),
    },
    "vae": {
        "d_z": ("d_z", _parse_int),
        "hidden": ("hidden", _parse_int_tuple),
        "epochs": ("epochs", _parse_int),
        "batch_size": ("batch_size", _parse_int),
        "lr": ("lr", _parse_float),
        "kl_weight": ("kl_weight", _parse_float),
    },
    "sae": {
        "lambda": ("lambda_", _parse_float),
        "hidden": ("hidden", _parse_int_tuple),
        "latent_dim": ("latent_dim", _parse_int),
        "epochs": ("epochs", _parse_int),
        "batch_size": ("batch_size", _parse_int),
        "lr": ("lr", _parse_float),
        "penalty_target": ("penalty_target", _parse_str),
    },
    "classifier": {
        "epochs": ("epochs", _parse_int),
        "batch_size": ("batch_size", _parse_int),
        "lr": ("lr", _parse_float),
        "dropout": ("dropout", _parse_float),
        "hidden": ("hidden", _parse_int_tuple),
        "threshold": ("threshold", _parse_float),
    },
    # No head key: the configuration name (sae_with_mlp vs sae_with_cnn)
    # selects the joint head, so a separate key could only contradict it.
    "joint": {
        "alpha": ("alpha", _parse_float),
        "beta": ("beta", _parse_float),
        "lambda": ("lambda_", _parse_float),
        "hidden": ("hidden", _parse_int_tuple),
        "latent_dim": ("latent_dim", _parse_int),
        "head_hidden": ("head_hidden", _parse_int_tuple),
        "head_dropout": ("head_dropout", _parse_float),
        "epochs": ("epochs", _parse_int),
        "batch_size": ("batch_size", _parse_int),
        "lr": ("lr", _parse_float),
        "threshold": ("threshold", _parse_float),
    },
}

_SECTION_TYPES = {
    "vae": VaeConfig,
    "sae": SaeConfig,
    "classifier": ClassifierConfig,
    "joint": JointConfig,
}


def _section_kwargs(parser, section):
    """Validate and parse one section into constructor kwargs."""
    known = _SECTION_KEYS[section]
    kwargs = {}
    for key, raw in parser[section].items():
        if key not in known:
            raise ConfigError(
                f"unknown key {key!r} in [{section}]; "
                f"valid keys: {sorted(known)}"
            )
        name, parse = known[key]
        kwargs[name] = parse(raw, f"{key} in [{section}]")
    return kwargs


def load_config(path):
    """Parse an INI file into a validated PipelineConfig."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(
        interpolation=None, default_section="", delimiters=("=",)
    )
    parser.optionxform = str.lower
    try:
        parser.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    unknown = set(parser.sections()) - set(_SECTION_KEYS)
    if unknown:
        raise ConfigError(
            f"unknown section(s) {sorted(unknown)}; "
            f"valid sections: {sorted(_SECTION_KEYS)}"
        )
    if "pipeline" not in parser:
        raise ConfigError(f"{path}: missing required [pipeline] section")

    kwargs = _section_kwargs(parser, "pipeline")
    if "csv" not in kwargs:
        raise ConfigError(f"{path}: [pipeline] must set csv")

    # Seeds are derived from the single global seed at run time, so the
    # model sections deliberately have no seed key of their own.
    for section, config_type in _SECTION_TYPES.items():
        if section in parser:
            kwargs[section] = config_type(**_section_kwargs(parser, section))

    base = path.resolve().parent
    csv_path = Path(kwargs["csv"])
    if not csv_path.is_absolute():
        csv_path = base / csv_path
    if not csv_path.is_file():
        raise ConfigError(f"csv path not found: {csv_path}")
    kwargs["csv"] = str(csv_path)

    out_dir = Path(kwargs.get("out_dir", "artifacts"))
    if not out_dir.is_absolute():
        out_dir = base / out_dir
    kwargs["out_dir"] = str(out_dir)

    return PipelineConfig(**kwargs)
