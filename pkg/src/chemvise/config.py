"""Configuration: JSON document with sections
{simulator, targets, augment, embedder, classify, harness}.

Unknown keys are rejected. Defaults are the desk-scale acceptance
configuration; the hyperparameter grids used in the source experiments
are exposed as PAPER_NN_GRID / PAPER_SVC_GRID and can be written into the
harness section verbatim for a full-scale run.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, ParseError

ENV_SEED = "CHEMVISE_SEED"


@dataclass
class SimulatorConfig:
    analytes: tuple = ("A", "B", "C", "D")
    target_analyte: str = "A"
    concentrations: tuple = (0.125, 0.15, 0.2, 0.25)
    n_replicates: int = 5
    n_val_replicates: int = 1
    n_holdout_doubles: int = 39
    sample_rate_hz: float = 50.0
    baseline_s: float = 1.0
    exposure_s: float = 5.0
    desorption_s: float = 4.0
    pre_onset_s: float = 0.4
    noise_sigma: float = 0.05
    interference_gamma: float = 0.25
    saturation: str = "identity"
    saturation_scale: float = 1.0
    n_sensors: int = 8
    sensor_seed: int = 7
    affinity_low: float = 0.5
    affinity_high: float = 1.6
    tau_rise_s: tuple = (0.7, 1.6, 2.2, 3.0)
    tau_decay_s: tuple = (1.5, 1.8, 2.1, 2.4)

    def validate(self):
        if len(set(self.analytes)) != len(self.analytes) or not self.analytes:
            raise ConfigError("analytes must be non-empty and distinct")
        if self.target_analyte not in self.analytes:
            raise ConfigError(
                f"target_analyte {self.target_analyte!r} not in analytes {self.analytes}")
        if len(self.tau_rise_s) != len(self.analytes) or len(self.tau_decay_s) != len(self.analytes):
            raise ConfigError("tau_rise_s and tau_decay_s need one entry per analyte")
        if not all(0 < c <= 1 for c in self.concentrations):
            raise ConfigError("concentrations must lie in (0, 1]")
        if self.n_sensors < 1 or self.n_replicates < 1 or self.n_holdout_doubles < 1:
            raise ConfigError("n_sensors, n_replicates, n_holdout_doubles must be positive")
        if not 0 <= self.pre_onset_s < self.baseline_s:
            raise ConfigError("pre_onset_s must be non-negative and inside the baseline phase")


@dataclass
class TargetsConfig:
    dimension: int = 512
    kind: str = "semantic"
    n_clusters: int = 2
    cluster_spread: float = 0.005
    semantic_csv: str | None = None
    space_seed: int = 11

    def validate(self):
        if self.kind not in ("semantic", "one_hot", "simplex"):
            raise ConfigError(f"targets.kind must be semantic|one_hot|simplex, got {self.kind!r}")
        if self.dimension < 1 or self.n_clusters < 1:
            raise ConfigError("dimension and n_clusters must be positive")
        if self.cluster_spread < 0:
            raise ConfigError("cluster_spread must be >= 0")


@dataclass
class AugmentConfig:
    lambda_min: float = 0.3
    lambda_max: float = 0.7
    mix_probability: float = 0.5
    head_mix_ratio: float = 1.0
    augment_baselines: bool = True

    def validate(self):
        if not 0 <= self.lambda_min <= self.lambda_max <= 1:
            raise ConfigError("need 0 <= lambda_min <= lambda_max <= 1")
        if not 0 <= self.mix_probability <= 1:
            raise ConfigError("mix_probability must be in [0, 1]")
        if self.head_mix_ratio < 0:
            raise ConfigError("head_mix_ratio must be >= 0")


@dataclass
class EmbedderConfig:
    width: int = 128
    learning_rate: float = 2e-3
    epochs: int = 1000
    batch_size: int = 16
    n_hidden_layers: int = 3

    def validate(self):
        if min(self.width, self.epochs, self.batch_size) < 1 or self.n_hidden_layers < 0:
            raise ConfigError("embedder sizes must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")


@dataclass
class ClassifyConfig:
    svc_c: float = 0.004
    svc_class_weight: float = 2.0
    svc_steps: int = 50_000
    knn_k: int = 5

    def validate(self):
        if self.svc_c <= 0 or self.svc_class_weight < 1 or self.svc_steps < 1:
            raise ConfigError("invalid SVC settings")
        if self.knn_k < 1 or self.knn_k % 2 == 0:
            raise ConfigError("knn_k must be a positive odd integer")


@dataclass
class NNGrid:
    width: tuple = (64, 128)
    learning_rate: tuple = (1e-3, 3e-3)
    epochs: tuple = (120,)
    batch_size: tuple = (16, 32)

    def validate(self):
        for name in ("width", "learning_rate", "epochs", "batch_size"):
            values = getattr(self, name)
            if not values:
                raise ConfigError(f"grid list {name} is empty")


@dataclass
class SVCGrid:
    c_low: float = 1e-4
    c_high: float = 8e-3
    class_weight: tuple = (1.0, 2.0, 4.0)

    def validate(self):
        if not 0 < self.c_low <= self.c_high:
            raise ConfigError("need 0 < c_low <= c_high")
        if not self.class_weight:
            raise ConfigError("class_weight list is empty")


# Grids of the source experiments (full-scale protocol). The "Kernel
# Degree" line of the source SVC grid has no effect for a linear kernel
# and is not represented.
PAPER_NN_GRID = NNGrid(
    width=(128, 512, 1024, 2048, 4096, 8192),
    learning_rate=(1e-7, 5e-7, 1e-6, 5e-6, 1e-5),
    epochs=(1000, 2000, 4000),
    batch_size=(4, 8, 16, 32),
)
PAPER_SVC_GRID = SVCGrid(c_low=1e-4, c_high=8e-3, class_weight=(1.0, 2.0, 4.0))
PAPER_N_FOLDS = 5


@dataclass
class HarnessConfig:
    master_seed: int = 20260809
    n_repeats: int = 5
    n_folds: int = 3
    search_budget: int = 2
    window_lengths_s: tuple = (2.4, 2.667, 2.933, 3.2, 3.467, 3.733, 4.0)
    representation_window_s: float = 4.0
    dataset_dir: str | None = None
    chemvise_grid: NNGrid = field(default_factory=NNGrid)
    ffnn_grid: NNGrid = field(default_factory=NNGrid)
    svc_grid: SVCGrid = field(default_factory=SVCGrid)

    def validate(self):
        if self.n_folds < 2:
            raise ConfigError("n_folds must be >= 2")
        if self.search_budget < 1:
            raise ConfigError("search_budget must be >= 1")
        if self.n_repeats < 1:
            raise ConfigError("n_repeats must be >= 1")
        if not self.window_lengths_s:
            raise ConfigError("window_lengths_s is empty")
        self.chemvise_grid.validate()
        self.ffnn_grid.validate()
        self.svc_grid.validate()


@dataclass
class Config:
    simulator: SimulatorConfig = field(default_factory=SimulatorConfig)
    targets: TargetsConfig = field(default_factory=TargetsConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    classify: ClassifyConfig = field(default_factory=ClassifyConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)

    def validate(self):
        for section in dataclasses.fields(self):
            getattr(self, section.name).validate()
        return self


def _coerce(dc_type, data, path):
    """Build a dataclass from a dict, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(dc_type)
    names = {f.name for f in dataclasses.fields(dc_type)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown config key(s): "
                          + ", ".join(f"{path}.{k}" for k in sorted(unknown)))
    kwargs = {}
    for f in dataclasses.fields(dc_type):
        if f.name not in data:
            continue
        value = data[f.name]
        hint = hints[f.name]
        if dataclasses.is_dataclass(hint):
            kwargs[f.name] = _coerce(hint, value, f"{path}.{f.name}")
        elif isinstance(value, list):
            kwargs[f.name] = tuple(value)
        else:
            kwargs[f.name] = value
    return dc_type(**kwargs)


def config_from_dict(data: dict) -> Config:
    cfg = _coerce(Config, data, "config")
    cfg.validate()
    return cfg


def config_to_dict(cfg: Config) -> dict:
    def clean(obj):
        if dataclasses.is_dataclass(obj):
            return {f.name: clean(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        if isinstance(obj, tuple):
            return [clean(v) for v in obj]
        return obj

    return clean(cfg)


def load_config(path) -> Config:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    return config_from_dict(data)


def save_config(cfg: Config, path) -> None:
    Path(path).write_text(
        json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")


def default_config() -> Config:
    return Config().validate()


def config_sha256(cfg: Config) -> str:
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def resolve_master_seed(cfg: Config) -> int:
    """Harness master seed, overridable via CHEMVISE_SEED."""
    raw = os.environ.get(ENV_SEED)
    if raw is None or raw.strip() == "":
        return int(cfg.harness.master_seed)
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{ENV_SEED} must be an integer, got {raw!r}") from None
