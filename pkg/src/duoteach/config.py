"""Experiment configuration: one JSON document covering dataset, masking,
graph enhancement, distillation, training and output, plus deterministic
seed fan-out from the single global seed.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .distill import DistillConfig
from .errors import ConfigError
from .graphs import IncompleteGraph, MaskSpec, load_edgelist, load_planetoid
from .ppr import PprConfig

DATA_ROOT_ENV = "DUOTEACH_DATA_ROOT"
OUT_ROOT_ENV = "DUOTEACH_OUT_ROOT"

VARIANT_MODES = (
    "full",
    "singleT",
    "online",
    "no_teacher_str",
    "no_teacher_fea",
    "no_distill_log",
    "no_distill_mid",
    "student_only",
)


def derive_seed(root: int, *labels) -> int:
    """Stable 63-bit sub-seed from the global seed and a label path."""
    h = hashlib.sha256(str(int(root)).encode())
    for lab in labels:
        h.update(b"/")
        h.update(str(lab).encode())
    return int.from_bytes(h.digest()[:8], "big") >> 1


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.001              # teacher learning rate
    weight_decay: float = 0.0005
    max_epochs: int = 500
    patience: int = 100            # epochs without validation improvement
    student_lr: float | None = None  # None -> per-backbone default
    teacher_max_epochs: int | None = None  # None -> max_epochs
    teacher_patience: int | None = None    # None -> patience

    def teacher_budget(self) -> "TrainConfig":
        """Schedule used for teacher pretraining (teachers converge long
        before the wide imputation tables stop paying per-epoch cost)."""
        return dataclasses.replace(
            self,
            max_epochs=self.max_epochs if self.teacher_max_epochs is None else self.teacher_max_epochs,
            patience=self.patience if self.teacher_patience is None else self.teacher_patience,
        )

    def validate(self) -> None:
        if self.lr <= 0:
            raise ConfigError(f"train.lr must be positive, got {self.lr}")
        if self.weight_decay < 0:
            raise ConfigError(f"train.weight_decay must be >= 0, got {self.weight_decay}")
        if self.max_epochs < 0:
            raise ConfigError(f"train.max_epochs must be >= 0, got {self.max_epochs}")
        if self.patience < 1:
            raise ConfigError(f"train.patience must be >= 1, got {self.patience}")
        if self.student_lr is not None and self.student_lr <= 0:
            raise ConfigError(f"train.student_lr must be positive, got {self.student_lr}")
        if self.teacher_max_epochs is not None and self.teacher_max_epochs < 0:
            raise ConfigError(
                f"train.teacher_max_epochs must be >= 0, got {self.teacher_max_epochs}")
        if self.teacher_patience is not None and self.teacher_patience < 1:
            raise ConfigError(
                f"train.teacher_patience must be >= 1, got {self.teacher_patience}")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = ""
    data_root: str | None = None   # directory of on-disk datasets; None -> built-in generator
    mask: MaskSpec = field(default_factory=MaskSpec)
    ppr: PprConfig = field(default_factory=PprConfig)
    distill: DistillConfig = field(default_factory=DistillConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    backbone: str = "gcn"
    mode: str = "full"
    out_dir: str = "results"
    seed: int = 0
    n_splits: int = 10
    fixed_mask: bool = False       # one mask shared by all splits
    hidden: int = 64               # student and structure-teacher width
    feature_hidden: int = 512      # feature-teacher width
    dropout: float = 0.5
    jobs: int = 1

    def validate(self) -> None:
        if not self.dataset:
            raise ConfigError("dataset: a dataset name is required")
        self.mask.validate()
        self.ppr.validate()
        self.distill.validate()
        self.train.validate()
        from .models import STUDENT_BACKBONES

        if self.backbone.lower() not in STUDENT_BACKBONES:
            raise ConfigError(
                f"backbone: unknown value {self.backbone!r}; "
                f"expected one of {sorted(STUDENT_BACKBONES)}"
            )
        if self.mode not in VARIANT_MODES:
            raise ConfigError(f"mode: unknown value {self.mode!r}; expected one of {VARIANT_MODES}")
        if self.n_splits < 1:
            raise ConfigError(f"n_splits must be >= 1, got {self.n_splits}")
        if self.hidden < 1 or self.feature_hidden < 1:
            raise ConfigError("hidden widths must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0,1), got {self.dropout}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")


_SECTION_TYPES = {
    "mask": MaskSpec,
    "ppr": PprConfig,
    "distill": DistillConfig,
    "train": TrainConfig,
}


def _build_section(cls, blob: dict, prefix: str):
    names = {f.name for f in dataclasses.fields(cls)}
    for key in blob:
        if key not in names:
            raise ConfigError(f"unknown config field {prefix}{key!r}")
    return cls(**blob)


def config_from_dict(blob: dict) -> ExperimentConfig:
    blob = dict(blob)
    kwargs = {}
    for section, cls in _SECTION_TYPES.items():
        part = blob.pop(section, {})
        if not isinstance(part, dict):
            raise ConfigError(f"config section {section!r} must be an object")
        kwargs[section] = _build_section(cls, part, f"{section}.")
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    for key in blob:
        if key not in names:
            raise ConfigError(f"unknown config field {key!r}")
    try:
        return ExperimentConfig(**blob, **kwargs)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = dataclasses.asdict(cfg)
    return out


def load_config(path, overrides: list[str] | None = None) -> ExperimentConfig:
    try:
        with open(path) as f:
            blob = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {path}: {e}") from None
    if not isinstance(blob, dict):
        raise ConfigError("config root must be a JSON object")
    for item in overrides or []:
        apply_override(blob, item)
    cfg = config_from_dict(blob)
    cfg.validate()
    return cfg


def apply_override(blob: dict, item: str) -> None:
    """In-place `dotted.path=value` override; values parse as JSON when they
    can, bare strings otherwise."""
    if "=" not in item:
        raise ConfigError(f"override must look like key=value, got {item!r}")
    dotted, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = blob
    parts = dotted.strip().split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path {dotted!r} crosses a non-object value")
    node[parts[-1]] = value


# ---------------------------------------------------------------------------
# dataset resolution


def data_root_of(cfg: ExperimentConfig) -> str | None:
    return os.environ.get(DATA_ROOT_ENV) or cfg.data_root


def resolve_dataset(cfg: ExperimentConfig) -> IncompleteGraph:
    """On-disk datasets win when a data root is configured; otherwise fall
    back to the built-in deterministic generator for known dataset names."""
    root = data_root_of(cfg)
    name = cfg.dataset
    if root:
        base = Path(root)
        for prefix in (base / name / name, base / name):
            content, cites = prefix.with_suffix(".content"), prefix.with_suffix(".cites")
            if content.exists() and cites.exists():
                return load_planetoid(content, cites)
        for folder in (base / name, base):
            edges = folder / "edges.txt"
            feats = folder / "features.csv"
            labels = folder / "labels.csv"
            if edges.exists() and feats.exists() and labels.exists():
                return load_edgelist(edges, feats, labels)
        raise ConfigError(
            f"data_root: no usable files for dataset {name!r} under {root} "
            "(need <name>.content + <name>.cites, or edges.txt + features.csv + labels.csv)"
        )
    from .synth import SYNTHETIC_DATASETS, make_synthetic

    if name in SYNTHETIC_DATASETS:
        return make_synthetic(name)
    raise ConfigError(
        f"dataset: {name!r} is not a built-in dataset and no data_root was given; "
        f"built-ins: {sorted(SYNTHETIC_DATASETS)}"
    )
