"""
config.py — Pipeline configuration and seed derivation

One JSON file holds every setting, grouped by stage. Every key has a
default, so `{}` is a valid config; unknown keys are rejected so typos do
not silently fall back to defaults.

Usage:
    cfg = PipelineConfig.load("configs/default.json")
    cfg.seed = 11
    seed = derive_seed(cfg.seed, "tck")
    cfg.save("runs/a/config.json")
"""

import json
import logging
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from classifiers.models import CLASSIFIER_ORDER, ClassifierKind, ClassifierSpec
from embedding.tsne import TsneConfig
from mts.dataset import MissingPolicy
from mts.errors import ConfigError
from reduction.kpca import DEFAULT_COEF0, DEFAULT_DEGREE, DEFAULT_GAMMA, KERNELS
from tck.ensemble import SubsetSettings
from tck.gmm import EmSettings

logger = logging.getLogger(__name__)

DR_METHODS = ("pca", "kpca", "ae")
DR_LABELS = {"pca": "PCA", "kpca": "KPCA", "ae": "AE"}


def derive_seed(master: int, stage: str) -> int:
    """A stage's seed: a pure function of the master seed and the stage name."""
    seq = np.random.SeedSequence([int(master), zlib.crc32(stage.encode("utf-8"))])
    return int(seq.generate_state(1)[0])


def _check_keys(cls, data: dict, section: str):
    unknown = set(data) - {f.name for f in fields(cls)}
    if unknown:
        raise ConfigError(f"unknown keys in '{section}': {sorted(unknown)}")


@dataclass
class DataSettings:
    input: Optional[str] = None
    window_len: int = 7
    train_frac: float = 0.7
    balance: bool = True
    missing_policy: str = MissingPolicy.OBSERVED_ZEROS.value

    def validate(self):
        if self.window_len < 1:
            raise ConfigError(f"data.window_len must be >= 1, got {self.window_len}")
        if not 0.0 < self.train_frac < 1.0:
            raise ConfigError(f"data.train_frac must be in (0, 1), got {self.train_frac}")
        try:
            MissingPolicy(self.missing_policy)
        except ValueError:
            raise ConfigError(f"unknown data.missing_policy '{self.missing_policy}'")


@dataclass
class TckSettings:
    C: int = 40
    R: int = 30
    normalize: bool = True
    drop_failed: bool = False
    em: EmSettings = field(default_factory=EmSettings)
    subsets: SubsetSettings = field(default_factory=SubsetSettings)

    def validate(self):
        if self.C < 2 or self.R < 1:
            raise ConfigError(f"tck needs C >= 2 and R >= 1, got C={self.C} R={self.R}")
        self.em.validate()
        self.subsets.validate()

    @classmethod
    def from_dict(cls, data: dict) -> "TckSettings":
        _check_keys(cls, data, "tck")
        data = dict(data)
        em = EmSettings.from_dict(data.pop("em", {}))
        subsets = SubsetSettings.from_dict(data.pop("subsets", {}))
        return cls(em=em, subsets=subsets, **data)


@dataclass
class DimredSettings:
    methods: list = field(default_factory=lambda: list(DR_METHODS))
    pca_variance: float = 0.99
    pca_space: str = "tck"
    kpca_k: int = 50
    kpca_kernel: str = "precomputed"
    kpca_gamma: float = DEFAULT_GAMMA
    kpca_degree: int = DEFAULT_DEGREE
    kpca_coef0: float = DEFAULT_COEF0
    # validation-split tuning; an empty candidate list means the single value above
    tune: bool = True
    validation_frac: float = 0.2
    selection_tolerance: float = 0.0
    pca_variance_candidates: list = field(default_factory=lambda: [0.9, 0.95, 0.99])
    kpca_k_candidates: list = field(default_factory=lambda: [10, 25, 50])
    kpca_gamma_candidates: list = field(default_factory=list)

    def validate(self):
        bad = [m for m in self.methods if m not in DR_METHODS]
        if bad or not self.methods:
            raise ConfigError(f"dimred.methods must be a non-empty subset of {DR_METHODS}, got {self.methods}")
        for v in [self.pca_variance, *self.pca_variance_candidates]:
            if not 0.0 < v <= 1.0:
                raise ConfigError(f"dimred PCA variance must be in (0, 1], got {v}")
        if self.pca_space not in ("tck", "raw"):
            raise ConfigError(f"dimred.pca_space must be 'tck' or 'raw', got '{self.pca_space}'")
        if self.kpca_kernel not in KERNELS:
            raise ConfigError(f"dimred.kpca_kernel must be one of {KERNELS}")
        for k in [self.kpca_k, *self.kpca_k_candidates]:
            if k < 1:
                raise ConfigError(f"dimred KPCA k must be >= 1, got {k}")
        for g in [self.kpca_gamma, *self.kpca_gamma_candidates]:
            if g <= 0.0:
                raise ConfigError(f"dimred KPCA gamma must be > 0, got {g}")
        if not 0.0 < self.validation_frac < 1.0:
            raise ConfigError(f"dimred.validation_frac must be in (0, 1), got {self.validation_frac}")
        if self.selection_tolerance < 0.0:
            raise ConfigError(f"dimred.selection_tolerance must be >= 0, got {self.selection_tolerance}")

    def variance_grid(self) -> list:
        return list(self.pca_variance_candidates) or [self.pca_variance]

    def k_grid(self) -> list:
        return list(self.kpca_k_candidates) or [self.kpca_k]

    def gamma_grid(self) -> list:
        return list(self.kpca_gamma_candidates) or [self.kpca_gamma]


@dataclass
class AutoencoderSettings:
    hidden: list = field(default_factory=lambda: [712])
    code: int = 250
    epochs: int = 1000
    batch_size: int = 32
    step: float = 1e-3
    decay: float = 0.998
    architectures: list = field(default_factory=list)   # [{"hidden": [...], "code": c}], tuned when dimred.tune

    def validate(self):
        if self.code < 1 or any(h < 1 for h in self.hidden):
            raise ConfigError("autoencoder widths must be positive")
        for arch in self.architectures:
            if not isinstance(arch, dict) or set(arch) != {"hidden", "code"}:
                raise ConfigError(f"autoencoder architecture needs exactly 'hidden' and 'code', got {arch}")
            if arch["code"] < 1 or any(h < 1 for h in arch["hidden"]):
                raise ConfigError(f"autoencoder widths must be positive, got {arch}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("autoencoder.epochs and batch_size must be >= 1")
        if not 0.0 < self.decay <= 1.0:
            raise ConfigError(f"autoencoder.decay must be in (0, 1], got {self.decay}")

    def architecture_grid(self) -> list:
        return list(self.architectures) or [{"hidden": list(self.hidden), "code": self.code}]


@dataclass
class ClassifySettings:
    folds: int = 5
    classifiers: list = field(default_factory=lambda: [k.value for k in CLASSIFIER_ORDER])
    grids: dict = field(default_factory=dict)   # kind -> list of hyperparameter dicts

    def validate(self):
        if self.folds < 2:
            raise ConfigError(f"classify.folds must be >= 2, got {self.folds}")
        for name in list(self.classifiers) + list(self.grids):
            try:
                ClassifierKind(name)
            except ValueError:
                raise ConfigError(f"unknown classifier '{name}'")
        for name, points in self.grids.items():
            if not points:
                raise ConfigError(f"classify.grids['{name}'] is empty")
            for params in points:
                ClassifierSpec(name, params)

    def grid_for(self, kind: ClassifierKind) -> Optional[list]:
        points = self.grids.get(kind.value)
        if points is None:
            return None
        return [ClassifierSpec(kind, params) for params in points]


@dataclass
class PipelineConfig:
    seed: int = 0
    data: DataSettings = field(default_factory=DataSettings)
    tck: TckSettings = field(default_factory=TckSettings)
    dimred: DimredSettings = field(default_factory=DimredSettings)
    autoencoder: AutoencoderSettings = field(default_factory=AutoencoderSettings)
    tsne: TsneConfig = field(default_factory=TsneConfig)
    classify: ClassifySettings = field(default_factory=ClassifySettings)
    synth: dict = field(default_factory=lambda: {"preset": "two-moons-mts"})

    def validate(self):
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        self.data.validate()
        self.tck.validate()
        self.dimred.validate()
        self.autoencoder.validate()
        self.classify.validate()

    # ── Load / Save ──────────────────────────────────────────

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        _check_keys(cls, data, "config")
        sections = {
            "data": DataSettings,
            "dimred": DimredSettings,
            "autoencoder": AutoencoderSettings,
            "classify": ClassifySettings,
        }
        kwargs = {}
        try:
            for name, section_cls in sections.items():
                section = data.get(name, {})
                _check_keys(section_cls, section, name)
                kwargs[name] = section_cls(**section)
            kwargs["tck"] = TckSettings.from_dict(data.get("tck", {}))
            kwargs["tsne"] = TsneConfig.from_dict(data.get("tsne", {}))
        except TypeError as e:
            raise ConfigError(f"invalid config: {e}") from e
        if "synth" in data:
            kwargs["synth"] = dict(data["synth"])
        cfg = cls(seed=int(data.get("seed", 0)), **kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(str(path))
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: not valid JSON ({e})") from e
        return cls.from_dict(data)

    def save(self, path: str):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
