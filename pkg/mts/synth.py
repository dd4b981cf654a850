"""
synth.py — Synthetic labeled MTS with known cluster structure

Stands in for private clinical cohorts: every record is drawn from its
cluster's Gaussian with a time-dependent mean curve per attribute, then
each cell is hidden independently with probability `missing_rate` (MCAR).
Attributes flagged binary are thresholded at 0.5, like antibiotic
presence flags.

Usage:
    spec = SynthSpec.two_moons(n_per_cluster=100, missing_rate=0.2, seed=3)
    ds, truth = generate(spec)
    write_synthetic(ds, truth, "runs/fixture")
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from mts.dataset import MtsDataset, MtsRecord
from mts.errors import ConfigError
from mts.ingest import stays_from_dataset, write_raw_csv

logger = logging.getLogger(__name__)

STAYS_FILE = "stays.csv"
TRUTH_FILE = "ground_truth.csv"


@dataclass
class ClusterDef:
    """Mean curve (D x T) and per-attribute variance (D) of one cluster."""
    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.variance = np.asarray(self.variance, dtype=float)


@dataclass
class SynthSpec:
    n_per_cluster: list[int]
    clusters: list[ClusterDef]
    missing_rate: float = 0.0
    cluster_labels: list[int] = field(default_factory=list)
    binary_channels: list[bool] = field(default_factory=list)
    attribute_names: list[str] = field(default_factory=list)
    seed: int = 0

    @property
    def n_attributes(self) -> int:
        return self.clusters[0].mean.shape[0]

    @property
    def window_len(self) -> int:
        return self.clusters[0].mean.shape[1]

    def validate(self):
        if len(self.clusters) < 1:
            raise ConfigError("at least one cluster is required")
        if len(self.n_per_cluster) != len(self.clusters):
            raise ConfigError("n_per_cluster needs one count per cluster")
        if any(n < 0 for n in self.n_per_cluster):
            raise ConfigError("cluster sizes must be non-negative")
        if not 0.0 <= self.missing_rate < 1.0:
            raise ConfigError(f"missing_rate must be in [0, 1), got {self.missing_rate}")
        shape = self.clusters[0].mean.shape
        if len(shape) != 2:
            raise ConfigError("cluster means must be D x T matrices")
        for c in self.clusters:
            if c.mean.shape != shape or c.variance.shape != (shape[0],):
                raise ConfigError("all clusters must share D and T")
            if (c.variance <= 0).any():
                raise ConfigError("cluster variances must be positive")
        labels = self.cluster_labels or list(range(len(self.clusters)))
        if len(labels) != len(self.clusters) or any(l not in (0, 1) for l in labels):
            raise ConfigError("cluster_labels must map every cluster to 0 or 1")
        if self.binary_channels and len(self.binary_channels) != shape[0]:
            raise ConfigError("binary_channels needs one flag per attribute")
        if self.attribute_names and len(self.attribute_names) != shape[0]:
            raise ConfigError("attribute_names needs one name per attribute")

    @classmethod
    def two_moons(
        cls,
        n_per_cluster: int = 100,
        missing_rate: float = 0.0,
        seed: int = 0,
        sigma: float = 0.5,
        n_attributes: int = 5,
        window_len: int = 7,
    ) -> "SynthSpec":
        """
        The two-moons-MTS benchmark: a sinusoidal cluster (label 0) against a
        linear-trend cluster (label 1).
        """
        t = np.arange(window_len)
        phase = np.linspace(0.0, np.pi, n_attributes, endpoint=False)
        sinus = np.sin(2 * np.pi * t[None, :] / window_len + phase[:, None])
        slope = np.linspace(-1.0, 1.0, window_len)
        linear = np.tile(slope, (n_attributes, 1)) * np.where(np.arange(n_attributes) % 2, -1.0, 1.0)[:, None]
        var = np.full(n_attributes, sigma ** 2)
        return cls(
            n_per_cluster=[n_per_cluster, n_per_cluster],
            clusters=[ClusterDef(sinus, var), ClusterDef(linear, var.copy())],
            missing_rate=missing_rate,
            cluster_labels=[0, 1],
            attribute_names=[f"x{j}" for j in range(n_attributes)],
            seed=seed,
        )

    # ── Serialization ───────────────────────────────────────

    def to_dict(self) -> dict:
        return {
            "n_per_cluster": list(self.n_per_cluster),
            "clusters": [
                {"mean": c.mean.tolist(), "variance": c.variance.tolist()} for c in self.clusters
            ],
            "missing_rate": self.missing_rate,
            "cluster_labels": list(self.cluster_labels),
            "binary_channels": list(self.binary_channels),
            "attribute_names": list(self.attribute_names),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        """Build from a dict; `{"preset": "two-moons-mts", ...}` selects the benchmark."""
        data = dict(data)
        preset = data.pop("preset", None)
        if preset is not None:
            if preset != "two-moons-mts":
                raise ConfigError(f"unknown synthetic preset '{preset}'")
            allowed = {"n_per_cluster", "missing_rate", "seed", "sigma", "n_attributes", "window_len"}
            unknown = set(data) - allowed
            if unknown:
                raise ConfigError(f"unknown keys for two-moons-mts: {sorted(unknown)}")
            spec = cls.two_moons(**data)
        else:
            try:
                clusters = [ClusterDef(c["mean"], c["variance"]) for c in data.pop("clusters")]
                spec = cls(clusters=clusters, **data)
            except (KeyError, TypeError) as e:
                raise ConfigError(f"invalid synthetic spec: {e}") from e
        spec.validate()
        return spec

    @classmethod
    def load(cls, path: str) -> "SynthSpec":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: not valid JSON ({e})") from e
        return cls.from_dict(data)


def generate(spec: SynthSpec) -> tuple[MtsDataset, np.ndarray]:
    """Draw the dataset and return it with the per-record cluster assignment."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    D, T = spec.n_attributes, spec.window_len
    labels = spec.cluster_labels or list(range(len(spec.clusters)))
    binary = np.array(spec.binary_channels or [False] * D, dtype=bool)

    truth = np.concatenate([
        np.full(n, k, dtype=int) for k, n in enumerate(spec.n_per_cluster)
    ])
    truth = truth[rng.permutation(len(truth))]

    records = []
    for i, k in enumerate(truth):
        cluster = spec.clusters[k]
        values = cluster.mean + np.sqrt(cluster.variance)[:, None] * rng.standard_normal((D, T))
        values[binary] = (values[binary] > 0.5).astype(float)
        mask = (rng.random((D, T)) >= spec.missing_rate).astype(np.uint8)
        records.append(MtsRecord(id=f"S{i:05d}", values=values, mask=mask, label=labels[k]))

    names = spec.attribute_names or [f"x{j}" for j in range(D)]
    ds = MtsDataset(
        records=records,
        attribute_names=names,
        window_len=T,
        metadata={"source": "synthetic", "seed": spec.seed, "missing_rate": spec.missing_rate},
    )
    logger.info(f"Generated {ds.n} synthetic records ({len(spec.clusters)} clusters, D={D}, T={T})")
    return ds, truth


def write_synthetic(ds: MtsDataset, truth: np.ndarray, out_dir: str, prefix: Optional[str] = None):
    """Write the stays CSV (ingestion schema) and the `id,cluster` sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stays_path = out / (f"{prefix}_{STAYS_FILE}" if prefix else STAYS_FILE)
    truth_path = out / (f"{prefix}_{TRUTH_FILE}" if prefix else TRUTH_FILE)
    write_raw_csv(stays_from_dataset(ds), ds.attribute_names, str(stays_path))
    pd.DataFrame({"id": ds.ids, "cluster": truth}).to_csv(truth_path, index=False)
    return stays_path, truth_path
