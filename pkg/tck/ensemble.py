"""
ensemble.py — Time-series cluster kernel from a GMM ensemble

For every number of components c in 2..C and every randomization r in 1..R
a GMM is fitted by MAP-EM to a random slice of the training data (records,
attributes, contiguous time segment). The kernel is the sum over partitions
of inner products between posterior vectors, computed for all training
records, then normalized to unit diagonal.

Each partition draws its slice and its initialization from an RNG seeded
with (master_seed, c, r), and partition products are summed in (c, r)
order, so the kernel does not depend on how many workers fitted it.

Usage:
    kernel = build_tck(train, C=40, R=30, master_seed=7)
    kernel.K                        # (n, n)
    rows = kernel_rows(kernel, test)   # (n_test, n)
    self_similarity_of(kernel, test)   # (n_test,) k(x, x)
    kernel.save("tck/model.npz")
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from mts.dataset import MtsDataset
from mts.errors import (
    ConfigError,
    EnsembleSizeError,
    NumericalError,
    PartitionFitError,
    ShapeError,
    TckToolkitError,
)
from mts.workers import resolve_n_jobs
from tck.gmm import EmSettings, GmmPartition, PartitionConfig, fit_on_arrays, posteriors

logger = logging.getLogger(__name__)


@dataclass
class SubsetSettings:
    """How large a slice of the training data each partition sees."""
    record_fraction: float = 0.8
    attribute_fraction: float = 0.2
    min_attributes: int = 2
    min_segment: int = 6

    def validate(self):
        if not 0.0 < self.record_fraction <= 1.0:
            raise ConfigError(f"record_fraction must be in (0, 1], got {self.record_fraction}")
        if not 0.0 < self.attribute_fraction <= 1.0:
            raise ConfigError(f"attribute_fraction must be in (0, 1], got {self.attribute_fraction}")
        if self.min_attributes < 1 or self.min_segment < 1:
            raise ConfigError("min_attributes and min_segment must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SubsetSettings":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown subset settings: {sorted(unknown)}")
        settings = cls(**data)
        settings.validate()
        return settings


def _ceil(x: float) -> int:
    return int(math.ceil(round(x, 9)))


def sample_partition_configs(
    n: int,
    D: int,
    T: int,
    C: int = 40,
    R: int = 30,
    master_seed: int = 0,
    subsets: Optional[SubsetSettings] = None,
) -> list[PartitionConfig]:
    """One config per (c, r), c in 2..C, r in 1..R, in that order."""
    subsets = subsets or SubsetSettings()
    subsets.validate()
    if C < 2 or R < 1:
        raise ConfigError(f"need C >= 2 and R >= 1, got C={C} R={R}")
    if n < C:
        raise EnsembleSizeError(f"{n} training records cannot support up to {C} components")
    if D < 1 or T < 1:
        raise ConfigError(f"need D >= 1 and T >= 1, got D={D} T={T}")

    n_records = min(max(_ceil(subsets.record_fraction * n), 1), n)
    min_attr = min(max(subsets.min_attributes, _ceil(subsets.attribute_fraction * D)), D)
    min_len = min(subsets.min_segment, T)

    configs = []
    for c in range(2, C + 1):
        for r in range(1, R + 1):
            rng = np.random.default_rng([master_seed, c, r])
            records = np.sort(rng.choice(n, size=n_records, replace=False))
            n_attr = int(rng.integers(min_attr, D + 1))
            attrs = np.sort(rng.choice(D, size=n_attr, replace=False))
            length = int(rng.integers(min_len, T + 1))
            start = int(rng.integers(0, T - length + 1))
            init_seed = int(rng.integers(0, 2**31 - 1))

            components = c
            if c > n_records:
                components = n_records
                logger.warning(f"partition ({c}, {r}): clamped to {n_records} components")
            configs.append(PartitionConfig(
                identity=(c, r),
                component_count=components,
                record_subset=records.tolist(),
                attribute_subset=attrs.tolist(),
                time_segment=(start, start + length - 1),
                init_seed=init_seed,
            ))
    return configs


@dataclass(eq=False)
class TckKernel:
    """
    A fitted kernel: the training matrix plus everything needed to score
    new records against it.
    """
    K: np.ndarray
    ensemble: list                    # GmmPartition, in (c, r) order
    train_ids: list
    normalized: bool
    self_similarity: np.ndarray       # unnormalized diagonal
    train_posteriors: list            # (n, c_q) per partition
    n_attributes: int
    window_len: int
    failed: list = field(default_factory=list)   # (c, r) of dropped partitions
    settings: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.train_ids)

    @property
    def n_partitions(self) -> int:
        return len(self.ensemble)

    # ── Load / Save ──────────────────────────────────────────

    def save(self, path: str):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = {
            "train_ids": list(self.train_ids),
            "normalized": self.normalized,
            "n_attributes": self.n_attributes,
            "window_len": self.window_len,
            "failed": [list(f) for f in self.failed],
            "settings": self.settings,
            "partitions": [
                {"config": g.config.to_dict(), "converged": g.converged, "n_iter": g.n_iter}
                for g in self.ensemble
            ],
        }
        arrays = {
            "header": np.array(json.dumps(header, sort_keys=True)),
            "K": self.K,
            "self_similarity": self.self_similarity,
        }
        for q, (g, P) in enumerate(zip(self.ensemble, self.train_posteriors)):
            arrays[f"weights_{q}"] = g.weights
            arrays[f"means_{q}"] = g.means
            arrays[f"variances_{q}"] = g.variances
            arrays[f"posteriors_{q}"] = P
        with open(path, "wb") as f:
            np.savez(f, **arrays)

    @classmethod
    def load(cls, path: str) -> "TckKernel":
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            ensemble = []
            train_posteriors = []
            for q, part in enumerate(header["partitions"]):
                ensemble.append(GmmPartition(
                    config=PartitionConfig.from_dict(part["config"]),
                    weights=data[f"weights_{q}"],
                    means=data[f"means_{q}"],
                    variances=data[f"variances_{q}"],
                    converged=part["converged"],
                    n_iter=part["n_iter"],
                ))
                train_posteriors.append(data[f"posteriors_{q}"])
            return cls(
                K=data["K"],
                ensemble=ensemble,
                train_ids=header["train_ids"],
                normalized=header["normalized"],
                self_similarity=data["self_similarity"],
                train_posteriors=train_posteriors,
                n_attributes=header["n_attributes"],
                window_len=header["window_len"],
                failed=[tuple(f) for f in header["failed"]],
                settings=header["settings"],
            )

    def to_csv(self, path: str):
        """Kernel matrix with an `id` column and one column per training id."""
        df = pd.DataFrame(self.K, columns=self.train_ids)
        df.insert(0, "id", self.train_ids)
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=False, float_format="%.17g")


def _fit_one(values, masks, cfg: PartitionConfig, em: EmSettings):
    try:
        gmm = fit_on_arrays(values, masks, cfg, em)
        return gmm, posteriors(values, masks, gmm), None
    except (TckToolkitError, np.linalg.LinAlgError) as e:
        return None, None, str(e)


def build_tck(
    train: MtsDataset,
    C: int = 40,
    R: int = 30,
    master_seed: int = 0,
    em: Optional[EmSettings] = None,
    subsets: Optional[SubsetSettings] = None,
    normalize: bool = True,
    drop_failed: bool = False,
    n_jobs: Optional[int] = None,
) -> TckKernel:
    """Fit the ensemble on `train` and assemble its kernel matrix."""
    if train.n == 0:
        raise ConfigError("cannot build a kernel on an empty training set")
    em = em or EmSettings()
    em.validate()
    subsets = subsets or SubsetSettings()
    n_jobs = resolve_n_jobs(n_jobs)

    configs = sample_partition_configs(
        train.n, train.n_attributes, train.window_len, C, R, master_seed, subsets
    )
    logger.info(f"Fitting {len(configs)} partitions on {train.n} records (n_jobs={n_jobs})")

    values, masks = train.values, train.masks
    results = Parallel(n_jobs=n_jobs)(
        delayed(_fit_one)(values, masks, cfg, em) for cfg in configs
    )

    ensemble, train_posteriors, failed = [], [], []
    K = np.zeros((train.n, train.n))
    for cfg, (gmm, P, error) in zip(configs, results):
        if error is not None:
            if not drop_failed:
                raise PartitionFitError(cfg.identity, error)
            logger.warning(f"Dropping partition {cfg.identity}: {error}")
            failed.append(cfg.identity)
            continue
        ensemble.append(gmm)
        train_posteriors.append(P)
        K += P @ P.T

    if not ensemble:
        raise NumericalError("every partition failed to fit")

    K = 0.5 * (K + K.T)
    self_similarity = np.diag(K).copy()
    if normalize:
        K = K / np.sqrt(np.outer(self_similarity, self_similarity))
        np.fill_diagonal(K, 1.0)

    n_conv = sum(g.converged for g in ensemble)
    logger.info(f"Kernel built: {len(ensemble)} partitions ({n_conv} converged, {len(failed)} dropped)")

    return TckKernel(
        K=K,
        ensemble=ensemble,
        train_ids=train.ids,
        normalized=normalize,
        self_similarity=self_similarity,
        train_posteriors=train_posteriors,
        n_attributes=train.n_attributes,
        window_len=train.window_len,
        failed=failed,
        settings={
            "C": C,
            "R": R,
            "master_seed": master_seed,
            "em": em.to_dict(),
            "subsets": subsets.to_dict(),
        },
    )


def _test_products(kernel: TckKernel, test: MtsDataset) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized (n_test, n_train) products and the test records' self-similarities."""
    if test.n_attributes != kernel.n_attributes or test.window_len != kernel.window_len:
        raise ShapeError(
            f"test data is {test.n_attributes}x{test.window_len}, "
            f"kernel was built on {kernel.n_attributes}x{kernel.window_len}"
        )
    values, masks = test.values, test.masks
    rows = np.zeros((test.n, kernel.n))
    self_test = np.zeros(test.n)
    for gmm, P_train in zip(kernel.ensemble, kernel.train_posteriors):
        P = posteriors(values, masks, gmm)
        rows += P @ P_train.T
        self_test += (P * P).sum(axis=1)
    return rows, self_test


def kernel_rows(kernel: TckKernel, test: MtsDataset) -> np.ndarray:
    """(n_test, n_train) similarities of new records to the training records."""
    rows, self_test = _test_products(kernel, test)
    if kernel.normalized:
        rows = rows / np.sqrt(np.outer(self_test, kernel.self_similarity))
    return rows


def self_similarity_of(kernel: TckKernel, test: MtsDataset) -> np.ndarray:
    """k(x, x) for new records on the kernel's scale: all ones when normalized."""
    if kernel.normalized:
        return np.ones(test.n)
    return _test_products(kernel, test)[1]
