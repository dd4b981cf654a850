"""
dataset.py — Labeled multivariate time series with observation masks

Each subject is a D x T matrix of values plus a D x T mask (1 = observed).
Cells that were not observed always hold 0.0, so estimators that ignore the
mask see the zero-filled matrix and estimators that honor it see nothing.

Usage:
    record = MtsRecord(id="p1", values=values, mask=mask, label=1)
    ds = MtsDataset(records=[record, ...], attribute_names=["AMG", "CAR"], window_len=7)

    ds.values          # (n, D, T) stacked values
    ds.labels          # (n,) int array
    ds.save("data/train.npz")
    ds = MtsDataset.load("data/train.npz")
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from mts.errors import ConfigError, ShapeError


class MissingPolicy(Enum):
    """How downstream estimators treat zero-filled cells."""
    OBSERVED_ZEROS = "observed-zeros"
    MASKED = "masked"


@dataclass(eq=False)
class MtsRecord:
    """One subject: values and mask (D x T) plus a binary label."""
    id: str
    values: np.ndarray
    mask: np.ndarray
    label: int

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        mask = np.array(self.mask, dtype=np.uint8)
        if values.ndim != 2 or values.shape != mask.shape:
            raise ShapeError(
                f"record '{self.id}': values {values.shape} and mask {mask.shape} differ"
            )
        if not np.isin(mask, (0, 1)).all():
            raise ShapeError(f"record '{self.id}': mask must be binary")
        if int(self.label) not in (0, 1):
            raise ConfigError(f"record '{self.id}': label must be 0 or 1, got {self.label}")
        values[mask == 0] = 0.0
        values.setflags(write=False)
        mask.setflags(write=False)
        self.values = values
        self.mask = mask
        self.label = int(self.label)
        self.id = str(self.id)

    @property
    def n_attributes(self) -> int:
        return self.values.shape[0]

    @property
    def window_len(self) -> int:
        return self.values.shape[1]

    def same_as(self, other: "MtsRecord") -> bool:
        return (
            self.id == other.id
            and self.label == other.label
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.mask, other.mask)
        )


@dataclass(eq=False)
class RawStay:
    """A stay before windowing: one row per recorded day, NaN for empty cells."""
    id: str
    days: tuple
    rows: np.ndarray  # (n_days, D)
    anchor_day: Optional[int]
    label: int

    def __post_init__(self):
        self.days = tuple(int(d) for d in self.days)
        self.rows = np.array(self.rows, dtype=float).reshape(len(self.days), -1)
        if any(b <= a for a, b in zip(self.days, self.days[1:])):
            raise ConfigError(f"stay '{self.id}': day indices must be strictly increasing")

    def same_as(self, other: "RawStay") -> bool:
        return (
            self.id == other.id
            and self.days == other.days
            and self.anchor_day == other.anchor_day
            and self.label == other.label
            and np.array_equal(self.rows, other.rows, equal_nan=True)
        )


@dataclass(eq=False)
class MtsDataset:
    """An ordered, immutable collection of records sharing D and T."""
    records: tuple
    attribute_names: tuple
    window_len: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.records = tuple(self.records)
        self.attribute_names = tuple(self.attribute_names)
        if self.window_len < 1:
            raise ConfigError(f"window_len must be >= 1, got {self.window_len}")
        shape = (len(self.attribute_names), self.window_len)
        seen = set()
        for rec in self.records:
            if rec.values.shape != shape:
                raise ShapeError(
                    f"record '{rec.id}' has shape {rec.values.shape}, dataset expects {shape}"
                )
            if rec.id in seen:
                raise ConfigError(f"duplicate record id '{rec.id}'")
            seen.add(rec.id)

    # ── Shape and views ──────────────────────────────────────

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def n_attributes(self) -> int:
        return len(self.attribute_names)

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    @property
    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.records], dtype=int)

    @property
    def values(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, self.n_attributes, self.window_len))
        return np.stack([r.values for r in self.records])

    @property
    def masks(self) -> np.ndarray:
        if not self.records:
            return np.zeros((0, self.n_attributes, self.window_len), dtype=np.uint8)
        return np.stack([r.mask for r in self.records])

    def flattened(self) -> np.ndarray:
        """(n, D*T) zero-filled feature matrix."""
        return self.values.reshape(self.n, -1)

    def subset(self, indices: Sequence[int]) -> "MtsDataset":
        return MtsDataset(
            records=[self.records[i] for i in indices],
            attribute_names=self.attribute_names,
            window_len=self.window_len,
            metadata=dict(self.metadata),
        )

    def with_records(self, records: Sequence[MtsRecord]) -> "MtsDataset":
        return MtsDataset(
            records=records,
            attribute_names=self.attribute_names,
            window_len=self.window_len,
            metadata=dict(self.metadata),
        )

    def same_as(self, other: "MtsDataset") -> bool:
        return (
            self.attribute_names == other.attribute_names
            and self.window_len == other.window_len
            and self.n == other.n
            and all(a.same_as(b) for a, b in zip(self.records, other.records))
        )

    # ── Load / Save ──────────────────────────────────────────

    def save(self, path: str):
        """Save to a .npz file."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = {
            "ids": self.ids,
            "attribute_names": list(self.attribute_names),
            "window_len": self.window_len,
            "metadata": self.metadata,
        }
        with open(path, "wb") as f:
            np.savez(
                f,
                header=np.array(json.dumps(header, sort_keys=True)),
                values=self.values,
                masks=self.masks,
                labels=self.labels,
            )

    @classmethod
    def load(cls, path: str) -> "MtsDataset":
        with np.load(path, allow_pickle=False) as data:
            header = json.loads(str(data["header"]))
            values = data["values"]
            masks = data["masks"]
            labels = data["labels"]
        records = [
            MtsRecord(id=rid, values=values[i], mask=masks[i], label=int(labels[i]))
            for i, rid in enumerate(header["ids"])
        ]
        return cls(
            records=records,
            attribute_names=header["attribute_names"],
            window_len=header["window_len"],
            metadata=header.get("metadata", {}),
        )


def apply_missing_policy(ds: MtsDataset, policy: MissingPolicy) -> MtsDataset:
    """
    Return the dataset as estimators should see it.

    OBSERVED_ZEROS marks every cell observed (zero-fill counts as data);
    MASKED keeps the recorded masks.
    """
    policy = MissingPolicy(policy)
    if policy is MissingPolicy.MASKED:
        return ds
    records = [
        MtsRecord(id=r.id, values=r.values, mask=np.ones_like(r.mask), label=r.label)
        for r in ds.records
    ]
    out = ds.with_records(records)
    out.metadata["missing_policy"] = policy.value
    return out
