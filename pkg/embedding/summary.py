"""
summary.py — Attribute prevalence inside and outside a selected cluster

Given a set of selected points in an embedding, reports for every
attribute the percentage of records in which the attribute fires (at
least one observed non-zero cell) across four groups: positive in,
positive out, negative in, negative out.

A selection is either a text file with one id per line or a JSON polygon
in embedding coordinates: {"polygon": [[x, y], ...]}.

Usage:
    selected = load_selection("cluster.json", emb)
    summary = cluster_summary(emb, ds, selected)
    summary.to_csv("report/cluster_summary.csv")
    print(summary.to_markdown())
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import pandas as pd
from matplotlib.path import Path as PolygonPath

from embedding.tsne import Embedding2D
from mts.dataset import MtsDataset
from mts.errors import ConfigError, EmptySelectionError

logger = logging.getLogger(__name__)

GROUPS = [
    ("positive_in", 1, True),
    ("positive_out", 1, False),
    ("negative_in", 0, True),
    ("negative_out", 0, False),
]
SIZE_ROW = "records"


@dataclass
class ClusterSummary:
    """
    `percent[group][attribute]` is NaN for an empty group. `sizes` holds
    the record count of every group.
    """
    attributes: list
    percent: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    sizes: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return sum(self.sizes.values())

    def to_frame(self) -> pd.DataFrame:
        """Long format; the `records` rows carry group sizes and their share of n."""
        rows = []
        for group, _, _ in GROUPS:
            size = self.sizes[group]
            rows.append([group, SIZE_ROW, 100.0 * size / self.n if self.n else np.nan, size])
            for attr in self.attributes:
                rows.append([group, attr, self.percent[group][attr], self.counts[group][attr]])
        return pd.DataFrame(rows, columns=["group", "attribute", "percent", "count"])

    def to_csv(self, path: str):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g", na_rep="")

    def to_markdown(self) -> str:
        names = [g for g, _, _ in GROUPS]
        lines = [
            "| Attribute | " + " | ".join(names) + " |",
            "|-----------|" + "|".join("-" * (len(n) + 2) for n in names) + "|",
            "| n | " + " | ".join(str(self.sizes[g]) for g in names) + " |",
        ]
        for attr in self.attributes:
            cells = []
            for g in names:
                value = self.percent[g][attr]
                cells.append("–" if np.isnan(value) else f"{value:.2f}%")
            lines.append(f"| {attr} | " + " | ".join(cells) + " |")
        return "\n".join(lines)


def load_selection(path: str, emb: Optional[Embedding2D] = None) -> set:
    """Selected ids from an id list or a JSON polygon (the latter needs `emb`)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    if path.suffix == ".json":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        vertices = data["polygon"] if isinstance(data, dict) else data
        if emb is None:
            raise ConfigError("a polygon selection needs the embedding coordinates")
        if len(vertices) < 3:
            raise ConfigError(f"polygon needs at least 3 vertices, got {len(vertices)}")
        inside = PolygonPath(np.asarray(vertices, dtype=float)).contains_points(emb.coords)
        return {emb.ids[i] for i in np.flatnonzero(inside)}

    with open(path, "r", encoding="utf-8") as f:
        return {
            line.strip() for line in f
            if line.strip() and not line.strip().startswith("#")
        }


def firing(ds: MtsDataset) -> np.ndarray:
    """(n, D) True where the attribute has an observed non-zero cell."""
    return ((ds.masks == 1) & (ds.values != 0)).any(axis=2)


def cluster_summary(
    emb: Embedding2D,
    ds: MtsDataset,
    selection: Iterable[str],
    attributes: Optional[Sequence[str]] = None,
) -> ClusterSummary:
    selection = set(selection)
    if not selection:
        raise EmptySelectionError("selection contains no points")
    unknown = selection - set(emb.ids)
    if unknown:
        raise ConfigError(f"{len(unknown)} selected ids are not in the embedding, e.g. {sorted(unknown)[0]!r}")

    position = {rid: i for i, rid in enumerate(ds.ids)}
    missing = [rid for rid in emb.ids if rid not in position]
    if missing:
        raise ConfigError(f"embedding id {missing[0]!r} is not in the dataset")
    rows = [position[rid] for rid in emb.ids]

    attributes = list(attributes) if attributes is not None else list(ds.attribute_names)
    columns = []
    for attr in attributes:
        if attr not in ds.attribute_names:
            raise ConfigError(f"unknown attribute '{attr}'")
        columns.append(ds.attribute_names.index(attr))

    fires = firing(ds)[rows][:, columns]
    labels = ds.labels[rows]
    chosen = np.array([rid in selection for rid in emb.ids])

    summary = ClusterSummary(attributes=attributes)
    for group, label, inside in GROUPS:
        members = (labels == label) & (chosen == inside)
        size = int(members.sum())
        summary.sizes[group] = size
        hits = fires[members].sum(axis=0)
        summary.counts[group] = {a: int(h) for a, h in zip(attributes, hits)}
        summary.percent[group] = {
            a: (100.0 * h / size if size else float("nan")) for a, h in zip(attributes, hits)
        }
    logger.info(
        f"Cluster summary: {int(chosen.sum())} selected of {len(chosen)} "
        f"({summary.sizes['positive_in']} positive inside)"
    )
    return summary
