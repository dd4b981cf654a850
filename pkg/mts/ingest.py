"""
ingest.py — CSV ingestion and window alignment

One CSV row per (id, day):

    id,day,anchor,label,<attr1>,...,<attrD>

An empty attribute cell is an unobserved cell. The anchor is the day the
window is aligned to: the first positive detection for label-1 stays
(the window is the T days ending there) and admission for label-0 stays
(the window is the first T days from there).

Usage:
    stays = load_raw_csv("cohort.csv", schema=["AMG", "CAR", "census"])
    ds = window_align(stays, window_len=7, attribute_names=["AMG", "CAR", "census"])
"""

import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from mts.dataset import MtsDataset, MtsRecord, RawStay
from mts.errors import AlignmentError, ConfigError, DuplicateRowError, ParseError, SchemaError

logger = logging.getLogger(__name__)

KEY_COLUMNS = ["id", "day", "anchor", "label"]
DEFAULT_WINDOW = 7


def read_schema(path: str) -> list[str]:
    """Attribute names from a CSV header (every column after the key columns)."""
    header = pd.read_csv(path, nrows=0).columns.tolist()
    return [c for c in header if c not in KEY_COLUMNS]


def _parse_float(text) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        return np.nan


def _numeric(df: pd.DataFrame, column: str) -> pd.Series:
    # float() is correctly rounded, so %.17g cells come back bit for bit
    raw = df[column]
    parsed = raw.map(_parse_float).astype(float)
    bad = parsed.isna() & raw.notna() & (raw.astype(str).str.strip() != "")
    if bad.any():
        idx = int(np.flatnonzero(bad.to_numpy())[0])
        # +2: one for the header line, one for 1-based numbering
        raise ParseError(row=idx + 2, column=column, value=str(raw.iloc[idx]))
    return parsed


def load_raw_csv(path: str, schema: Sequence[str]) -> list[RawStay]:
    """Load one RawStay per distinct id, rows sorted by day."""
    path = str(path)
    if not Path(path).exists():
        raise FileNotFoundError(path)

    df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    for column in KEY_COLUMNS + list(schema):
        if column not in df.columns:
            raise SchemaError(column, path)

    df = df.replace("", np.nan)
    if df["id"].isna().any():
        idx = int(np.flatnonzero(df["id"].isna().to_numpy())[0])
        raise ParseError(row=idx + 2, column="id", value="")

    day = _numeric(df, "day")
    if day.isna().any() or (day != day.round()).any():
        idx = int(np.flatnonzero((day.isna() | (day != day.round())).to_numpy())[0])
        raise ParseError(row=idx + 2, column="day", value=str(df["day"].iloc[idx]))
    anchor = _numeric(df, "anchor")
    label = _numeric(df, "label")
    if label.isna().any():
        idx = int(np.flatnonzero(label.isna().to_numpy())[0])
        raise ParseError(row=idx + 2, column="label", value="")
    values = np.column_stack([_numeric(df, c).to_numpy(dtype=float) for c in schema]) \
        if schema else np.zeros((len(df), 0))

    ids = df["id"].to_numpy()
    days = day.to_numpy().astype(int)

    dup = pd.DataFrame({"id": ids, "day": days}).duplicated()
    if dup.any():
        idx = int(np.flatnonzero(dup.to_numpy())[0])
        raise DuplicateRowError(str(ids[idx]), int(days[idx]), idx + 2)

    stays = []
    order = {}
    for i, rid in enumerate(ids):
        order.setdefault(rid, []).append(i)

    for rid, rows in order.items():
        rows = sorted(rows, key=lambda i: days[i])
        anchors = anchor.iloc[rows].dropna()
        labels = label.iloc[rows].unique()
        if len(labels) > 1:
            raise ParseError(row=rows[0] + 2, column="label", value=f"conflicting labels {labels}")
        stays.append(RawStay(
            id=str(rid),
            days=[int(days[i]) for i in rows],
            rows=values[rows],
            anchor_day=int(anchors.iloc[0]) if len(anchors) else None,
            label=int(labels[0]),
        ))

    logger.info(f"Loaded {len(stays)} stays ({len(df)} rows) from {path}")
    return stays


def write_raw_csv(stays: Sequence[RawStay], schema: Sequence[str], path: str):
    """Write stays in the ingestion schema; NaN cells become empty strings."""
    rows = []
    for stay in stays:
        for day, row in zip(stay.days, stay.rows):
            rows.append([stay.id, day, stay.anchor_day, stay.label, *row])
    df = pd.DataFrame(rows, columns=KEY_COLUMNS + list(schema))
    df["anchor"] = df["anchor"].astype("Int64")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format="%.17g", na_rep="", encoding="utf-8")


def window_bounds(label: int, anchor_day: int, window_len: int) -> tuple[int, int]:
    """First and last day (inclusive) of the observation window."""
    if label == 1:
        return anchor_day - window_len + 1, anchor_day
    return anchor_day, anchor_day + window_len - 1


def window_align(
    stays: Sequence[RawStay],
    window_len: int = DEFAULT_WINDOW,
    attribute_names: Optional[Sequence[str]] = None,
) -> MtsDataset:
    """
    Cut every stay to a T-day window and zero-fill the rest.

    Days inside the window without a row, and empty cells of present rows,
    become mask-0 cells holding 0.0.
    """
    if window_len < 1:
        raise ConfigError(f"window_len must be >= 1, got {window_len}")

    records = []
    n_attr = None
    for stay in stays:
        if stay.anchor_day is None:
            raise AlignmentError(stay.id, "anchor day is missing")
        if not stay.days:
            raise AlignmentError(stay.id, "stay has no observed day")
        d = stay.rows.shape[1]
        if n_attr is None:
            n_attr = d
        elif d != n_attr:
            raise AlignmentError(stay.id, f"has {d} attributes, expected {n_attr}")

        first, last = window_bounds(stay.label, stay.anchor_day, window_len)
        values = np.zeros((d, window_len))
        mask = np.zeros((d, window_len), dtype=np.uint8)
        inside = 0
        for day, row in zip(stay.days, stay.rows):
            if first <= day <= last:
                col = day - first
                observed = ~np.isnan(row)
                values[observed, col] = row[observed]
                mask[observed, col] = 1
                inside += 1
        if inside == 0:
            logger.warning(f"Stay {stay.id}: no recorded day falls inside [{first}, {last}]")
        records.append(MtsRecord(id=stay.id, values=values, mask=mask, label=stay.label))

    if attribute_names is None:
        attribute_names = [f"a{j}" for j in range(n_attr or 0)]
    return MtsDataset(
        records=records,
        attribute_names=attribute_names,
        window_len=window_len,
        metadata={"window_len": window_len},
    )


def stays_from_dataset(ds: MtsDataset) -> list[RawStay]:
    """
    Inverse of window_align for already-windowed data.

    Days are numbered 1..T; the anchor is day T for label-1 records and day 1
    for label-0 records, so re-aligning reproduces the dataset exactly.
    """
    stays = []
    T = ds.window_len
    for rec in ds.records:
        rows = np.where(rec.mask.T == 1, rec.values.T, np.nan)
        stays.append(RawStay(
            id=rec.id,
            days=list(range(1, T + 1)),
            rows=rows,
            anchor_day=T if rec.label == 1 else 1,
            label=rec.label,
        ))
    return stays
