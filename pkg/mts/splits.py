"""
splits.py — Stratified train/test split and minority-class balancing

The cohort is split 70/30 (stratified by label), then the training set is
balanced by moving randomly chosen majority-class records into the test
set. Nothing is discarded: the union of the returned sets is always the
union of the inputs.

Usage:
    train, test = split_train_test(ds, train_frac=0.7, seed=1)
    train, test = balance_train(train, test, seed=1)
"""

import logging

import numpy as np
from sklearn.model_selection import train_test_split

from mts.dataset import MtsDataset
from mts.errors import ConfigError, StratificationError

logger = logging.getLogger(__name__)


def split_train_test(ds: MtsDataset, train_frac: float, seed: int) -> tuple[MtsDataset, MtsDataset]:
    """Disjoint, exhaustive, label-stratified split; record order is kept."""
    if not 0.0 < train_frac < 1.0:
        raise ConfigError(f"train_frac must be in (0, 1), got {train_frac}")

    labels = ds.labels
    classes, counts = np.unique(labels, return_counts=True)
    for cls, count in zip(classes, counts):
        if count < 2:
            raise StratificationError(
                f"class {cls} has {count} record(s); stratified splitting needs at least 2"
            )
    if len(classes) < 2:
        raise StratificationError(f"only class {classes[0]} present; cannot stratify")

    train_idx, test_idx = train_test_split(
        np.arange(ds.n),
        train_size=train_frac,
        stratify=labels,
        random_state=seed,
    )
    train_idx = np.sort(train_idx)
    test_idx = np.sort(test_idx)
    logger.info(
        f"Split {ds.n} records: {len(train_idx)} train "
        f"({int(labels[train_idx].sum())} positive), {len(test_idx)} test"
    )
    return ds.subset(train_idx), ds.subset(test_idx)


def balance_train(train: MtsDataset, test: MtsDataset, seed: int) -> tuple[MtsDataset, MtsDataset]:
    """Equalize class counts in train by moving majority records to test."""
    labels = train.labels
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise StratificationError("training set must contain both classes to balance")
    if n_pos == n_neg:
        return train, test

    majority = 1 if n_pos > n_neg else 0
    excess = abs(n_pos - n_neg)
    rng = np.random.default_rng(seed)
    candidates = np.flatnonzero(labels == majority)
    moved = np.sort(rng.choice(candidates, size=excess, replace=False))
    keep = np.setdiff1d(np.arange(train.n), moved)

    new_train = train.subset(keep)
    new_test = test.with_records(list(test.records) + [train.records[i] for i in moved])
    logger.info(f"Balanced training set: moved {excess} class-{majority} records to test")
    return new_train, new_test
