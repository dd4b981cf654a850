"""Tests for mts/splits.py — stratified split and training-set balancing."""

import numpy as np
import pytest

from mts.dataset import MtsDataset, MtsRecord
from mts.errors import ConfigError, StratificationError
from mts.splits import balance_train, split_train_test


def make_dataset(n_pos, n_neg):
    labels = [1] * n_pos + [0] * n_neg
    records = [
        MtsRecord(id=f"r{i:03d}", values=np.full((1, 2), float(i)), mask=np.ones((1, 2)), label=y)
        for i, y in enumerate(labels)
    ]
    return MtsDataset(records=records, attribute_names=["a"], window_len=2)


# ── Split ───────────────────────────────────────────────────


class TestSplitTrainTest:
    def test_disjoint_and_exhaustive(self):
        ds = make_dataset(30, 70)
        train, test = split_train_test(ds, 0.7, seed=1)
        assert set(train.ids).isdisjoint(test.ids)
        assert sorted(train.ids + test.ids) == sorted(ds.ids)

    def test_stratified_within_one(self):
        ds = make_dataset(30, 70)
        train, _ = split_train_test(ds, 0.7, seed=1)
        assert abs(int(train.labels.sum()) - 0.7 * 30) <= 1
        assert abs(int((train.labels == 0).sum()) - 0.7 * 70) <= 1

    def test_record_order_preserved(self):
        ds = make_dataset(10, 10)
        train, test = split_train_test(ds, 0.5, seed=3)
        assert train.ids == sorted(train.ids)
        assert test.ids == sorted(test.ids)

    def test_deterministic(self):
        ds = make_dataset(20, 20)
        a, _ = split_train_test(ds, 0.7, seed=9)
        b, _ = split_train_test(ds, 0.7, seed=9)
        assert a.ids == b.ids

    @pytest.mark.parametrize("frac", [0.0, 1.0, 1.5])
    def test_fraction_out_of_range(self, frac):
        with pytest.raises(ConfigError):
            split_train_test(make_dataset(5, 5), frac, seed=0)

    def test_singleton_class(self):
        with pytest.raises(StratificationError):
            split_train_test(make_dataset(1, 10), 0.7, seed=0)


# ── Balance ─────────────────────────────────────────────────


class TestBalanceTrain:
    def test_classes_equal_after_balancing(self):
        train, test = split_train_test(make_dataset(20, 60), 0.7, seed=2)
        new_train, new_test = balance_train(train, test, seed=2)
        labels = new_train.labels
        assert (labels == 1).sum() == (labels == 0).sum()

    def test_union_preserved(self):
        train, test = split_train_test(make_dataset(20, 60), 0.7, seed=2)
        new_train, new_test = balance_train(train, test, seed=2)
        assert sorted(new_train.ids + new_test.ids) == sorted(train.ids + test.ids)
        assert new_train.n + new_test.n == train.n + test.n

    def test_moved_records_are_majority(self):
        train, test = split_train_test(make_dataset(20, 60), 0.7, seed=4)
        new_train, new_test = balance_train(train, test, seed=4)
        moved = [r for r in new_test.records if r.id in set(train.ids)]
        assert moved
        assert all(r.label == 0 for r in moved)

    def test_already_balanced_is_unchanged(self):
        train, test = split_train_test(make_dataset(10, 10), 0.6, seed=0)
        new_train, new_test = balance_train(train, test, seed=0)
        assert new_train.ids == train.ids
        assert new_test.ids == test.ids

    def test_single_class_train(self):
        train = make_dataset(0, 4)
        with pytest.raises(StratificationError):
            balance_train(train, make_dataset(0, 0), seed=0)
