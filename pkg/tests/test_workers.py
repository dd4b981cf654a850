"""Tests for mts/workers.py — worker count resolution."""

import numpy as np
import pytest

from classifiers.models import ClassifierKind, ClassifierSpec
from classifiers.selection import cross_validate
from mts.errors import ConfigError
from mts.workers import N_JOBS_ENV, resolve_n_jobs


class TestResolveNJobs:
    def test_default_is_serial(self, monkeypatch):
        monkeypatch.delenv(N_JOBS_ENV, raising=False)
        assert resolve_n_jobs() == 1

    def test_environment(self, monkeypatch):
        monkeypatch.setenv(N_JOBS_ENV, "3")
        assert resolve_n_jobs() == 3

    def test_argument_wins(self, monkeypatch):
        monkeypatch.setenv(N_JOBS_ENV, "3")
        assert resolve_n_jobs(2) == 2

    def test_bad_value(self, monkeypatch):
        monkeypatch.setenv(N_JOBS_ENV, "many")
        with pytest.raises(ConfigError):
            resolve_n_jobs()

    def test_grid_search_reads_environment(self, monkeypatch):
        monkeypatch.setenv(N_JOBS_ENV, "many")
        X = np.arange(20, dtype=float)[:, None]
        y = np.array([0] * 10 + [1] * 10)
        with pytest.raises(ConfigError):
            cross_validate([ClassifierSpec(ClassifierKind.TREE)], X, y, folds=2)
