"""Tests for reduction/tuning.py — validation-split choice of reduction settings."""

import logging

import numpy as np
import pytest

from mts.errors import ConfigError, DegenerateInputError, StratificationError
from reduction.network import TrainConfig
from reduction.tuning import Candidate, choose, tune_autoencoder, tune_kpca, tune_pca, validation_split


@pytest.fixture
def low_rank():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((60, 3)) @ rng.standard_normal((3, 10)) + 0.05 * rng.standard_normal((60, 10))
    y = np.repeat([0, 1], 30)
    return X, y


@pytest.fixture
def rbf(low_rank):
    X, _ = low_rank
    sq = ((X[:, None] - X[None]) ** 2).sum(axis=2)
    return np.exp(-0.02 * sq)


# ── Split ───────────────────────────────────────────────────


class TestValidationSplit:
    def test_partition_is_stratified(self, low_rank):
        _, y = low_rank
        fit, val = validation_split(y, fraction=0.2, seed=3)
        assert sorted(np.concatenate([fit, val]).tolist()) == list(range(60))
        assert len(val) == 12
        assert np.bincount(y[val]).tolist() == [6, 6]
        assert np.array_equal(fit, np.sort(fit))

    def test_pure_function_of_seed(self, low_rank):
        _, y = low_rank
        a = validation_split(y, 0.2, seed=3)
        b = validation_split(y, 0.2, seed=3)
        assert all(np.array_equal(x, z) for x, z in zip(a, b))

    def test_single_class(self):
        with pytest.raises(StratificationError):
            validation_split(np.zeros(10, dtype=int))

    def test_too_few_to_hold_out(self):
        with pytest.raises(StratificationError):
            validation_split(np.array([0, 0, 1, 1]), fraction=0.1)

    def test_bad_fraction(self, low_rank):
        _, y = low_rank
        with pytest.raises(ConfigError):
            validation_split(y, fraction=1.0)


# ── Choice ──────────────────────────────────────────────────


class TestChoose:
    def test_lowest_error_wins(self):
        candidates = [Candidate({"a": 1}, 0.5), Candidate({"a": 2}, 0.2), Candidate({"a": 3}, 0.3)]
        assert choose(candidates).params == {"a": 2}

    def test_tie_goes_to_first(self):
        candidates = [Candidate({"a": 1}, 0.2), Candidate({"a": 2}, 0.2)]
        assert choose(candidates).params == {"a": 1}

    def test_tolerance_prefers_earlier(self):
        candidates = [Candidate({"a": 1}, 0.104), Candidate({"a": 2}, 0.1)]
        assert choose(candidates, tolerance=0.05).params == {"a": 1}
        assert choose(candidates, tolerance=0.0).params == {"a": 2}

    def test_failed_candidates_are_skipped(self):
        candidates = [Candidate({"a": 1}, error="diverged"), Candidate({"a": 2}, 0.7)]
        assert choose(candidates).params == {"a": 2}

    def test_nothing_fitted(self):
        with pytest.raises(DegenerateInputError):
            choose([Candidate({"a": 1}, error="diverged")])


# ── PCA ─────────────────────────────────────────────────────


class TestTunePca:
    def test_more_variance_reconstructs_better(self, low_rank, caplog):
        X, y = low_rank
        fit, val = validation_split(y, 0.2, seed=1)
        with caplog.at_level(logging.INFO, logger="reduction.tuning"):
            choice = tune_pca(X[fit], X[val], [0.5, 0.9, 0.999])
        errors = [c.validation_mse for c in choice.candidates]
        assert errors[0] > errors[1] >= errors[2]
        assert choice.chosen == choice.candidates[errors.index(min(errors))].params
        assert "chose" in caplog.text

    def test_record(self, low_rank):
        X, y = low_rank
        fit, val = validation_split(y, 0.2, seed=1)
        record = tune_pca(X[fit], X[val], [0.9]).to_dict()
        assert record["method"] == "pca"
        assert (record["n_fit"], record["n_validation"]) == (48, 12)
        assert record["candidates"][0]["error"] is None


# ── Kernel PCA ──────────────────────────────────────────────


class TestTuneKpca:
    def test_precomputed_kernel(self, rbf, low_rank):
        _, y = low_rank
        fit, val = validation_split(y, 0.2, seed=2)
        choice = tune_kpca(
            rbf[np.ix_(fit, fit)], rbf[np.ix_(val, fit)], [1, 4, 12], self_similarity=np.ones(len(val))
        )
        errors = [c.validation_mse for c in choice.candidates]
        assert errors[0] > errors[1] >= errors[2] - 1e-12
        assert choice.chosen["k"] in (4, 12)

    def test_k_beyond_fit_size_is_capped(self, rbf, low_rank):
        _, y = low_rank
        fit, val = validation_split(y, 0.2, seed=2)
        choice = tune_kpca(
            rbf[np.ix_(fit, fit)], rbf[np.ix_(val, fit)], [len(fit) - 1, 500], self_similarity=np.ones(len(val))
        )
        first, second = choice.candidates
        assert second.error is None
        assert second.validation_mse == pytest.approx(first.validation_mse)
        assert choice.chosen == {"k": len(fit) - 1}

    def test_polynomial_grid_covers_gamma(self, low_rank):
        X, y = low_rank
        fit, val = validation_split(y, 0.2, seed=2)
        choice = tune_kpca(X[fit], X[val], [2, 5], kernel="polynomial", gammas=[0.01, 0.1])
        assert [c.params for c in choice.candidates] == [
            {"k": 2, "gamma": 0.01}, {"k": 2, "gamma": 0.1},
            {"k": 5, "gamma": 0.01}, {"k": 5, "gamma": 0.1},
        ]
        assert set(choice.chosen) == {"k", "gamma"}

    def test_flat_kernel_fails_every_candidate(self):
        with pytest.raises(DegenerateInputError):
            tune_kpca(np.ones((10, 10)), np.ones((3, 10)), [2, 3], self_similarity=np.ones(3))


# ── Autoencoder ─────────────────────────────────────────────


class TestTuneAutoencoder:
    def test_architectures_are_scored(self, low_rank):
        X, y = low_rank
        fit, val = validation_split(y, 0.2, seed=5)
        cfg = TrainConfig(epochs=20, batch_size=16, step=1e-2, seed=3)
        architectures = [{"hidden": [8], "code": 2}, {"hidden": [], "code": 3}]
        choice = tune_autoencoder(X[fit], X[val], architectures, cfg)
        assert [c.params for c in choice.candidates] == architectures
        assert all(c.validation_mse is not None and c.validation_mse >= 0.0 for c in choice.candidates)
        assert choice.chosen in architectures

    def test_same_seed_same_choice(self, low_rank):
        X, y = low_rank
        fit, val = validation_split(y, 0.2, seed=5)
        cfg = TrainConfig(epochs=10, batch_size=16, seed=3)
        architectures = [{"hidden": [6], "code": 2}, {"hidden": [], "code": 2}]
        a = tune_autoencoder(X[fit], X[val], architectures, cfg).to_dict()
        b = tune_autoencoder(X[fit], X[val], architectures, cfg).to_dict()
        assert a == b
