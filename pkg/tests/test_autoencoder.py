"""Tests for reduction/autoencoder.py — training, encoding and persistence."""

import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from mts.errors import ShapeError
from reduction.autoencoder import (
    AeModel,
    ae_encode,
    ae_reconstruct,
    ae_train,
    reconstruction_mse,
)
from reduction.network import NetSpec, TrainConfig


@pytest.fixture
def tmp_dir():
    with tempfile.TemporaryDirectory() as d:
        yield d


@pytest.fixture
def small_model():
    X = np.random.default_rng(0).random((24, 8)) * 10.0
    model = ae_train(X, NetSpec.autoencoder(8, hidden=(6,), code=3), TrainConfig(epochs=20, seed=1))
    return model, X


# ── Training ────────────────────────────────────────────────


class TestAeTrain:
    def test_constant_rows_reconstructed(self):
        X = np.tile(np.linspace(0.2, 0.8, 10), (64, 1))
        cfg = TrainConfig(epochs=200, batch_size=16, step=0.01, decay=1.0, seed=0)
        model = ae_train(X, NetSpec.autoencoder(10, hidden=(8,), code=3), cfg, scale=False)
        assert model.history.losses[-1] <= 1e-3

    def test_rank_two_data(self):
        rng = np.random.default_rng(1)
        X = rng.random((100, 2)) @ rng.random((2, 20)) / 2.0
        baseline = float(np.mean((X - X.mean(axis=0)) ** 2))
        cfg = TrainConfig(epochs=1000, batch_size=16, step=3e-3, decay=0.999, seed=0)
        model = ae_train(X, NetSpec.autoencoder(20, hidden=(16,), code=2), cfg, scale=False)
        mse = reconstruction_mse(model, X)
        assert mse <= 0.01
        assert mse < 0.5 * baseline

    def test_deterministic(self):
        X = np.random.default_rng(2).random((16, 5))
        spec = NetSpec.autoencoder(5, hidden=(4,), code=2)
        a = ae_train(X, spec, TrainConfig(epochs=5, seed=3))
        b = ae_train(X, spec, TrainConfig(epochs=5, seed=3))
        assert a.history.losses == b.history.losses

    def test_scaler_fitted_on_training_data(self, small_model):
        model, X = small_model
        assert np.allclose(model.scaler.data_min_, X.min(axis=0))
        assert model.scale(X).min() == pytest.approx(0.0)
        assert model.scale(X).max() == pytest.approx(1.0)

    def test_spec_width_mismatch(self):
        with pytest.raises(ShapeError):
            ae_train(np.zeros((4, 3)), NetSpec.autoencoder(5, hidden=(4,), code=2))


# ── Encoding ────────────────────────────────────────────────


class TestAeEncode:
    def test_code_width(self, small_model):
        model, X = small_model
        codes = ae_encode(model, X)
        assert model.code_width == 3
        assert codes.shape == (24, 3)
        assert np.isfinite(codes).all()

    def test_duplicate_rows_share_code(self, small_model):
        model, X = small_model
        codes = ae_encode(model, np.vstack([X[:1], X[:1]]))
        assert np.array_equal(codes[0], codes[1])

    def test_training_mse_matches_last_epoch(self, small_model):
        model, X = small_model
        assert reconstruction_mse(model, X) == pytest.approx(model.history.losses[-1], rel=1e-12)

    def test_reconstruct_in_original_units(self, small_model):
        model, X = small_model
        out = ae_reconstruct(model, X)
        assert out.shape == X.shape
        assert (out >= X.min(axis=0) - 1e-9).all() and (out <= X.max(axis=0) + 1e-9).all()

    def test_wrong_width(self, small_model):
        model, _ = small_model
        with pytest.raises(ShapeError):
            ae_encode(model, np.zeros((2, 7)))


# ── Persistence ─────────────────────────────────────────────


class TestAePersistence:
    def test_save_load(self, small_model, tmp_dir):
        model, X = small_model
        path = Path(tmp_dir) / "ae" / "model.json"
        model.save(path)
        loaded = AeModel.load(path)
        assert np.array_equal(ae_encode(loaded, X), ae_encode(model, X))
        assert loaded.history.losses == model.history.losses

    def test_loss_csv(self, small_model, tmp_dir):
        model, _ = small_model
        path = Path(tmp_dir) / "loss.csv"
        model.loss_csv(path)
        frame = pd.read_csv(path)
        assert frame.columns.tolist() == ["epoch", "loss"]
        assert len(frame) == 21
        assert frame["loss"].iloc[0] == pytest.approx(model.history.initial_loss)
