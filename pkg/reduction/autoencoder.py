"""
autoencoder.py — Autoencoder over kernel rows

Inputs are min-max scaled per column with training statistics (the sigmoid
output can only reach (0, 1)), then a mirrored network p -> 712 -> 250 ->
712 -> p is trained on MSE for a fixed number of epochs.

Usage:
    model = ae_train(X_train, spec=NetSpec.autoencoder(X_train.shape[1]), cfg=TrainConfig())
    codes = ae_encode(model, X_test)
    model.save("embed/ae/model.json")
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from sklearn.preprocessing import MinMaxScaler

from mts.errors import ShapeError
from reduction.network import NetSpec, Network, TrainConfig, TrainHistory, train_network

logger = logging.getLogger(__name__)


@dataclass
class AeModel:
    net: Network
    history: TrainHistory
    scaler: Optional[MinMaxScaler] = None

    @property
    def spec(self) -> NetSpec:
        return self.net.spec

    @property
    def code_width(self) -> int:
        return self.spec.widths[self.spec.code_layer + 1]

    def scale(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.spec.widths[0]:
            raise ShapeError(f"autoencoder expects {self.spec.widths[0]} columns, got {X.shape[1]}")
        return self.scaler.transform(X) if self.scaler is not None else X

    # ── Load / Save ──────────────────────────────────────────

    def to_dict(self) -> dict:
        return {
            "network": self.net.to_dict(),
            "initial_loss": self.history.initial_loss,
            "losses": list(self.history.losses),
            "scaler": None if self.scaler is None else {
                "data_min": self.scaler.data_min_.tolist(),
                "data_max": self.scaler.data_max_.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AeModel":
        scaler = None
        if data.get("scaler") is not None:
            bounds = np.vstack([data["scaler"]["data_min"], data["scaler"]["data_max"]])
            scaler = MinMaxScaler().fit(bounds)
        return cls(
            net=Network.from_dict(data["network"]),
            history=TrainHistory(initial_loss=data["initial_loss"], losses=list(data["losses"])),
            scaler=scaler,
        )

    def save(self, path: str):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def load(cls, path: str) -> "AeModel":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def loss_csv(self, path: str):
        """Per-epoch training loss as `epoch,loss` (epoch 0 is before training)."""
        losses = [self.history.initial_loss] + list(self.history.losses)
        df = pd.DataFrame({"epoch": range(len(losses)), "loss": losses})
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=False, float_format="%.17g")


def ae_train(
    X: np.ndarray,
    spec: Optional[NetSpec] = None,
    cfg: Optional[TrainConfig] = None,
    scale: bool = True,
) -> AeModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    spec = spec or NetSpec.autoencoder(X.shape[1])
    cfg = cfg or TrainConfig()
    if X.shape[1] != spec.widths[0]:
        raise ShapeError(f"spec expects {spec.widths[0]} inputs, data has {X.shape[1]}")

    scaler = MinMaxScaler().fit(X) if scale else None
    Xs = scaler.transform(X) if scaler is not None else X

    rng = np.random.default_rng(cfg.seed)
    net = Network(spec, rng)
    logger.info(f"Training autoencoder {spec.widths} for {cfg.epochs} epochs on {len(X)} rows")
    history = train_network(net, Xs, Xs, cfg, rng)
    logger.info(f"Autoencoder loss {history.initial_loss:.6g} -> {history.losses[-1]:.6g}")
    return AeModel(net=net, history=history, scaler=scaler)


def ae_encode(model: AeModel, X: np.ndarray) -> np.ndarray:
    return model.net.encode(model.scale(X))


def ae_reconstruct(model: AeModel, X: np.ndarray) -> np.ndarray:
    """Reconstruction in the original input units."""
    out = model.net.predict(model.scale(X))
    return model.scaler.inverse_transform(out) if model.scaler is not None else out


def reconstruction_mse(model: AeModel, X: np.ndarray) -> float:
    """MSE in the scaled space the network was trained on."""
    Xs = model.scale(X)
    return float(np.mean((model.net.predict(Xs) - Xs) ** 2))
