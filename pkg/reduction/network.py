"""
network.py — Fully-connected network core with backprop and Adam

Shared by the autoencoder and the MLP classifier. Hidden layers use
leaky-ReLU (slope 0.01) and the output layer a sigmoid. Two losses:
mean squared error over every output cell, and binary cross-entropy over
rows (computed from logits).

Usage:
    spec = NetSpec.autoencoder(p=480, hidden=(712,), code=250)
    net = Network(spec, rng=np.random.default_rng(0))
    history = train_network(net, X, X, TrainConfig(epochs=1000))
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from mts.errors import ConfigError, DivergenceError, ShapeError

logger = logging.getLogger(__name__)

LEAKY_SLOPE = 0.01
LOSSES = ("mse", "bce")
ACTIVATIONS = ("leaky", "sigmoid")


# ── Activations ──────────────────────────────────────────────


def leaky_relu(z: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    return np.where(z >= 0, z, slope * z)


def leaky_relu_grad(z: np.ndarray, slope: float = LEAKY_SLOPE) -> np.ndarray:
    return np.where(z >= 0, 1.0, slope)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return expit(z)


def sigmoid_grad(z: np.ndarray) -> np.ndarray:
    s = expit(z)
    return s * (1.0 - s)


_FORWARD = {"leaky": leaky_relu, "sigmoid": sigmoid}
_BACKWARD = {"leaky": leaky_relu_grad, "sigmoid": sigmoid_grad}


@dataclass
class NetSpec:
    widths: list                 # [input, ..., output]
    activations: list            # one per layer, len(widths) - 1
    loss: str = "mse"
    code_layer: Optional[int] = None   # index of the layer whose output is the code

    def __post_init__(self):
        self.widths = [int(w) for w in self.widths]
        self.activations = list(self.activations)
        if len(self.widths) < 2 or any(w < 1 for w in self.widths):
            raise ConfigError(f"layer widths must be positive, got {self.widths}")
        if len(self.activations) != len(self.widths) - 1:
            raise ConfigError("need one activation per layer")
        if any(a not in ACTIVATIONS for a in self.activations):
            raise ConfigError(f"activations must be among {ACTIVATIONS}")
        if self.loss not in LOSSES:
            raise ConfigError(f"loss must be one of {LOSSES}, got '{self.loss}'")
        if self.loss == "bce" and self.activations[-1] != "sigmoid":
            raise ConfigError("cross-entropy loss needs a sigmoid output layer")

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1

    @classmethod
    def autoencoder(cls, p: int, hidden: Sequence[int] = (712,), code: int = 250) -> "NetSpec":
        """p -> hidden... -> code -> reversed(hidden)... -> p."""
        encoder = [p, *hidden, code]
        widths = encoder + list(reversed(encoder[:-1]))
        n_layers = len(widths) - 1
        return cls(
            widths=widths,
            activations=["leaky"] * (n_layers - 1) + ["sigmoid"],
            loss="mse",
            code_layer=len(encoder) - 2,
        )

    @classmethod
    def classifier(cls, p: int, hidden: Sequence[int] = (32,)) -> "NetSpec":
        widths = [p, *hidden, 1]
        return cls(
            widths=widths,
            activations=["leaky"] * len(hidden) + ["sigmoid"],
            loss="bce",
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "NetSpec":
        return cls(**data)


@dataclass
class TrainConfig:
    epochs: int = 1000
    batch_size: int = 32
    step: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    decay: float = 0.998
    seed: int = 0

    def validate(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 < self.decay <= 1.0:
            raise ConfigError(f"decay must be in (0, 1], got {self.decay}")
        if self.batch_size < 1 or self.step <= 0:
            raise ConfigError("batch_size must be >= 1 and step > 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown training settings: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg


class Network:
    """Weights W[l] of shape (in, out) and biases b[l] of shape (out,)."""

    def __init__(self, spec: NetSpec, rng: Optional[np.random.Generator] = None):
        self.spec = spec
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(spec.widths[:-1], spec.widths[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def params(self) -> list:
        """Flat parameter list: W0, b0, W1, b1, ..."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out.extend([W, b])
        return out

    def _check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.spec.widths[0]:
            raise ShapeError(f"network expects {self.spec.widths[0]} inputs, got {X.shape[1]}")
        return X

    # ── Forward / backward ───────────────────────────────────

    def forward(self, X: np.ndarray, upto: Optional[int] = None):
        """Pre-activations and activations per layer, through layer `upto`."""
        last = self.spec.n_layers - 1 if upto is None else upto
        A = [X]
        Z = []
        for l in range(last + 1):
            z = A[-1] @ self.weights[l] + self.biases[l]
            Z.append(z)
            A.append(_FORWARD[self.spec.activations[l]](z))
        return Z, A

    def predict(self, X: np.ndarray) -> np.ndarray:
        _, A = self.forward(self._check_input(X))
        return A[-1]

    def encode(self, X: np.ndarray) -> np.ndarray:
        if self.spec.code_layer is None:
            raise ConfigError("network has no code layer")
        _, A = self.forward(self._check_input(X), upto=self.spec.code_layer)
        return A[-1]

    def loss(self, X: np.ndarray, T: np.ndarray) -> float:
        Z, A = self.forward(X)
        return self._loss(Z[-1], A[-1], T)

    def _loss(self, z_out, y, T) -> float:
        if self.spec.loss == "mse":
            return float(np.mean((y - T) ** 2))
        return float(np.mean(np.logaddexp(0.0, z_out) - T * z_out))

    def loss_and_grads(self, X: np.ndarray, T: np.ndarray):
        """Loss and gradients in `params` order."""
        Z, A = self.forward(X)
        y = A[-1]
        loss = self._loss(Z[-1], y, T)

        if self.spec.loss == "mse":
            dZ = 2.0 * (y - T) / y.size * _BACKWARD[self.spec.activations[-1]](Z[-1])
        else:
            # cross-entropy is computed from logits, so the output must be a sigmoid
            dZ = (expit(Z[-1]) - T) / len(X)

        grads_W = [None] * self.spec.n_layers
        grads_b = [None] * self.spec.n_layers
        for l in range(self.spec.n_layers - 1, -1, -1):
            grads_W[l] = A[l].T @ dZ
            grads_b[l] = dZ.sum(axis=0)
            if l > 0:
                dA = dZ @ self.weights[l].T
                dZ = dA * _BACKWARD[self.spec.activations[l - 1]](Z[l - 1])

        grads = []
        for gW, gb in zip(grads_W, grads_b):
            grads.extend([gW, gb])
        return loss, grads

    # ── Serialization ───────────────────────────────────────

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "params": [p.ravel().tolist() for p in self.params],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Network":
        net = cls(NetSpec.from_dict(data["spec"]))
        flat = data["params"]
        for l, (fan_in, fan_out) in enumerate(zip(net.spec.widths[:-1], net.spec.widths[1:])):
            net.weights[l] = np.asarray(flat[2 * l], dtype=float).reshape(fan_in, fan_out)
            net.biases[l] = np.asarray(flat[2 * l + 1], dtype=float).reshape(fan_out)
        return net


class Adam:
    def __init__(self, params: list, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list, grads: list, lr: float):
        """Update `params` in place."""
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class TrainHistory:
    initial_loss: float
    losses: list = field(default_factory=list)   # full-data loss after each epoch


def train_network(
    net: Network,
    X: np.ndarray,
    T: np.ndarray,
    cfg: TrainConfig,
    rng: Optional[np.random.Generator] = None,
) -> TrainHistory:
    """Mini-batch Adam with learning rate step * decay**epoch."""
    cfg.validate()
    X = net._check_input(X)
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if T.shape[0] != X.shape[0] or T.shape[1] != net.spec.widths[-1]:
        raise ShapeError(f"targets have shape {T.shape}, expected ({X.shape[0]}, {net.spec.widths[-1]})")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)

    n = len(X)
    batch = min(cfg.batch_size, n)
    if batch < cfg.batch_size:
        logger.debug(f"batch size reduced to {batch} for {n} rows")
    params = net.params
    opt = Adam(params, cfg.beta1, cfg.beta2, cfg.eps)

    initial = net.loss(X, T)
    if not np.isfinite(initial):
        raise DivergenceError(0, initial)
    history = TrainHistory(initial_loss=initial)

    for epoch in range(cfg.epochs):
        lr = cfg.step * cfg.decay ** epoch
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            _, grads = net.loss_and_grads(X[idx], T[idx])
            opt.step(params, grads, lr)
        loss = net.loss(X, T)
        if not np.isfinite(loss):
            raise DivergenceError(epoch + 1, loss)
        history.losses.append(loss)
        if (epoch + 1) % 100 == 0:
            logger.debug(f"epoch {epoch + 1}: loss {loss:.6g}")
    return history


def grad_check(
    spec: NetSpec,
    seed: int = 0,
    batch: int = 4,
    h: float = 1e-5,
    order: Optional[Sequence[int]] = None,
    net: Optional[Network] = None,
    X: Optional[np.ndarray] = None,
) -> float:
    """
    Max relative error between backprop and central differences.

    `order` permutes the parameter arrays before they are compared.
    """
    rng = np.random.default_rng(seed)
    net = net if net is not None else Network(spec, rng)
    if X is None:
        X = rng.random((batch, spec.widths[0]))
    if spec.loss == "bce":
        T = (rng.random((len(X), spec.widths[-1])) < 0.5).astype(float)
    else:
        T = rng.random((len(X), spec.widths[-1]))

    _, grads = net.loss_and_grads(X, T)
    params = net.params
    indices = list(order) if order is not None else list(range(len(params)))

    worst = 0.0
    for i in indices:
        p, g = params[i], grads[i]
        for j in np.ndindex(p.shape):
            saved = p[j]
            p[j] = saved + h
            plus = net.loss(X, T)
            p[j] = saved - h
            minus = net.loss(X, T)
            p[j] = saved
            numeric = (plus - minus) / (2 * h)
            err = abs(g[j] - numeric) / max(abs(g[j]) + abs(numeric), 1e-7)
            worst = max(worst, err)
    return worst
