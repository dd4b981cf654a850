"""
tsne.py — Exact t-SNE for 2-D views of a learned representation

Per-point Gaussian bandwidths are found by bisection on the entropy of the
conditional distribution, the joint P is the symmetrized conditional
matrix divided by 2n, and the embedding follows the Student-t gradient with
early exaggeration, momentum and per-coordinate gains.

Usage:
    emb = tsne(Z, TsneConfig(perplexity=30, seed=1), ids=ds.ids, labels=ds.labels, method="KPCA")
    emb.to_csv("embed/kpca/embedding.csv")
"""

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy.spatial.distance import pdist, squareform

from mts.errors import ConfigError

logger = logging.getLogger(__name__)

MIN_POINTS = 10
Q_FLOOR = 1e-12


@dataclass
class TsneConfig:
    perplexity: float = 30.0
    n_iter: int = 1000
    exaggeration: float = 12.0
    exaggeration_iters: int = 250
    learning_rate: float = 200.0
    momentum: float = 0.5
    final_momentum: float = 0.8
    momentum_switch: int = 250
    entropy_tol: float = 1e-5
    max_bisection: int = 50
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TsneConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown t-SNE settings: {sorted(unknown)}")
        return cls(**data)


@dataclass
class Embedding2D:
    coords: np.ndarray      # (n, 2)
    ids: list
    labels: np.ndarray
    method: str = ""
    kl_trace: list = field(default_factory=list)

    def to_csv(self, path: str):
        df = pd.DataFrame({
            "id": list(self.ids),
            "x": self.coords[:, 0],
            "y": self.coords[:, 1],
            "label": np.asarray(self.labels, dtype=int),
            "method": self.method,
        })
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=False, float_format="%.17g")

    @classmethod
    def from_csv(cls, path: str) -> "Embedding2D":
        df = pd.read_csv(path, dtype={"id": str, "method": str}, keep_default_na=False, float_precision="round_trip")
        return cls(
            coords=df[["x", "y"]].to_numpy(dtype=float),
            ids=df["id"].tolist(),
            labels=df["label"].to_numpy(dtype=int),
            method=str(df["method"].iloc[0]) if len(df) else "",
        )


def _entropy(d: np.ndarray, beta: float):
    """Entropy (nats) and probabilities of one conditional row given shifted distances."""
    p = np.exp(-d * beta)
    total = p.sum()
    p /= total
    return np.log(total) + beta * float(np.dot(d, p)), p


def calibrate_affinities(
    sq_dists: np.ndarray,
    perplexity: float,
    tol: float = 1e-5,
    max_steps: int = 50,
):
    """
    Conditional affinities P[j|i] (rows sum to 1) and the per-point precision beta.

    Returns (P_cond, betas, achieved_perplexity).
    """
    n = len(sq_dists)
    target = np.log(perplexity)
    P = np.zeros((n, n))
    betas = np.zeros(n)
    achieved = np.zeros(n)
    others = ~np.eye(n, dtype=bool)

    for i in range(n):
        d = sq_dists[i, others[i]]
        d = d - d.min()
        median = np.median(d)
        beta = 1.0 / median if median > 0 else 1.0
        lo, hi = 0.0, np.inf
        H, p = _entropy(d, beta)
        for _ in range(max_steps):
            if abs(H - target) < tol:
                break
            if H > target:
                lo = beta
                beta = beta * 2.0 if np.isinf(hi) else 0.5 * (lo + hi)
            else:
                hi = beta
                beta = 0.5 * (lo + hi)
            H, p = _entropy(d, beta)
        P[i, others[i]] = p
        betas[i] = beta
        achieved[i] = np.exp(H)
    return P, betas, achieved


def joint_probabilities(X: np.ndarray, perplexity: float, tol: float = 1e-5, max_steps: int = 50) -> np.ndarray:
    sq = squareform(pdist(X, "sqeuclidean"))
    P_cond, _, _ = calibrate_affinities(sq, perplexity, tol, max_steps)
    return (P_cond + P_cond.T) / (2.0 * len(X))


def kl_divergence(P: np.ndarray, Q: np.ndarray) -> float:
    nz = P > 0
    return float(np.sum(P[nz] * np.log(P[nz] / Q[nz])))


def tsne(
    X: np.ndarray,
    cfg: Optional[TsneConfig] = None,
    ids: Optional[Sequence[str]] = None,
    labels: Optional[Sequence[int]] = None,
    method: str = "",
) -> Embedding2D:
    cfg = cfg or TsneConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = len(X)
    if n < MIN_POINTS:
        raise ConfigError(f"t-SNE needs at least {MIN_POINTS} points, got {n}")
    if not 0 < cfg.perplexity < (n - 1) / 3.0:
        raise ConfigError(f"perplexity {cfg.perplexity} must be below (n-1)/3 = {(n - 1) / 3.0:.2f}")

    P = joint_probabilities(X, cfg.perplexity, cfg.entropy_tol, cfg.max_bisection)

    rng = np.random.default_rng(cfg.seed)
    Y = 1e-4 * rng.standard_normal((n, 2))
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    trace = []

    for it in range(cfg.n_iter):
        exaggeration = cfg.exaggeration if it < cfg.exaggeration_iters else 1.0
        momentum = cfg.momentum if it < cfg.momentum_switch else cfg.final_momentum

        num = 1.0 / (1.0 + squareform(pdist(Y, "sqeuclidean")))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), Q_FLOOR)
        trace.append(kl_divergence(P, Q))

        W = (exaggeration * P - Q) * num
        grad = 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)

        same = (grad > 0) == (update > 0)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        update = momentum * update - cfg.learning_rate * gains * grad
        Y = Y + update
        Y = Y - Y.mean(axis=0)

        if (it + 1) % 100 == 0:
            logger.debug(f"t-SNE iteration {it + 1}: KL {trace[-1]:.5f}")

    logger.info(f"t-SNE ({method or 'unnamed'}): {n} points, final KL {trace[-1]:.5f}")
    return Embedding2D(
        coords=Y,
        ids=list(ids) if ids is not None else [str(i) for i in range(n)],
        labels=np.asarray(labels if labels is not None else np.zeros(n), dtype=int),
        method=method,
        kl_trace=trace,
    )
