"""
kpca.py — Kernel PCA on a precomputed kernel or a polynomial kernel

The training kernel is double-centered, eigendecomposed, and the top-k
positive eigenvectors are scaled by 1/sqrt(eigenvalue). New rows are
centered with the training column means before projection, so a row equal
to a training row lands exactly on that row's score.

Polynomial kernel: (gamma * <x, x'> + coef0) ** degree.

Usage:
    model = kpca_fit(K=kernel.K, k=50)                       # precomputed
    Z_test = kpca_transform(model, kernel_rows(kernel, test))

    model = kpca_fit(X=features, kernel="polynomial", k=50, gamma=0.002083)
    Z_test = kpca_transform(model, test_features)
    err = reconstruction_mse(model, test_features)           # feature-space MSE
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigh
from sklearn.metrics.pairwise import polynomial_kernel

from mts.errors import ConfigError, DegenerateInputError, ShapeError
from reduction.pca import ZERO_EIGENVALUE_RTOL, sign_fix

logger = logging.getLogger(__name__)

KERNELS = ("precomputed", "polynomial")
DEFAULT_GAMMA = 0.002083
DEFAULT_DEGREE = 3
DEFAULT_COEF0 = 1.0


@dataclass
class KpcaModel:
    kernel: str
    alphas: np.ndarray          # (n, k) eigenvectors / sqrt(eigenvalue)
    eigenvalues: np.ndarray     # (k,) of the centered kernel
    col_means: np.ndarray       # (n,) training kernel column means
    total_mean: float
    gamma: float = DEFAULT_GAMMA
    degree: int = DEFAULT_DEGREE
    coef0: float = DEFAULT_COEF0
    train_features: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return self.alphas.shape[1]

    @property
    def n_train(self) -> int:
        return self.alphas.shape[0]

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel,
            "alphas": self.alphas.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "col_means": self.col_means.tolist(),
            "total_mean": self.total_mean,
            "gamma": self.gamma,
            "degree": self.degree,
            "coef0": self.coef0,
            "train_features": None if self.train_features is None else self.train_features.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KpcaModel":
        n = len(data["col_means"])
        features = data.get("train_features")
        return cls(
            kernel=data["kernel"],
            alphas=np.asarray(data["alphas"], dtype=float).reshape(n, -1),
            eigenvalues=np.asarray(data["eigenvalues"], dtype=float),
            col_means=np.asarray(data["col_means"], dtype=float),
            total_mean=float(data["total_mean"]),
            gamma=float(data["gamma"]),
            degree=int(data["degree"]),
            coef0=float(data["coef0"]),
            train_features=None if features is None else np.asarray(features, dtype=float),
        )


def double_center(K: np.ndarray) -> np.ndarray:
    """H K H with H = I - 11^T / n."""
    col = K.mean(axis=0)
    row = K.mean(axis=1)
    return K - col[None, :] - row[:, None] + K.mean()


def kpca_fit(
    K: Optional[np.ndarray] = None,
    X: Optional[np.ndarray] = None,
    kernel: str = "precomputed",
    k: int = 50,
    gamma: float = DEFAULT_GAMMA,
    degree: int = DEFAULT_DEGREE,
    coef0: float = DEFAULT_COEF0,
) -> KpcaModel:
    if kernel not in KERNELS:
        raise ConfigError(f"unknown KPCA kernel '{kernel}', expected one of {KERNELS}")

    features = None
    if kernel == "precomputed":
        if K is None:
            raise ConfigError("precomputed KPCA needs a kernel matrix")
        K = np.asarray(K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ShapeError(f"kernel must be square, got shape {K.shape}")
        scale = max(float(np.abs(K).max()), 1.0)
        if not np.allclose(K, K.T, rtol=0.0, atol=1e-8 * scale):
            raise ConfigError("kernel matrix is not symmetric")
        K = 0.5 * (K + K.T)
    else:
        if X is None:
            raise ConfigError("polynomial KPCA needs a feature matrix")
        features = np.asarray(X, dtype=float)
        K = polynomial_kernel(features, degree=degree, gamma=gamma, coef0=coef0)

    n = K.shape[0]
    if not 1 <= k <= n - 1:
        raise ConfigError(f"k must be in [1, {n - 1}], got {k}")

    Kc = double_center(K)
    evals, evecs = eigh(Kc)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    trace = float(np.trace(Kc))
    positive = int((evals > ZERO_EIGENVALUE_RTOL * max(trace, 0.0)).sum()) if trace > 0 else 0
    if positive == 0:
        raise DegenerateInputError("centered kernel has no positive eigenvalue")
    if positive < k:
        logger.warning(f"KPCA: only {positive} positive eigenvalues, reducing k from {k}")
        k = positive

    vectors = sign_fix(evecs[:, :k].copy())
    lambdas = evals[:k].copy()
    logger.info(f"KPCA ({kernel}): kept {k} components")
    return KpcaModel(
        kernel=kernel,
        alphas=vectors / np.sqrt(lambdas),
        eigenvalues=lambdas,
        col_means=K.mean(axis=0),
        total_mean=float(K.mean()),
        gamma=gamma,
        degree=degree,
        coef0=coef0,
        train_features=features,
    )


def _kernel_rows(model: KpcaModel, rows: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if model.kernel == "polynomial":
        if rows.shape[1] != model.train_features.shape[1]:
            raise ShapeError(
                f"expected {model.train_features.shape[1]} feature columns, got {rows.shape[1]}"
            )
        return polynomial_kernel(
            rows, model.train_features, degree=model.degree, gamma=model.gamma, coef0=model.coef0
        )
    if rows.shape[1] != model.n_train:
        raise ShapeError(f"expected kernel rows of length {model.n_train}, got {rows.shape[1]}")
    return rows


def kpca_transform(model: KpcaModel, rows: np.ndarray) -> np.ndarray:
    """
    Project new data: kernel rows to the training set (precomputed) or raw
    feature rows (polynomial).
    """
    K_rows = _kernel_rows(model, rows)
    centered = K_rows - K_rows.mean(axis=1)[:, None] - model.col_means[None, :] + model.total_mean
    return centered @ model.alphas


def reconstruction_mse(
    model: KpcaModel, rows: np.ndarray, self_similarity: Optional[np.ndarray] = None
) -> float:
    """
    Mean squared feature-space distance between each point and its projection
    on the kept components.

    The centered squared norm of a point is k(x, x) - 2 mean_i k(x, x_i) plus
    the training kernel mean; the projection keeps sum(z ** 2) of it. The
    precomputed kernel cannot give k(x, x) for a new point, so pass it in
    (all ones for a normalized kernel, the diagonal for training rows).
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    K_rows = _kernel_rows(model, rows)
    if model.kernel == "polynomial":
        norms = np.einsum("ij,ij->i", rows, rows)
        self_sim = (model.gamma * norms + model.coef0) ** model.degree
    else:
        if self_similarity is None:
            raise ConfigError("precomputed KPCA error needs k(x, x) for every row")
        self_sim = np.asarray(self_similarity, dtype=float).ravel()
        if len(self_sim) != len(K_rows):
            raise ShapeError(f"expected {len(K_rows)} self-similarities, got {len(self_sim)}")

    centered_self = self_sim - 2.0 * K_rows.mean(axis=1) + model.total_mean
    centered = K_rows - K_rows.mean(axis=1)[:, None] - model.col_means[None, :] + model.total_mean
    Z = centered @ model.alphas
    residual = np.maximum(centered_self - np.einsum("ij,ij->i", Z, Z), 0.0)
    return float(residual.mean())
