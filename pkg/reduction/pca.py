"""
pca.py — Principal component analysis by symmetric eigendecomposition

Components are eigenvectors of the sample covariance, ordered by
eigenvalue and sign-fixed so the entry of largest magnitude is positive.
The component count is either given or the smallest count whose
cumulative eigenvalue share reaches a target fraction.

Usage:
    model = pca_fit(X, variance=0.99)
    Z = pca_transform(model, X)
    X_hat = pca_inverse_transform(model, Z)
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigh

from mts.errors import ConfigError, DegenerateInputError, ShapeError

logger = logging.getLogger(__name__)

ZERO_EIGENVALUE_RTOL = 1e-12


def sign_fix(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


@dataclass
class PcaModel:
    mean: np.ndarray           # (p,)
    eigenvalues: np.ndarray    # (p,) non-increasing, all of them
    components: np.ndarray     # (p, k)
    captured_variance_fraction: float

    @property
    def n_components(self) -> int:
        return self.components.shape[1]

    @property
    def n_features(self) -> int:
        return len(self.mean)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "components": self.components.tolist(),
            "captured_variance_fraction": self.captured_variance_fraction,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PcaModel":
        p = len(data["mean"])
        return cls(
            mean=np.asarray(data["mean"], dtype=float),
            eigenvalues=np.asarray(data["eigenvalues"], dtype=float),
            components=np.asarray(data["components"], dtype=float).reshape(p, -1),
            captured_variance_fraction=float(data["captured_variance_fraction"]),
        )


def pca_fit(
    X: np.ndarray,
    variance: Optional[float] = None,
    n_components: Optional[int] = None,
) -> PcaModel:
    """Fit on the rows of X; give exactly one of `variance` or `n_components`."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {X.shape}")
    n, p = X.shape
    if n < 2:
        raise ConfigError(f"PCA needs at least 2 rows, got {n}")
    if (variance is None) == (n_components is None):
        raise ConfigError("give exactly one of variance or n_components")
    if variance is not None and not 0.0 < variance <= 1.0:
        raise ConfigError(f"variance fraction must be in (0, 1], got {variance}")
    if n_components is not None and not 1 <= n_components <= min(n, p):
        raise ConfigError(f"n_components must be in [1, {min(n, p)}], got {n_components}")

    mean = X.mean(axis=0)
    cov = np.atleast_2d(np.cov(X, rowvar=False))
    evals, evecs = eigh(cov)
    evals, evecs = evals[::-1], evecs[:, ::-1]

    total = float(np.trace(cov))
    if total <= 0:
        raise DegenerateInputError("all rows are identical; nothing to decompose")
    evals = np.where(evals < ZERO_EIGENVALUE_RTOL * total, 0.0, evals)
    if not (evals > 0).any():
        raise DegenerateInputError("covariance has rank 0")

    share = np.cumsum(evals) / evals.sum()
    if n_components is None:
        k = int(np.argmax(share >= variance - 1e-12)) + 1
    else:
        k = n_components

    components = sign_fix(evecs[:, :k].copy())
    logger.info(f"PCA: {k} of {p} components capture {share[k - 1]:.4f} of the variance")
    return PcaModel(
        mean=mean,
        eigenvalues=evals,
        components=components,
        captured_variance_fraction=float(share[k - 1]),
    )


def _check_width(model: PcaModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_features:
        raise ShapeError(f"expected {model.n_features} columns, got {X.shape[1]}")
    return X


def pca_transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    X = _check_width(model, X)
    return (X - model.mean) @ model.components


def pca_inverse_transform(model: PcaModel, Z: np.ndarray) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[1] != model.n_components:
        raise ShapeError(f"expected {model.n_components} score columns, got {Z.shape[1]}")
    return Z @ model.components.T + model.mean


def reconstruction_mse(model: PcaModel, X: np.ndarray) -> float:
    X = _check_width(model, X)
    return float(np.mean((X - pca_inverse_transform(model, pca_transform(model, X))) ** 2))
