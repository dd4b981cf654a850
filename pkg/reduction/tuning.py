"""
tuning.py — Pick dimensionality-reduction settings on a validation split

Each candidate is fitted on part of the training records and scored by its
reconstruction MSE on the held-out rest. The winner is the first candidate
whose error is within a relative `tolerance` of the smallest one; with the
default tolerance of 0 that is the lowest error, ties going to the earlier
candidate. Candidates that fail to fit stay in the record with their error.

Kernel inputs are sliced the way test rows are: the fit part is the kernel
among fit records, the validation rows hold similarities to the fit records
only.

Usage:
    fit_idx, val_idx = validation_split(train.labels, fraction=0.2, seed=3)
    inner, cross = np.ix_(fit_idx, fit_idx), np.ix_(val_idx, fit_idx)
    choice = tune_pca(K[inner], K[cross], [0.9, 0.95, 0.99])
    choice.chosen          # {"variance": 0.99}
    choice.to_dict()       # every candidate with its validation MSE
"""

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional, Sequence

import numpy as np
from sklearn.model_selection import train_test_split

from mts.errors import ConfigError, DegenerateInputError, DivergenceError, StratificationError
from reduction.autoencoder import ae_train
from reduction.autoencoder import reconstruction_mse as ae_reconstruction_mse
from reduction.kpca import DEFAULT_COEF0, DEFAULT_DEGREE, DEFAULT_GAMMA, kpca_fit
from reduction.kpca import reconstruction_mse as kpca_reconstruction_mse
from reduction.network import NetSpec, TrainConfig
from reduction.pca import pca_fit
from reduction.pca import reconstruction_mse as pca_reconstruction_mse

logger = logging.getLogger(__name__)

# a candidate that raises one of these is recorded and skipped
FIT_ERRORS = (ConfigError, DegenerateInputError, DivergenceError)


@dataclass
class Candidate:
    params: dict
    validation_mse: Optional[float] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {"params": self.params, "validation_mse": self.validation_mse, "error": self.error}


@dataclass
class Choice:
    method: str
    candidates: list = field(default_factory=list)
    chosen: dict = field(default_factory=dict)
    n_fit: int = 0
    n_validation: int = 0

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "candidates": [c.to_dict() for c in self.candidates],
            "chosen": self.chosen,
            "n_fit": self.n_fit,
            "n_validation": self.n_validation,
        }


def validation_split(y: np.ndarray, fraction: float = 0.2, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """(fit_idx, val_idx), stratified by label and sorted."""
    y = np.asarray(y, dtype=int)
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"validation fraction must be in (0, 1), got {fraction}")
    _, counts = np.unique(y, return_counts=True)
    if len(counts) < 2 or counts.min() < 2:
        raise StratificationError(
            f"a stratified validation split needs two records of each class, got {counts.tolist()}"
        )
    try:
        fit_idx, val_idx = train_test_split(
            np.arange(len(y)), test_size=fraction, stratify=y, random_state=seed
        )
    except ValueError as e:
        raise StratificationError(f"cannot hold out {fraction} of {len(y)} records: {e}") from e
    return np.sort(fit_idx), np.sort(val_idx)


def choose(candidates: Sequence[Candidate], tolerance: float = 0.0) -> Candidate:
    scored = [c for c in candidates if c.validation_mse is not None]
    if not scored:
        raise DegenerateInputError("no candidate could be fitted on the validation split")
    best = min(c.validation_mse for c in scored)
    return next(c for c in scored if c.validation_mse <= best * (1.0 + tolerance))


def _run(method: str, grid: Sequence[dict], score: Callable[[dict], float], tolerance: float,
         n_fit: int, n_validation: int) -> Choice:
    candidates = []
    for params in grid:
        candidate = Candidate(params=dict(params))
        try:
            candidate.validation_mse = float(score(params))
            logger.info(f"{method}: validation MSE {candidate.validation_mse:.6g} for {params}")
        except FIT_ERRORS as e:
            candidate.error = str(e)
            logger.warning(f"{method}: candidate {params} failed: {e}")
        candidates.append(candidate)
    winner = choose(candidates, tolerance)
    logger.info(f"{method}: chose {winner.params} (validation MSE {winner.validation_mse:.6g})")
    return Choice(method, candidates, dict(winner.params), n_fit, n_validation)


def tune_pca(X_fit: np.ndarray, X_val: np.ndarray, variances: Sequence[float],
             tolerance: float = 0.0) -> Choice:
    def score(params):
        model = pca_fit(X_fit, variance=params["variance"])
        return pca_reconstruction_mse(model, X_val)

    grid = [{"variance": float(v)} for v in variances]
    return _run("pca", grid, score, tolerance, len(X_fit), len(X_val))


def tune_kpca(
    fit_data: np.ndarray,
    val_data: np.ndarray,
    k_values: Sequence[int],
    self_similarity: Optional[np.ndarray] = None,
    kernel: str = "precomputed",
    gammas: Sequence[float] = (DEFAULT_GAMMA,),
    degree: int = DEFAULT_DEGREE,
    coef0: float = DEFAULT_COEF0,
    tolerance: float = 0.0,
) -> Choice:
    """
    Precomputed: fit_data is the fit-record kernel, val_data the validation
    rows against it, self_similarity k(x, x) of the validation records.
    Polynomial: both are feature rows and gamma is tuned along with k.

    A k above what the fit part allows is capped there, so it scores the
    same as the cap and the smaller k listed first wins the tie.
    """
    cap = len(fit_data) - 1

    def score(params):
        k = min(params["k"], cap)
        if kernel == "precomputed":
            model = kpca_fit(K=fit_data, k=k)
            return kpca_reconstruction_mse(model, val_data, self_similarity)
        model = kpca_fit(X=fit_data, kernel="polynomial", k=k, gamma=params["gamma"], degree=degree, coef0=coef0)
        return kpca_reconstruction_mse(model, val_data)

    if kernel == "precomputed":
        grid = [{"k": int(k)} for k in k_values]
    else:
        grid = [{"k": int(k), "gamma": float(g)} for k, g in product(k_values, gammas)]
    return _run("kpca", grid, score, tolerance, len(fit_data), len(val_data))


def tune_autoencoder(
    X_fit: np.ndarray,
    X_val: np.ndarray,
    architectures: Sequence[dict],
    cfg: TrainConfig,
    tolerance: float = 0.0,
) -> Choice:
    """Each architecture is {"hidden": [...], "code": c}; the error is in min-max scaled units."""
    def score(params):
        spec = NetSpec.autoencoder(X_fit.shape[1], hidden=params["hidden"], code=params["code"])
        model = ae_train(X_fit, spec, cfg)
        return ae_reconstruction_mse(model, X_val)

    grid = [{"hidden": [int(h) for h in a["hidden"]], "code": int(a["code"])} for a in architectures]
    return _run("ae", grid, score, tolerance, len(X_fit), len(X_val))
