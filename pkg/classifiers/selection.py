"""
selection.py — Stratified k-fold hyperparameter selection

Every grid point is evaluated on every fold. The winner has the highest
mean AUC, then the highest mean accuracy, then comes first in the grid.
Grid points that need a kernel matrix are skipped when none is given.

Usage:
    result = cross_validate(default_grid(ClassifierKind.SVM), X, y, folds=5, seed=2, kernel=K)
    result.best            # ClassifierSpec
    result.best_folds      # list[Metrics]
"""

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from sklearn.model_selection import StratifiedKFold

from classifiers.metrics import Metrics, compute_metrics
from classifiers.models import ClassifierKind, ClassifierSpec, fit, predict
from mts.errors import ConfigError, InfeasibleNuError, StratificationError
from mts.workers import resolve_n_jobs

logger = logging.getLogger(__name__)


def default_grid(kind: ClassifierKind) -> list[ClassifierSpec]:
    kind = ClassifierKind(kind)
    svm_kernels = [
        {"kernel": "linear"},
        {"kernel": "rbf", "gamma": 0.01},
        {"kernel": "rbf", "gamma": 0.1},
        {"kernel": "precomputed"},
    ]
    if kind is ClassifierKind.LOGISTIC:
        return [ClassifierSpec(kind, {"lam": lam}) for lam in (0.01, 0.1, 1.0)]
    if kind is ClassifierKind.KNN:
        return [ClassifierSpec(kind, {"k": k}) for k in (1, 3, 5, 11)]
    if kind is ClassifierKind.TREE:
        return [ClassifierSpec(kind, {"max_depth": d}) for d in (3, 5, 10, None)]
    if kind is ClassifierKind.FOREST:
        return [
            ClassifierSpec(kind, {"n_trees": t, "max_depth": d})
            for t, d in product((50, 200), (5, None))
        ]
    if kind is ClassifierKind.SVM:
        return [ClassifierSpec(kind, {"C": c, **k}) for c, k in product((0.1, 1.0, 10.0), svm_kernels)]
    if kind is ClassifierKind.NU_SVM:
        return [ClassifierSpec(kind, {"nu": nu, **k}) for nu, k in product((0.25, 0.5, 0.75), svm_kernels)]
    return [ClassifierSpec(kind, {"hidden": h, "epochs": 300}) for h in (32, 128)]


def stratified_folds(y: np.ndarray, folds: int = 5, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """(train_idx, test_idx) per fold, a pure function of (y, folds, seed)."""
    y = np.asarray(y, dtype=int)
    if folds < 2:
        raise ConfigError(f"folds must be >= 2, got {folds}")
    _, counts = np.unique(y, return_counts=True)
    if len(counts) < 2 or counts.min() < folds:
        raise StratificationError(
            f"{folds} stratified folds need at least {folds} records of each class, got {counts.tolist()}"
        )
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
    return [(train, test) for train, test in splitter.split(np.zeros(len(y)), y)]


@dataclass
class GridResult:
    spec: ClassifierSpec
    fold_metrics: list = field(default_factory=list)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and bool(self.fold_metrics)

    @property
    def mean(self) -> Metrics:
        return Metrics.mean(self.fold_metrics)


@dataclass
class CvResult:
    best: ClassifierSpec
    best_folds: list
    grid: list     # GridResult in grid order

    @property
    def best_mean(self) -> Metrics:
        return Metrics.mean(self.best_folds)


def _evaluate(spec: ClassifierSpec, X, y, train_idx, test_idx, seed, kernel):
    try:
        if spec.precomputed:
            model = fit(spec, kernel[np.ix_(train_idx, train_idx)], y[train_idx], seed)
            labels, scores = predict(model, kernel[np.ix_(test_idx, train_idx)])
        else:
            model = fit(spec, X[train_idx], y[train_idx], seed)
            labels, scores = predict(model, X[test_idx])
    except InfeasibleNuError as e:
        return None, str(e)
    return compute_metrics(y[test_idx], labels, scores), None


def cross_validate(
    grid: Sequence[ClassifierSpec],
    X: np.ndarray,
    y: np.ndarray,
    folds: int = 5,
    seed: int = 0,
    kernel: Optional[np.ndarray] = None,
    n_jobs: Optional[int] = None,
) -> CvResult:
    if not grid:
        raise ConfigError("hyperparameter grid is empty")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)

    usable = []
    for spec in grid:
        if spec.precomputed and kernel is None:
            logger.info(f"Skipping {spec.kind.value} {spec.hyperparams_json()}: no kernel matrix")
            continue
        usable.append(spec)
    if not usable:
        raise ConfigError("every grid point needs a kernel matrix and none was given")

    splits = stratified_folds(y, folds, seed)
    jobs = [(spec, tr, te) for spec in usable for tr, te in splits]
    outcomes = Parallel(n_jobs=resolve_n_jobs(n_jobs))(
        delayed(_evaluate)(spec, X, y, tr, te, seed, kernel) for spec, tr, te in jobs
    )

    results = []
    for i, spec in enumerate(usable):
        chunk = outcomes[i * folds:(i + 1) * folds]
        errors = [err for _, err in chunk if err is not None]
        if errors:
            logger.warning(f"{spec.kind.value} {spec.hyperparams_json()}: {errors[0]}")
            results.append(GridResult(spec, error=errors[0]))
        else:
            results.append(GridResult(spec, fold_metrics=[m for m, _ in chunk]))

    ranked = [(i, r) for i, r in enumerate(results) if r.ok]
    if not ranked:
        raise ConfigError(f"no grid point could be evaluated for {usable[0].kind.value}")
    best_idx, best = min(ranked, key=lambda item: (-item[1].mean.auc, -item[1].mean.accuracy, item[0]))
    logger.info(
        f"{best.spec.kind.value}: selected {best.spec.hyperparams_json()} "
        f"(mean AUC {best.mean.auc:.4f}, accuracy {best.mean.accuracy:.4f})"
    )
    return CvResult(best=best.spec, best_folds=best.fold_metrics, grid=results)
