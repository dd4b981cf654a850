"""
models.py — The seven classifiers behind one fit/predict interface

Every model produces a continuous score (a probability, or a signed
margin for the SVMs) as well as a 0/1 label, so AUC is computed from the
score and never from thresholded labels.

Kernel mode: when a spec's `kernel` is "precomputed", fit() takes the
n x n training kernel and predict() takes kernel rows to the training
records. k-NN then ranks neighbours by the kernel-induced distance.

Usage:
    spec = ClassifierSpec(ClassifierKind.SVM, {"C": 1.0, "kernel": "precomputed"})
    model = fit(spec, K_train, y_train, seed=3)
    labels, scores = predict(model, K_test_rows)
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.neighbors import KNeighborsClassifier
from sklearn.preprocessing import StandardScaler
from sklearn.svm import SVC, NuSVC
from sklearn.tree import DecisionTreeClassifier
from sklearn.ensemble import RandomForestClassifier

from mts.errors import ConfigError, DegenerateLabelError, InfeasibleNuError, ShapeError
from reduction.network import NetSpec, Network, TrainConfig, train_network

logger = logging.getLogger(__name__)

# nu-property check: fraction tolerance, and how far inside the margin counts as an error
NU_TOL = 0.02
MARGIN_SLACK = 1e-2


class ClassifierKind(Enum):
    LOGISTIC = "logistic-regression"
    KNN = "k-nn"
    TREE = "decision-tree"
    FOREST = "random-forest"
    SVM = "svm"
    NU_SVM = "nu-svm"
    MLP = "mlp"


# Report order and display names
CLASSIFIER_ORDER = [
    ClassifierKind.LOGISTIC,
    ClassifierKind.KNN,
    ClassifierKind.TREE,
    ClassifierKind.FOREST,
    ClassifierKind.NU_SVM,
    ClassifierKind.SVM,
    ClassifierKind.MLP,
]
DISPLAY_NAMES = {
    ClassifierKind.LOGISTIC: "LR",
    ClassifierKind.KNN: "k-NN",
    ClassifierKind.TREE: "Tree",
    ClassifierKind.FOREST: "Random forest",
    ClassifierKind.NU_SVM: "nu-SVM",
    ClassifierKind.SVM: "SVM",
    ClassifierKind.MLP: "MLP",
}

SVM_KERNELS = ("linear", "rbf", "precomputed")

DEFAULT_PARAMS = {
    ClassifierKind.LOGISTIC: {"lam": 0.01},
    ClassifierKind.KNN: {"k": 5, "kernel": "euclidean"},
    ClassifierKind.TREE: {"max_depth": None, "min_samples_leaf": 1},
    ClassifierKind.FOREST: {"n_trees": 200, "max_depth": None},
    ClassifierKind.SVM: {"C": 1.0, "kernel": "rbf", "gamma": 0.1},
    ClassifierKind.NU_SVM: {"nu": 0.5, "kernel": "rbf", "gamma": 0.1},
    ClassifierKind.MLP: {"hidden": 32, "epochs": 300},
}


@dataclass
class ClassifierSpec:
    kind: ClassifierKind
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        try:
            self.kind = ClassifierKind(self.kind)
        except ValueError:
            raise ConfigError(f"unknown classifier kind '{self.kind}'")
        merged = dict(DEFAULT_PARAMS[self.kind])
        unknown = set(self.params) - set(merged)
        if unknown:
            raise ConfigError(f"{self.kind.value}: unknown hyperparameters {sorted(unknown)}")
        merged.update(self.params)
        self.params = merged
        self._validate()

    def _validate(self):
        p = self.params
        kind = self.kind
        if kind is ClassifierKind.LOGISTIC and p["lam"] <= 0:
            raise ConfigError(f"lam must be positive, got {p['lam']}")
        if kind is ClassifierKind.KNN:
            if p["k"] < 1:
                raise ConfigError(f"k must be >= 1, got {p['k']}")
            if p["kernel"] not in ("euclidean", "precomputed"):
                raise ConfigError(f"k-NN kernel must be euclidean or precomputed, got {p['kernel']}")
        if kind in (ClassifierKind.TREE, ClassifierKind.FOREST):
            if p["max_depth"] is not None and p["max_depth"] < 1:
                raise ConfigError(f"max_depth must be >= 1, got {p['max_depth']}")
        if kind is ClassifierKind.FOREST and p["n_trees"] < 1:
            raise ConfigError(f"n_trees must be >= 1, got {p['n_trees']}")
        if kind in (ClassifierKind.SVM, ClassifierKind.NU_SVM):
            if p["kernel"] not in SVM_KERNELS:
                raise ConfigError(f"SVM kernel must be one of {SVM_KERNELS}, got {p['kernel']}")
            if p["gamma"] <= 0:
                raise ConfigError(f"gamma must be positive, got {p['gamma']}")
        if kind is ClassifierKind.SVM and p["C"] <= 0:
            raise ConfigError(f"C must be positive, got {p['C']}")
        if kind is ClassifierKind.NU_SVM and not 0.0 < p["nu"] <= 1.0:
            raise ConfigError(f"nu must be in (0, 1], got {p['nu']}")
        if kind is ClassifierKind.MLP and (p["hidden"] < 1 or p["epochs"] < 1):
            raise ConfigError("MLP needs hidden >= 1 and epochs >= 1")

    @property
    def precomputed(self) -> bool:
        return self.params.get("kernel") == "precomputed"

    @property
    def display_name(self) -> str:
        return DISPLAY_NAMES[self.kind]

    def hyperparams_json(self) -> str:
        return json.dumps(self.params, sort_keys=True)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data: dict) -> "ClassifierSpec":
        return cls(kind=data["kind"], params=dict(data.get("params", {})))


@dataclass
class FittedClassifier:
    spec: ClassifierSpec
    estimator: Any
    n_features: int
    score_is_margin: bool = False
    scaler: Optional[StandardScaler] = None
    train_diag: Optional[np.ndarray] = None   # k(x, x) of training records, kernel k-NN only

    @property
    def threshold(self) -> float:
        return 0.0 if self.score_is_margin else 0.5


def kernel_distances(rows: np.ndarray, train_diag: np.ndarray) -> np.ndarray:
    """
    Kernel-induced squared distances up to a per-row constant, shifted so
    every row's minimum is zero.
    """
    d = train_diag[None, :] - 2.0 * rows
    return d - d.min(axis=1, keepdims=True)


def check_nu_feasible(nu: float, y: np.ndarray):
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    limit = 2.0 * min(n_pos, n_neg) / len(y)
    if nu > limit:
        raise InfeasibleNuError(
            f"nu={nu} exceeds 2*min(class counts)/n = {limit:.4f} ({n_pos} positive, {n_neg} negative)"
        )


def check_nu_solution(nu: float, margins: np.ndarray, y: np.ndarray, n_support: int, tol: float = NU_TOL):
    """
    Margin errors <= nu <= support vectors, on the training set.

    Below the smallest nu the data admit, the solver returns a zero-margin
    solution whose rescaled coefficients blow up and neither bound holds.
    That case is reported as infeasible so grid search skips it.
    """
    signed = np.where(np.asarray(y) == 1, 1.0, -1.0) * margins
    errors = float(np.mean(signed < 1.0 - MARGIN_SLACK))
    support = n_support / len(y)
    if errors > nu + tol or support < nu - tol:
        raise InfeasibleNuError(
            f"nu={nu} gives a zero-margin solution: {errors:.3f} margin errors, "
            f"{support:.3f} support vectors"
        )


def fit(spec: ClassifierSpec, X: np.ndarray, y: np.ndarray, seed: int = 0) -> FittedClassifier:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=int)
    if len(X) != len(y):
        raise ShapeError(f"{len(X)} rows but {len(y)} labels")
    if len(np.unique(y)) < 2:
        raise DegenerateLabelError(f"{spec.kind.value}: training labels contain a single class")
    if spec.precomputed and X.shape[0] != X.shape[1]:
        raise ShapeError(f"precomputed kernel must be square, got {X.shape}")

    p = spec.params
    kind = spec.kind
    n = len(y)

    if kind is ClassifierKind.LOGISTIC:
        est = LogisticRegression(C=1.0 / (p["lam"] * n), tol=1e-6, max_iter=10000)
        est.fit(X, y)
        return FittedClassifier(spec, est, X.shape[1])

    if kind is ClassifierKind.KNN:
        k = min(p["k"], n)
        if p["kernel"] == "precomputed":
            diag = np.diag(X).copy()
            est = KNeighborsClassifier(n_neighbors=k, metric="precomputed")
            est.fit(kernel_distances(X, diag), y)
            return FittedClassifier(spec, est, X.shape[1], train_diag=diag)
        est = KNeighborsClassifier(n_neighbors=k)
        est.fit(X, y)
        return FittedClassifier(spec, est, X.shape[1])

    if kind is ClassifierKind.TREE:
        est = DecisionTreeClassifier(
            criterion="gini",
            max_depth=p["max_depth"],
            min_samples_leaf=p["min_samples_leaf"],
            random_state=seed,
        )
        est.fit(X, y)
        return FittedClassifier(spec, est, X.shape[1])

    if kind is ClassifierKind.FOREST:
        est = RandomForestClassifier(
            n_estimators=p["n_trees"],
            max_depth=p["max_depth"],
            max_features="sqrt",
            random_state=seed,
            n_jobs=1,
        )
        est.fit(X, y)
        return FittedClassifier(spec, est, X.shape[1])

    if kind is ClassifierKind.SVM:
        est = SVC(C=p["C"], kernel=p["kernel"], gamma=p["gamma"], tol=1e-3, random_state=seed)
        est.fit(X, y)
        return FittedClassifier(spec, est, X.shape[1], score_is_margin=True)

    if kind is ClassifierKind.NU_SVM:
        check_nu_feasible(p["nu"], y)
        est = NuSVC(nu=p["nu"], kernel=p["kernel"], gamma=p["gamma"], tol=1e-3, random_state=seed)
        est.fit(X, y)
        check_nu_solution(p["nu"], est.decision_function(X), y, len(est.support_))
        return FittedClassifier(spec, est, X.shape[1], score_is_margin=True)

    # MLP on the shared network core
    scaler = StandardScaler().fit(X)
    rng = np.random.default_rng(seed)
    net = Network(NetSpec.classifier(X.shape[1], hidden=(p["hidden"],)), rng)
    train_network(net, scaler.transform(X), y[:, None].astype(float), TrainConfig(epochs=p["epochs"], seed=seed), rng)
    return FittedClassifier(spec, net, X.shape[1], scaler=scaler)


def decision_scores(model: FittedClassifier, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_features:
        raise ShapeError(f"model expects {model.n_features} columns, got {X.shape[1]}")
    kind = model.spec.kind
    est = model.estimator
    if kind is ClassifierKind.MLP:
        return est.predict(model.scaler.transform(X))[:, 0]
    if kind in (ClassifierKind.SVM, ClassifierKind.NU_SVM):
        return est.decision_function(X)
    if kind is ClassifierKind.FOREST:
        return np.mean([tree.predict(X) for tree in est.estimators_], axis=0)
    if model.train_diag is not None:
        X = kernel_distances(X, model.train_diag)
    return est.predict_proba(X)[:, 1]


def predict(model: FittedClassifier, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(labels, scores); label 1 when the score reaches the threshold."""
    scores = decision_scores(model, X)
    if model.score_is_margin:
        labels = (scores > model.threshold).astype(int)
    else:
        labels = (scores >= model.threshold).astype(int)
    return labels, scores
