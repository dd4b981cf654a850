"""
metrics.py — Accuracy, specificity, sensitivity and AUC

AUC is the Mann-Whitney U statistic of the positive scores against the
negative scores divided by n_pos * n_neg (ties count one half).
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import mannwhitneyu
from sklearn.metrics import confusion_matrix

from mts.errors import AucUndefinedError, ConfigError, ShapeError

logger = logging.getLogger(__name__)

METRIC_NAMES = ["accuracy", "specificity", "sensitivity", "auc"]


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    specificity: float
    sensitivity: float
    auc: float

    def __post_init__(self):
        for name in METRIC_NAMES:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def mean(cls, items: list["Metrics"]) -> "Metrics":
        return cls(**{name: float(np.mean([getattr(m, name) for m in items])) for name in METRIC_NAMES})


def auc_score(y_true: np.ndarray, scores: np.ndarray) -> float:
    y_true = np.asarray(y_true, dtype=int)
    scores = np.asarray(scores, dtype=float)
    pos = scores[y_true == 1]
    neg = scores[y_true == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise AucUndefinedError("AUC needs at least one positive and one negative example")
    u = mannwhitneyu(pos, neg, alternative="two-sided", method="asymptotic").statistic
    return float(u) / (len(pos) * len(neg))


def compute_metrics(y_true, labels, scores) -> Metrics:
    y_true = np.asarray(y_true, dtype=int)
    labels = np.asarray(labels, dtype=int)
    scores = np.asarray(scores, dtype=float)
    if not len(y_true) == len(labels) == len(scores):
        raise ShapeError(f"length mismatch: {len(y_true)} labels, {len(labels)} predictions, {len(scores)} scores")

    auc = auc_score(y_true, scores)
    tn, fp, fn, tp = confusion_matrix(y_true, labels, labels=[0, 1]).ravel()
    return Metrics(
        accuracy=float(tp + tn) / len(y_true),
        specificity=float(tn) / (tn + fp),
        sensitivity=float(tp) / (tp + fn),
        auc=auc,
    )
