from classifiers.models import (
    ClassifierKind,
    ClassifierSpec,
    FittedClassifier,
    CLASSIFIER_ORDER,
    fit,
    predict,
)
from classifiers.metrics import Metrics, compute_metrics, auc_score
from classifiers.selection import CvResult, GridResult, cross_validate, default_grid, stratified_folds
from classifiers.report import ReportRow, EvalReport, build_report

__all__ = [
    "ClassifierKind",
    "ClassifierSpec",
    "FittedClassifier",
    "CLASSIFIER_ORDER",
    "fit",
    "predict",
    "Metrics",
    "compute_metrics",
    "auc_score",
    "CvResult",
    "GridResult",
    "cross_validate",
    "default_grid",
    "stratified_folds",
    "ReportRow",
    "EvalReport",
    "build_report",
]
