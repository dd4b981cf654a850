"""
report.py — Results table: one row per (representation, classifier)

Rows are grouped by representation (PCA, KPCA, AE) and listed in a fixed
classifier order. Metrics are shown as percentages with two decimals and
the best value of every column is bold (all of them on a tie).

Usage:
    report = build_report(rows)
    report.to_csv("report/results.csv")
    Path("report/results.md").write_text(report.to_markdown())
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import pandas as pd

from classifiers.metrics import METRIC_NAMES, Metrics
from classifiers.models import CLASSIFIER_ORDER, DISPLAY_NAMES, ClassifierKind
from mts.errors import ConfigError

logger = logging.getLogger(__name__)

DR_ORDER = ["PCA", "KPCA", "AE"]
CSV_COLUMNS = ["dr_method", "classifier"] + METRIC_NAMES + ["hyperparams_json", "seed"]
METRIC_HEADERS = {
    "accuracy": "Accuracy",
    "specificity": "Specificity",
    "sensitivity": "Sensitivity",
    "auc": "AUC",
}


@dataclass
class ReportRow:
    dr_method: str
    classifier: ClassifierKind
    metrics: Metrics
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        self.classifier = ClassifierKind(self.classifier)

    def to_dict(self) -> dict:
        return {
            "dr_method": self.dr_method,
            "classifier": self.classifier.value,
            **self.metrics.to_dict(),
            "hyperparams_json": json.dumps(self.hyperparams, sort_keys=True),
            "seed": self.seed,
        }


def _percent(value: float) -> float:
    return round(100.0 * value, 2)


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)

    def column_maxima(self) -> dict:
        """Best rounded percentage per metric column."""
        return {
            name: max(_percent(getattr(r.metrics, name)) for r in self.rows)
            for name in METRIC_NAMES
        } if self.rows else {}

    # ── Export ───────────────────────────────────────────────

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_dict() for r in self.rows], columns=CSV_COLUMNS)

    def to_csv(self, path: str):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    @classmethod
    def from_csv(cls, path: str) -> "EvalReport":
        df = pd.read_csv(
            path,
            dtype={"dr_method": str, "classifier": str, "hyperparams_json": str},
            float_precision="round_trip",
        )
        rows = [
            ReportRow(
                dr_method=rec["dr_method"],
                classifier=rec["classifier"],
                metrics=Metrics(**{name: float(rec[name]) for name in METRIC_NAMES}),
                hyperparams=json.loads(rec["hyperparams_json"]),
                seed=int(rec["seed"]),
            )
            for rec in df.to_dict(orient="records")
        ]
        return cls(rows=rows)

    # ── Display ──────────────────────────────────────────────

    def _cells(self, row: ReportRow, maxima: dict, bold: bool) -> list[str]:
        cells = []
        for name in METRIC_NAMES:
            value = _percent(getattr(row.metrics, name))
            text = f"{value:.2f}"
            if bold and value == maxima[name]:
                text = f"**{text}**"
            cells.append(text)
        return cells

    def to_markdown(self) -> str:
        """Render the report as a markdown table."""
        lines = [
            "| DR | Classifier | " + " | ".join(METRIC_HEADERS[m] for m in METRIC_NAMES) + " |",
            "|----|------------|" + "|".join("-" * (len(METRIC_HEADERS[m]) + 2) for m in METRIC_NAMES) + "|",
        ]
        maxima = self.column_maxima()
        previous = None
        for row in self.rows:
            dr = row.dr_method if row.dr_method != previous else ""
            previous = row.dr_method
            cells = self._cells(row, maxima, bold=True)
            lines.append(f"| {dr} | {DISPLAY_NAMES[row.classifier]} | " + " | ".join(cells) + " |")
        return "\n".join(lines)

    def to_text(self) -> str:
        """Aligned plain-text table; column maxima are marked with '*'."""
        header = ["DR", "Classifier"] + [METRIC_HEADERS[m] for m in METRIC_NAMES]
        maxima = self.column_maxima()
        body = []
        for row in self.rows:
            cells = []
            for name in METRIC_NAMES:
                value = _percent(getattr(row.metrics, name))
                cells.append(f"{value:.2f}" + ("*" if value == maxima[name] else ""))
            body.append([row.dr_method, DISPLAY_NAMES[row.classifier]] + cells)
        widths = [max(len(str(r[i])) for r in [header] + body) for i in range(len(header))]
        lines = ["  ".join(str(c).ljust(w) for c, w in zip(header, widths))]
        lines.append("  ".join("-" * w for w in widths))
        for r in body:
            lines.append("  ".join(str(c).ljust(w) for c, w in zip(r, widths)))
        return "\n".join(lines)


def build_report(entries: Sequence[ReportRow]) -> EvalReport:
    """Order rows by representation then classifier; one row per pair."""
    seen = set()
    extra_dr = []
    for row in entries:
        key = (row.dr_method, row.classifier)
        if key in seen:
            raise ConfigError(f"duplicate report row for {row.dr_method} / {row.classifier.value}")
        seen.add(key)
        if row.dr_method not in DR_ORDER and row.dr_method not in extra_dr:
            extra_dr.append(row.dr_method)

    dr_rank = {name: i for i, name in enumerate(DR_ORDER + extra_dr)}
    clf_rank = {kind: i for i, kind in enumerate(CLASSIFIER_ORDER)}
    rows = sorted(entries, key=lambda r: (dr_rank[r.dr_method], clf_rank[r.classifier]))
    logger.info(f"Report: {len(rows)} rows over {len(dr_rank)} representations")
    return EvalReport(rows=list(rows))
