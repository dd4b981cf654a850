"""Tests for classifiers/report.py — the results table."""

import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from classifiers.metrics import Metrics
from classifiers.models import CLASSIFIER_ORDER, ClassifierKind
from classifiers.report import CSV_COLUMNS, DR_ORDER, EvalReport, ReportRow, build_report
from mts.errors import ConfigError


@pytest.fixture
def tmp_dir():
    with tempfile.TemporaryDirectory() as d:
        yield d


def full_rows():
    rows = []
    for d, dr in enumerate(reversed(DR_ORDER)):
        for c, kind in enumerate(reversed(CLASSIFIER_ORDER)):
            value = 0.5 + 0.01 * (3 * c + d)
            rows.append(ReportRow(dr, kind, Metrics(value, value, value, value), {"i": c}, seed=7))
    return rows


# ── Build ───────────────────────────────────────────────────


class TestBuildReport:
    def test_ordering(self):
        report = build_report(full_rows())
        assert len(report.rows) == 21
        assert [r.dr_method for r in report.rows[::7]] == DR_ORDER
        assert [r.classifier for r in report.rows[:7]] == CLASSIFIER_ORDER

    def test_duplicate_pair(self):
        rows = full_rows()
        with pytest.raises(ConfigError):
            build_report(rows + [rows[0]])

    def test_single_row(self):
        row = ReportRow("KPCA", ClassifierKind.SVM, Metrics(0.9, 0.8, 1.0, 0.95))
        md = build_report([row]).to_markdown()
        assert len(md.splitlines()) == 3
        assert "**90.00**" in md


# ── Rendering ───────────────────────────────────────────────


class TestRendering:
    def test_bold_marks_column_maxima(self):
        report = build_report(full_rows())
        md = report.to_markdown()
        body = md.splitlines()[2:]
        for col in range(4):
            cells = [line.split("|")[3 + col].strip() for line in body]
            bold = [c for c in cells if c.startswith("**")]
            values = [float(c.strip("*")) for c in cells]
            assert len(bold) == values.count(max(values))

    def test_ties_are_all_bold(self):
        m = Metrics(0.8, 0.8, 0.8, 0.8)
        rows = [ReportRow("PCA", ClassifierKind.LOGISTIC, m), ReportRow("PCA", ClassifierKind.KNN, m)]
        assert build_report(rows).to_markdown().count("**80.00**") == 8

    def test_dr_name_only_on_first_row(self):
        md = build_report(full_rows()).to_markdown()
        first_cells = [line.split("|")[1].strip() for line in md.splitlines()[2:]]
        assert [c for c in first_cells if c] == DR_ORDER

    def test_text_table_aligned(self):
        text = build_report(full_rows()).to_text()
        lines = text.splitlines()
        assert len(lines) == 23
        offset = len(lines[1].split("  ")[0]) + 2
        assert lines[0].index("Classifier") == offset
        assert all(line[offset - 2:offset] == "  " for line in lines[2:])
        assert text.count("*") == 4


# ── CSV ─────────────────────────────────────────────────────


class TestReportCsv:
    def test_roundtrip(self, tmp_dir):
        report = build_report(full_rows())
        path = Path(tmp_dir) / "results.csv"
        report.to_csv(path)
        assert pd.read_csv(path).columns.tolist() == CSV_COLUMNS
        again = EvalReport.from_csv(path)
        assert [r.to_dict() for r in again.rows] == [r.to_dict() for r in report.rows]

    def test_metrics_reload_exactly(self, tmp_dir):
        rng = np.random.default_rng(8)
        rows = [
            ReportRow("AE", kind, Metrics(*rng.random(4)), {}, seed=1)
            for kind in CLASSIFIER_ORDER
        ]
        path = Path(tmp_dir) / "results.csv"
        EvalReport(rows=rows).to_csv(path)
        again = EvalReport.from_csv(path)
        assert [r.metrics for r in again.rows] == [r.metrics for r in rows]

    def test_classifier_stored_by_kind(self, tmp_dir):
        path = Path(tmp_dir) / "results.csv"
        build_report(full_rows()).to_csv(path)
        frame = pd.read_csv(path)
        assert set(frame["classifier"]) == {k.value for k in ClassifierKind}
