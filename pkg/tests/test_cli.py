"""Tests for pipeline/cli.py — the stages end to end on a small synthetic cohort."""

import json
import shutil
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from pipeline.cli import LOG_FILE, main

STAGES = ["synth", "ingest", "tck", "embed", "classify", "report"]

SMALL_CONFIG = {
    "seed": 5,
    "tck": {"C": 4, "R": 2},
    "dimred": {"kpca_k": 10},
    "autoencoder": {
        "hidden": [16], "code": 4, "epochs": 30,
        "architectures": [{"hidden": [16], "code": 4}, {"hidden": [], "code": 4}],
    },
    "tsne": {"perplexity": 5, "n_iter": 250},
    "classify": {
        "folds": 3,
        "grids": {
            "logistic-regression": [{"lam": 0.1}],
            "k-nn": [{"k": 3}],
            "decision-tree": [{"max_depth": 3}],
            "random-forest": [{"n_trees": 10}],
            "svm": [{"C": 1.0, "kernel": "precomputed"}],
            "nu-svm": [{"nu": 0.5}],
            "mlp": [{"hidden": 8, "epochs": 30}],
        },
    },
    "synth": {"preset": "two-moons-mts", "n_per_cluster": 30, "missing_rate": 0.0},
}


def run_all(out: Path, config: Path) -> list:
    return [main([stage, "--out", str(out), "--config", str(config), "--log-level", "WARNING"]) for stage in STAGES]


def same_npz(a: Path, b: Path) -> bool:
    with np.load(a, allow_pickle=False) as x, np.load(b, allow_pickle=False) as y:
        if sorted(x.files) != sorted(y.files):
            return False
        return all(np.array_equal(x[k], y[k]) for k in x.files)


@pytest.fixture(scope="module")
def workspace():
    with tempfile.TemporaryDirectory() as d:
        root = Path(d)
        config = root / "config.json"
        config.write_text(json.dumps(SMALL_CONFIG), encoding="utf-8")
        codes = run_all(root / "run", config)
        yield root, config, codes


@pytest.fixture
def tmp_dir():
    with tempfile.TemporaryDirectory() as d:
        yield d


# ── Full run ────────────────────────────────────────────────


class TestFullRun:
    def test_every_stage_succeeds(self, workspace):
        _, _, codes = workspace
        assert codes == [0] * len(STAGES)

    def test_outputs_written(self, workspace):
        root, _, _ = workspace
        run = root / "run"
        expected = [
            "data/stays.csv", "data/ground_truth.csv", "data/train.npz", "data/test.npz", "data/split.csv",
            "tck/model.npz", "tck/kernel.csv", "tck/test_rows.csv",
            "embed/reconstruction.json", "embed/selection.json",
            "classify/results.csv", "classify/cv_folds.csv",
            "report/results.csv", "report/results.md", "report/results.txt",
            LOG_FILE,
        ]
        for method in ("pca", "kpca", "ae"):
            expected += [f"embed/{method}/{name}" for name in ("train.csv", "test.csv", "model.json", "embedding.csv")]
        expected.append("embed/ae/loss.csv")
        missing = [name for name in expected if not (run / name).exists()]
        assert missing == []

    def test_report_table(self, workspace):
        root, _, _ = workspace
        frame = pd.read_csv(root / "run" / "report" / "results.csv")
        assert len(frame) == 21
        assert frame["dr_method"].drop_duplicates().tolist() == ["PCA", "KPCA", "AE"]
        assert frame["auc"].max() >= 0.9

    def test_kernel_rows_name_their_source(self, workspace):
        root, _, _ = workspace
        frame = pd.read_csv(root / "run" / "report" / "results.csv")
        params = {
            (row.dr_method, row.classifier): json.loads(row.hyperparams_json)
            for row in frame.itertuples()
        }
        for dr in ("PCA", "KPCA", "AE"):
            assert params[(dr, "svm")]["kernel_source"] == "tck"
            assert "kernel_source" not in params[(dr, "nu-svm")]

    def test_reconstruction_errors(self, workspace):
        root, _, _ = workspace
        with open(root / "run" / "embed" / "reconstruction.json", "r", encoding="utf-8") as f:
            errors = json.load(f)
        assert set(errors) == {"pca", "kpca", "ae"}
        assert errors["kpca"]["space"] == "tck-feature"
        assert all(errors[m]["test_mse"] >= 0.0 for m in errors)

    def test_settings_chosen_on_validation_split(self, workspace):
        root, _, _ = workspace
        with open(root / "run" / "embed" / "selection.json", "r", encoding="utf-8") as f:
            selection = json.load(f)
        assert set(selection) == {"pca", "kpca", "ae"}
        for record in selection.values():
            scored = [c for c in record["candidates"] if c["error"] is None]
            best = min(c["validation_mse"] for c in scored)
            assert record["chosen"] == next(c["params"] for c in scored if c["validation_mse"] == best)
            assert record["n_fit"] > record["n_validation"] > 0
        assert len(selection["ae"]["candidates"]) == 2
        assert [c["params"]["k"] for c in selection["kpca"]["candidates"]] == [10, 25, 50]
        kpca = pd.read_csv(root / "run" / "embed" / "kpca" / "train.csv")
        assert kpca.shape[1] - 1 <= selection["kpca"]["chosen"]["k"]

    def test_rerun_is_reproducible(self, workspace):
        root, config, _ = workspace
        assert run_all(root / "rerun", config) == [0] * len(STAGES)
        first, second = root / "run", root / "rerun"
        files = sorted(p.relative_to(second) for p in second.rglob("*") if p.is_file())
        assert len(files) >= 28
        for rel in files:
            if rel.name == LOG_FILE:
                continue
            if rel.suffix == ".npz":
                assert same_npz(first / rel, second / rel), rel
            else:
                assert (first / rel).read_bytes() == (second / rel).read_bytes(), rel

    def test_report_prints_table(self, workspace, capsys):
        root, config, _ = workspace
        assert main(["report", "--out", str(root / "run"), "--config", str(config)]) == 0
        out = capsys.readouterr().out
        assert "KPCA" in out
        assert "Classifier" in out


# ── Cluster summary ─────────────────────────────────────────


class TestSelection:
    def test_id_list_selection(self, workspace, tmp_dir):
        root, config, _ = workspace
        run = root / "run"
        ids = pd.read_csv(run / "embed" / "kpca" / "embedding.csv", dtype={"id": str})["id"].tolist()
        selection = Path(tmp_dir) / "cluster.txt"
        selection.write_text("\n".join(ids[:10]) + "\n", encoding="utf-8")
        code = main([
            "report", "--out", str(run), "--config", str(config),
            "--selection", str(selection), "--method", "kpca",
        ])
        assert code == 0
        assert (run / "report" / "cluster_summary_kpca.csv").exists()
        assert (run / "report" / "cluster_summary_kpca.md").exists()

    def test_empty_selection_fails(self, workspace, tmp_dir):
        root, config, _ = workspace
        selection = Path(tmp_dir) / "cluster.txt"
        selection.write_text("# nothing selected\n", encoding="utf-8")
        code = main([
            "report", "--out", str(root / "run"), "--config", str(config),
            "--selection", str(selection), "--method", "pca",
        ])
        assert code == 1


# ── Failures ────────────────────────────────────────────────


class TestFailures:
    def test_bad_synthetic_spec(self, tmp_dir):
        spec = Path(tmp_dir) / "spec.json"
        spec.write_text(json.dumps({"preset": "three-moons"}), encoding="utf-8")
        assert main(["synth", "--out", str(Path(tmp_dir) / "run"), "--spec", str(spec)]) == 1

    def test_report_without_run_dir(self, tmp_dir):
        assert main(["report", "--out", str(Path(tmp_dir) / "nowhere")]) == 1

    def test_ingest_without_cohort(self, tmp_dir):
        assert main(["ingest", "--out", str(Path(tmp_dir) / "run")]) == 1

    def test_bad_config(self, tmp_dir):
        config = Path(tmp_dir) / "config.json"
        config.write_text(json.dumps({"tck": {"components": 3}}), encoding="utf-8")
        assert main(["synth", "--out", str(Path(tmp_dir) / "run"), "--config", str(config)]) == 1

    def test_too_few_records_for_components(self, workspace, tmp_dir):
        root, _, _ = workspace
        run = Path(tmp_dir) / "run"
        shutil.copytree(root / "run" / "data", run / "data")
        config = Path(tmp_dir) / "config.json"
        config.write_text(json.dumps({"tck": {"C": 500, "R": 2}}), encoding="utf-8")
        assert main(["tck", "--out", str(run), "--config", str(config)]) == 1
        assert not (run / "tck" / "model.npz").exists()

    def test_unknown_embedding_method(self, workspace, tmp_dir):
        root, config, _ = workspace
        run = Path(tmp_dir) / "run"
        shutil.copytree(root / "run" / "data", run / "data")
        shutil.copytree(root / "run" / "tck", run / "tck")
        assert main(["embed", "--out", str(run), "--config", str(config), "--method", "umap"]) == 1
