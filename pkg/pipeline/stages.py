"""
stages.py — Pipeline stages over a run directory

Each stage reads what earlier stages wrote and writes plain files:

    <out>/data/stays.csv, ground_truth.csv        synth
    <out>/data/train.npz, test.npz, split.csv     ingest
    <out>/tck/model.npz, kernel.csv, test_rows.csv
    <out>/embed/<method>/train.csv, test.csv, model.json, embedding.csv
    <out>/embed/reconstruction.json, selection.json
    <out>/classify/results.csv, cv_folds.csv
    <out>/report/results.csv, results.md, results.txt [, cluster_summary.*]

All floats go through `%.17g` and JSON is written with sorted keys, so a
rerun with the same config and seed reproduces every CSV, JSON and text
file byte for byte. The .npz archives carry zip timestamps; their arrays
match but the bytes do not.
"""

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from classifiers.metrics import METRIC_NAMES, compute_metrics
from classifiers.models import ClassifierKind, fit, predict
from classifiers.report import EvalReport, ReportRow, build_report
from classifiers.selection import cross_validate, default_grid
from embedding.summary import cluster_summary, load_selection
from embedding.tsne import Embedding2D, tsne
from mts.dataset import MissingPolicy, MtsDataset, apply_missing_policy
from mts.errors import ConfigError
from mts.ingest import load_raw_csv, read_schema, window_align
from mts.splits import balance_train, split_train_test
from mts.synth import STAYS_FILE, SynthSpec, generate, write_synthetic
from pipeline.config import DR_LABELS, DR_METHODS, PipelineConfig, derive_seed
from reduction.autoencoder import ae_encode, ae_train
from reduction.autoencoder import reconstruction_mse as ae_reconstruction_mse
from reduction.kpca import kpca_fit, kpca_transform
from reduction.kpca import reconstruction_mse as kpca_reconstruction_mse
from reduction.network import NetSpec, TrainConfig
from reduction.pca import pca_fit, pca_transform
from reduction.pca import reconstruction_mse as pca_reconstruction_mse
from reduction.tuning import Choice, tune_autoencoder, tune_kpca, tune_pca, validation_split
from tck.ensemble import TckKernel, build_tck, kernel_rows, self_similarity_of

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


@dataclass
class RunPaths:
    root: Path

    def __post_init__(self):
        self.root = Path(self.root)

    @property
    def data(self) -> Path:
        return self.root / "data"

    @property
    def tck(self) -> Path:
        return self.root / "tck"

    @property
    def classify(self) -> Path:
        return self.root / "classify"

    @property
    def report(self) -> Path:
        return self.root / "report"

    def embed(self, method: Optional[str] = None) -> Path:
        return self.root / "embed" / method if method else self.root / "embed"

    def require(self, path: Path) -> Path:
        if not path.exists():
            raise FileNotFoundError(f"{path} (run the earlier stage first)")
        return path


def _write_json(path: Path, data: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def _write_matrix(path: Path, ids: Sequence[str], matrix: np.ndarray, columns: Sequence[str]):
    df = pd.DataFrame(matrix, columns=list(columns))
    df.insert(0, "id", list(ids))
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def _read_matrix(path: Path) -> tuple[list, np.ndarray]:
    df = pd.read_csv(path, dtype={"id": str}, keep_default_na=False, float_precision="round_trip")
    return df["id"].tolist(), df.drop(columns="id").to_numpy(dtype=float)


def _load_split(paths: RunPaths, cfg: PipelineConfig) -> tuple[MtsDataset, MtsDataset]:
    train = MtsDataset.load(paths.require(paths.data / "train.npz"))
    test = MtsDataset.load(paths.require(paths.data / "test.npz"))
    policy = MissingPolicy(cfg.data.missing_policy)
    return apply_missing_policy(train, policy), apply_missing_policy(test, policy)


# ── synth ────────────────────────────────────────────────────


def run_synth(cfg: PipelineConfig, out: str, spec_path: Optional[str] = None):
    paths = RunPaths(out)
    spec = SynthSpec.load(spec_path) if spec_path else SynthSpec.from_dict(cfg.synth)
    ds, truth = generate(spec)
    stays, truth_path = write_synthetic(ds, truth, str(paths.data))
    logger.info(f"synth: wrote {ds.n} records to {stays} and {truth_path}")
    return ds, truth


# ── ingest ───────────────────────────────────────────────────


def run_ingest(cfg: PipelineConfig, out: str, input_path: Optional[str] = None):
    paths = RunPaths(out)
    source = input_path or cfg.data.input or str(paths.data / STAYS_FILE)
    if not Path(source).exists():
        raise FileNotFoundError(source)

    schema = read_schema(source)
    stays = load_raw_csv(source, schema)
    ds = window_align(stays, cfg.data.window_len, attribute_names=schema)

    seed = derive_seed(cfg.seed, "split")
    train, test = split_train_test(ds, cfg.data.train_frac, seed)
    if cfg.data.balance:
        train, test = balance_train(train, test, derive_seed(cfg.seed, "balance"))

    paths.data.mkdir(parents=True, exist_ok=True)
    train.save(paths.data / "train.npz")
    test.save(paths.data / "test.npz")
    split = pd.DataFrame({
        "id": train.ids + test.ids,
        "label": np.concatenate([train.labels, test.labels]),
        "set": ["train"] * train.n + ["test"] * test.n,
    })
    split.to_csv(paths.data / "split.csv", index=False)
    logger.info(f"ingest: {train.n} train / {test.n} test records from {source}")
    return train, test


# ── tck ──────────────────────────────────────────────────────


def run_tck(cfg: PipelineConfig, out: str) -> TckKernel:
    paths = RunPaths(out)
    train, test = _load_split(paths, cfg)
    settings = cfg.tck
    kernel = build_tck(
        train,
        C=settings.C,
        R=settings.R,
        master_seed=derive_seed(cfg.seed, "tck"),
        em=settings.em,
        subsets=settings.subsets,
        normalize=settings.normalize,
        drop_failed=settings.drop_failed,
    )
    kernel.save(paths.tck / "model.npz")
    kernel.to_csv(paths.tck / "kernel.csv")
    _write_matrix(paths.tck / "test_rows.csv", test.ids, kernel_rows(kernel, test), kernel.train_ids)
    if kernel.failed:
        logger.warning(f"tck: {len(kernel.failed)} partitions dropped: {kernel.failed}")
    logger.info(f"tck: {kernel.n_partitions} partitions, kernel {kernel.n}x{kernel.n}")
    return kernel


# ── embed ────────────────────────────────────────────────────


def _train_config(cfg: PipelineConfig) -> TrainConfig:
    ae = cfg.autoencoder
    return TrainConfig(
        epochs=ae.epochs,
        batch_size=ae.batch_size,
        step=ae.step,
        decay=ae.decay,
        seed=derive_seed(cfg.seed, "embed/ae"),
    )


def _pca_inputs(cfg: PipelineConfig, K, rows, train, test):
    if cfg.dimred.pca_space == "raw":
        return train.flattened(), test.flattened()
    return K, rows


def _tune(cfg: PipelineConfig, method: str, K, train) -> Choice:
    """Validation-split choice of the method's settings, on training records only."""
    dr = cfg.dimred
    fit, val = validation_split(train.labels, dr.validation_frac, derive_seed(cfg.seed, "dimred/validation"))
    inner, cross = np.ix_(fit, fit), np.ix_(val, fit)
    tol = dr.selection_tolerance
    if method == "pca":
        if dr.pca_space == "raw":
            X = train.flattened()
            return tune_pca(X[fit], X[val], dr.variance_grid(), tol)
        return tune_pca(K[inner], K[cross], dr.variance_grid(), tol)
    if method == "kpca":
        if dr.kpca_kernel == "precomputed":
            return tune_kpca(K[inner], K[cross], dr.k_grid(), self_similarity=np.diag(K)[val], tolerance=tol)
        return tune_kpca(
            K[inner], K[cross], dr.k_grid(), kernel="polynomial",
            gammas=dr.gamma_grid(), degree=dr.kpca_degree, coef0=dr.kpca_coef0, tolerance=tol,
        )
    return tune_autoencoder(K[inner], K[cross], cfg.autoencoder.architecture_grid(), _train_config(cfg), tol)


def _representation(cfg: PipelineConfig, method: str, K, rows, train, test, test_self=None, chosen=None):
    """Train/test scores, a serializable model, and reconstruction errors."""
    dr = cfg.dimred
    chosen = chosen or {}
    if method == "pca":
        X_train, X_test = _pca_inputs(cfg, K, rows, train, test)
        model = pca_fit(X_train, variance=chosen.get("variance", dr.pca_variance))
        errors = {
            "train_mse": pca_reconstruction_mse(model, X_train),
            "test_mse": pca_reconstruction_mse(model, X_test),
            "space": dr.pca_space,
        }
        return pca_transform(model, X_train), pca_transform(model, X_test), model.to_dict(), errors

    if method == "kpca":
        k = min(chosen.get("k", dr.kpca_k), len(K) - 1)
        if dr.kpca_kernel == "precomputed":
            model = kpca_fit(K=K, k=k)
            errors = {
                "train_mse": kpca_reconstruction_mse(model, K, np.diag(K)),
                "test_mse": kpca_reconstruction_mse(model, rows, test_self),
                "space": "tck-feature",
            }
        else:
            model = kpca_fit(
                X=K, kernel="polynomial", k=k,
                gamma=chosen.get("gamma", dr.kpca_gamma), degree=dr.kpca_degree, coef0=dr.kpca_coef0,
            )
            errors = {
                "train_mse": kpca_reconstruction_mse(model, K),
                "test_mse": kpca_reconstruction_mse(model, rows),
                "space": "polynomial-feature",
            }
        return kpca_transform(model, K), kpca_transform(model, rows), model.to_dict(), errors

    ae = cfg.autoencoder
    spec = NetSpec.autoencoder(
        K.shape[1], hidden=chosen.get("hidden", ae.hidden), code=chosen.get("code", ae.code)
    )
    model = ae_train(K, spec, _train_config(cfg))
    errors = {
        "train_mse": ae_reconstruction_mse(model, K),
        "test_mse": ae_reconstruction_mse(model, rows),
        "space": "tck-minmax",
    }
    return ae_encode(model, K), ae_encode(model, rows), model, errors


def _load_merged(path: Path) -> dict:
    if not path.exists():
        return {}
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def run_embed(cfg: PipelineConfig, out: str, methods: Optional[Sequence[str]] = None):
    paths = RunPaths(out)
    methods = list(methods or cfg.dimred.methods)
    for method in methods:
        if method not in DR_METHODS:
            raise ConfigError(f"unknown embedding method '{method}', expected one of {DR_METHODS}")

    train, test = _load_split(paths, cfg)
    kernel = TckKernel.load(paths.require(paths.tck / "model.npz"))
    test_ids, rows = _read_matrix(paths.require(paths.tck / "test_rows.csv"))
    if test_ids != test.ids:
        raise ConfigError("tck/test_rows.csv does not match data/test.npz; rerun the tck stage")
    K = kernel.K
    test_self = None
    if "kpca" in methods and cfg.dimred.kpca_kernel == "precomputed":
        test_self = self_similarity_of(kernel, test)

    recon_path = paths.embed() / "reconstruction.json"
    select_path = paths.embed() / "selection.json"
    reconstruction = _load_merged(recon_path)
    selection = _load_merged(select_path)

    for method in methods:
        chosen = None
        if cfg.dimred.tune:
            choice = _tune(cfg, method, K, train)
            selection[method] = choice.to_dict()
            chosen = choice.chosen
        Z_train, Z_test, model, errors = _representation(cfg, method, K, rows, train, test, test_self, chosen)
        folder = paths.embed(method)
        columns = [f"c{j}" for j in range(Z_train.shape[1])]
        _write_matrix(folder / "train.csv", train.ids, Z_train, columns)
        _write_matrix(folder / "test.csv", test.ids, Z_test, columns)
        if method == "ae":
            model.save(folder / "model.json")
            model.loss_csv(folder / "loss.csv")
        else:
            _write_json(folder / "model.json", model)
        reconstruction[method] = errors

        label = DR_LABELS[method]
        tsne_cfg = replace(cfg.tsne, seed=derive_seed(cfg.seed, f"tsne/{method}"))
        emb = tsne(
            np.vstack([Z_train, Z_test]),
            tsne_cfg,
            ids=train.ids + test.ids,
            labels=np.concatenate([train.labels, test.labels]),
            method=label,
        )
        emb.to_csv(folder / "embedding.csv")
        logger.info(f"embed: {label} gives {Z_train.shape[1]} components")

    _write_json(recon_path, reconstruction)
    if selection:
        _write_json(select_path, selection)


# ── classify ─────────────────────────────────────────────────


def run_classify(cfg: PipelineConfig, out: str):
    paths = RunPaths(out)
    train, test = _load_split(paths, cfg)
    kernel = TckKernel.load(paths.require(paths.tck / "model.npz"))
    _, rows = _read_matrix(paths.require(paths.tck / "test_rows.csv"))
    y_train, y_test = train.labels, test.labels

    result_rows = []
    fold_rows = []
    for method in cfg.dimred.methods:
        folder = paths.embed(method)
        _, Z_train = _read_matrix(paths.require(folder / "train.csv"))
        _, Z_test = _read_matrix(paths.require(folder / "test.csv"))
        label = DR_LABELS[method]

        for name in cfg.classify.classifiers:
            kind = ClassifierKind(name)
            seed = derive_seed(cfg.seed, f"classify/{method}/{kind.value}")
            grid = cfg.classify.grid_for(kind) or default_grid(kind)
            cv = cross_validate(grid, Z_train, y_train, cfg.classify.folds, seed, kernel=kernel.K)

            best = cv.best
            if best.precomputed:
                model = fit(best, kernel.K, y_train, seed)
                labels, scores = predict(model, rows)
            else:
                model = fit(best, Z_train, y_train, seed)
                labels, scores = predict(model, Z_test)
            metrics = compute_metrics(y_test, labels, scores)
            params = dict(best.params)
            if best.precomputed:
                # precomputed points train on the TCK matrix, not on the reduced scores
                params["kernel_source"] = "tck"
            result_rows.append(ReportRow(label, kind, metrics, params, seed))

            for grid_result in cv.grid:
                for fold, m in enumerate(grid_result.fold_metrics):
                    fold_rows.append({
                        "dr_method": label,
                        "classifier": kind.value,
                        "hyperparams_json": grid_result.spec.hyperparams_json(),
                        "fold": fold,
                        **m.to_dict(),
                    })
            logger.info(f"classify: {label} + {kind.value} test AUC {metrics.auc:.4f}")

    report = EvalReport(rows=result_rows)
    report.to_csv(paths.classify / "results.csv")
    folds = pd.DataFrame(
        fold_rows, columns=["dr_method", "classifier", "hyperparams_json", "fold"] + METRIC_NAMES
    )
    folds.to_csv(paths.classify / "cv_folds.csv", index=False, float_format=FLOAT_FORMAT)
    return report


# ── report ───────────────────────────────────────────────────


def run_report(
    cfg: PipelineConfig,
    out: str,
    selection: Optional[str] = None,
    method: Optional[str] = None,
) -> EvalReport:
    paths = RunPaths(out)
    if not paths.root.is_dir():
        raise FileNotFoundError(f"run directory {paths.root} does not exist")
    raw = EvalReport.from_csv(paths.require(paths.classify / "results.csv"))
    report = build_report(raw.rows)

    paths.report.mkdir(parents=True, exist_ok=True)
    report.to_csv(paths.report / "results.csv")
    (paths.report / "results.md").write_text(report.to_markdown() + "\n", encoding="utf-8")
    (paths.report / "results.txt").write_text(report.to_text() + "\n", encoding="utf-8")

    if selection is not None:
        method = method or cfg.dimred.methods[0]
        if method not in DR_METHODS:
            raise ConfigError(f"unknown embedding method '{method}'")
        emb = Embedding2D.from_csv(paths.require(paths.embed(method) / "embedding.csv"))
        train = MtsDataset.load(paths.require(paths.data / "train.npz"))
        test = MtsDataset.load(paths.require(paths.data / "test.npz"))
        cohort = train.with_records(list(train.records) + list(test.records))
        summary = cluster_summary(emb, cohort, load_selection(selection, emb))
        summary.to_csv(paths.report / f"cluster_summary_{method}.csv")
        (paths.report / f"cluster_summary_{method}.md").write_text(summary.to_markdown() + "\n", encoding="utf-8")

    logger.info(f"report: {len(report.rows)} rows written to {paths.report}")
    return report
