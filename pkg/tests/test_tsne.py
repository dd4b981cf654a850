"""Tests for embedding/tsne.py — affinities, optimization, embedding files."""

import itertools
import tempfile
from pathlib import Path

import numpy as np
import pytest
from scipy.spatial.distance import pdist, squareform
from sklearn.cluster import KMeans

from embedding.tsne import (
    Embedding2D,
    TsneConfig,
    calibrate_affinities,
    joint_probabilities,
    kl_divergence,
    tsne,
)
from mts.errors import ConfigError


@pytest.fixture
def tmp_dir():
    with tempfile.TemporaryDirectory() as d:
        yield d


def blobs(n_per=50, seed=0, spread=10.0):
    rng = np.random.default_rng(seed)
    centers = spread * np.eye(3, 5)
    truth = np.repeat(np.arange(3), n_per)
    return centers[truth] + rng.standard_normal((3 * n_per, 5)), truth


def recovery(pred, truth, k=3):
    return max(
        float(np.mean(np.array(perm)[pred] == truth))
        for perm in itertools.permutations(range(k))
    )


# ── Affinities ──────────────────────────────────────────────


class TestAffinities:
    def test_perplexity_reached_per_point(self):
        X = np.random.default_rng(0).standard_normal((60, 5))
        sq = squareform(pdist(X, "sqeuclidean"))
        P, betas, achieved = calibrate_affinities(sq, perplexity=10.0)
        assert np.allclose(achieved, 10.0, atol=1e-3)
        assert np.allclose(P.sum(axis=1), 1.0)
        assert (np.diag(P) == 0).all()
        assert (betas > 0).all()

    def test_joint_is_symmetric_distribution(self):
        X = np.random.default_rng(1).standard_normal((40, 3))
        P = joint_probabilities(X, perplexity=8.0)
        assert np.allclose(P, P.T)
        assert P.sum() == pytest.approx(1.0)
        assert (P >= 0).all()

    def test_kl_of_identical_distributions(self):
        P = np.full((4, 4), 1.0 / 12)
        np.fill_diagonal(P, 0.0)
        assert kl_divergence(P, P) == pytest.approx(0.0, abs=1e-15)


# ── Optimization ────────────────────────────────────────────


class TestTsne:
    def test_recovers_blobs(self):
        scores = []
        for seed in range(3):
            X, truth = blobs(seed=seed)
            emb = tsne(X, TsneConfig(perplexity=30, seed=seed))
            pred = KMeans(n_clusters=3, n_init=10, random_state=0).fit_predict(emb.coords)
            scores.append(recovery(pred, truth))
        assert np.mean(scores) >= 0.95

    def test_duplicate_points_stay_together(self):
        X = np.random.default_rng(2).standard_normal((40, 5))
        X = np.vstack([X, X[:1]])
        emb = tsne(X, TsneConfig(perplexity=5, n_iter=500, seed=1))
        d = np.linalg.norm(emb.coords - emb.coords[-1], axis=1)
        d[-1] = np.inf
        assert int(np.argmin(d)) == 0

    def test_kl_lower_after_more_iterations(self):
        late, early = [], []
        for seed in range(3):
            X, _ = blobs(n_per=20, seed=seed)
            trace = tsne(X, TsneConfig(perplexity=10, seed=seed)).kl_trace
            assert len(trace) == 1000
            early.append(trace[299])
            late.append(trace[999])
        assert np.mean(late) <= np.mean(early)

    def test_translation_invariant(self):
        rng = np.random.default_rng(3)
        X = rng.integers(0, 40, size=(30, 4)) / 4.0
        cfg = TsneConfig(perplexity=5, n_iter=300, seed=2)
        a = tsne(X, cfg).coords
        b = tsne(X + 8.0, cfg).coords
        assert np.array_equal(a, b)

    def test_deterministic(self):
        X, _ = blobs(n_per=10)
        cfg = TsneConfig(perplexity=5, n_iter=200, seed=4)
        assert np.array_equal(tsne(X, cfg).coords, tsne(X, cfg).coords)

    def test_embedding_is_centered(self):
        X, _ = blobs(n_per=10)
        emb = tsne(X, TsneConfig(perplexity=5, n_iter=100))
        assert np.allclose(emb.coords.mean(axis=0), 0.0, atol=1e-10)

    def test_too_few_points(self):
        with pytest.raises(ConfigError):
            tsne(np.zeros((9, 2)), TsneConfig(perplexity=2))

    def test_perplexity_too_large(self):
        with pytest.raises(ConfigError):
            tsne(np.random.default_rng(0).random((30, 2)), TsneConfig(perplexity=10))

    def test_unknown_setting(self):
        with pytest.raises(ConfigError):
            TsneConfig.from_dict({"theta": 0.5})


# ── Files ───────────────────────────────────────────────────


class TestEmbeddingFile:
    def test_csv_roundtrip(self, tmp_dir):
        emb = Embedding2D(
            coords=np.array([[0.1, -2.0], [3.5, 1e-9]]),
            ids=["007", "a"],
            labels=np.array([1, 0]),
            method="KPCA",
        )
        path = Path(tmp_dir) / "embedding.csv"
        emb.to_csv(path)
        assert path.read_text(encoding="utf-8").splitlines()[0] == "id,x,y,label,method"
        again = Embedding2D.from_csv(path)
        assert again.ids == ["007", "a"]
        assert np.array_equal(again.coords, emb.coords)
        assert again.labels.tolist() == [1, 0]
        assert again.method == "KPCA"

    def test_coordinates_reload_exactly(self, tmp_dir):
        coords = np.random.default_rng(4).standard_normal((50, 2)) * 37.0
        emb = Embedding2D(coords=coords, ids=[f"r{i}" for i in range(50)], labels=np.zeros(50, dtype=int), method="PCA")
        path = Path(tmp_dir) / "embedding.csv"
        emb.to_csv(path)
        assert np.array_equal(Embedding2D.from_csv(path).coords, coords)
