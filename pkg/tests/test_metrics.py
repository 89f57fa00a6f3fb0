import json
import math

import numpy as np
import pytest

from hights.data import Dataset
from hights.metrics import (MetricsReport, accuracy_from_predictions, confusion_matrix,
                            davies_bouldin, evaluate_accuracy, export_embeddings, read_embeddings)


def brute_force_dbi(X, labels):
    """Davies-Bouldin index written out with explicit loops."""
    classes = sorted(set(labels.tolist()))
    cents, scat = [], []
    for c in classes:
        pts = [X[i] for i in range(len(X)) if labels[i] == c]
        cen = [sum(p[j] for p in pts) / len(pts) for j in range(X.shape[1])]
        cents.append(cen)
        scat.append(sum(math.dist(p, cen) for p in pts) / len(pts))
    worst = []
    for i in range(len(classes)):
        worst.append(max((scat[i] + scat[j]) / math.dist(cents[i], cents[j])
                         for j in range(len(classes)) if j != i))
    return sum(worst) / len(worst)


class TestDaviesBouldin:
    def test_zero_scatter(self):
        X = np.array([[0.0, 0.0], [0.0, 0.0], [3.0, 4.0], [3.0, 4.0]])
        assert davies_bouldin(X, [0, 0, 1, 1]) == 0.0

    def test_line_example(self):
        assert davies_bouldin(np.array([0.0, 2.0, 10.0, 12.0]), [0, 0, 1, 1]) == 0.2

    @pytest.mark.parametrize("seed", range(10))
    def test_brute_force(self, seed):
        r = np.random.default_rng(seed)
        n = int(r.integers(6, 51))
        X = r.normal(size=(n, int(r.integers(1, 5))))
        y = np.arange(n) % int(r.integers(2, 5))
        assert abs(davies_bouldin(X, y) - brute_force_dbi(X, y)) < 1e-9

    def test_shrinking_scatter(self, rng):
        base = np.array([[0.0, 0.0], [10.0, 0.0]])
        noise = rng.normal(size=(20, 2))
        y = np.repeat([0, 1], 10)
        vals = [davies_bouldin(base[y] + s * (noise - noise.reshape(2, 10, 2).mean(1)[y]), y)
                for s in (2.0, 1.0, 0.5)]
        assert vals[0] > vals[1] > vals[2]

    def test_coincident_centroids(self):
        X = np.array([[-1.0], [1.0], [-2.0], [2.0]])
        assert davies_bouldin(X, [0, 0, 1, 1]) == math.inf

    def test_single_class(self):
        with pytest.raises(ValueError):
            davies_bouldin(np.zeros((3, 2)), [0, 0, 0])


class Oracle:
    """Predicts from a lookup table of the stored labels."""

    def __init__(self, pred):
        self.pred = np.asarray(pred)

    def predict(self, X, complexes=None):
        return self.pred[: len(X)]

    def embed(self, X, complexes=None):
        return np.column_stack([np.asarray(X)[:, 0], np.arange(len(X)) / 3.0])


class TestAccuracy:
    def test_perfect(self):
        d = Dataset(np.zeros((5, 2)), np.array([0, 1, 1, 0, 1]), 2)
        assert evaluate_accuracy(Oracle(d.y), d) == 1.0

    def test_constant_predictor(self):
        d = Dataset(np.zeros((90, 2)), np.arange(90) % 3, 3)
        assert evaluate_accuracy(Oracle(np.zeros(90, int)), d) == pytest.approx(1 / 3)

    def test_confusion_recount(self, rng):
        y = rng.integers(0, 4, 60)
        pred = np.where(rng.random(60) < 0.7, y, rng.integers(0, 4, 60))
        cm = confusion_matrix(pred, y, 4)
        assert cm.sum() == 60
        assert accuracy_from_predictions(pred, y) == np.trace(cm) / 60

    def test_empty(self):
        with pytest.raises(ValueError):
            accuracy_from_predictions([], [])


class TestExport:
    def test_lines_and_round_trip(self, tmp_path, rng):
        X = rng.normal(size=(7, 3)) * 1e3
        d = Dataset(X, np.arange(7) % 2, 2)
        R = export_embeddings(Oracle(d.y), d, tmp_path / "e.csv")
        lines = (tmp_path / "e.csv").read_text().splitlines()
        assert len(lines) == 8 and lines[0] == "label,r_0,r_1"
        back, labels = read_embeddings(tmp_path / "e.csv")
        np.testing.assert_allclose(back, R, rtol=1e-8)
        assert labels.tolist() == d.y.tolist()


class TestReport:
    def test_mean_and_round_trip(self):
        rep = MetricsReport("Wine", [0, 1, 2], [0.9, 0.8, 0.95], dbi=1.5)
        assert abs(rep.mean - np.mean([0.9, 0.8, 0.95])) < 1e-12
        data = json.loads(rep.to_json())
        assert data["reference_accuracy"] == {"mean": 0.974, "std": 0.017}
        assert data["dbi_space"] == "raw"
        assert MetricsReport(**data).to_json() == rep.to_json()

    def test_single_seed_std(self):
        assert MetricsReport("x", [3], [0.7]).std == 0.0

    def test_summary_mentions_reference(self):
        assert "0.974" in MetricsReport("Wine", [0], [0.5]).summary()
