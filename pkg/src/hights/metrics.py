"""Evaluation metrics, embedding export and run reports."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .checkpoint import atomic_write
from .data import Dataset

# Reference accuracies (mean, std over five runs) reported for the full model.
REFERENCE_ACCURACY = {
    "DPOAG": (0.804, 0.032), "DistalPhalanxOutlineAgeGroup": (0.804, 0.032),
    "DPOC": (0.807, 0.025), "DistalPhalanxOutlineCorrect": (0.807, 0.025),
    "ECG5000": (0.942, 0.002),
    "FRT": (0.998, 0.000), "FreezerRegularTrain": (0.998, 0.000),
    "Ham": (0.798, 0.049),
    "MPOC": (0.847, 0.014), "MiddlePhalanxOutlineCorrect": (0.847, 0.014),
    "PPOAG": (0.878, 0.006), "ProximalPhalanxOutlineAgeGroup": (0.878, 0.006),
    "RD": (0.624, 0.031), "RefrigerationDevices": (0.624, 0.031),
    "Strawberry": (0.984, 0.004),
    "Wine": (0.974, 0.017),
    "C&E": (0.994, 0.001), "B&C&E": (0.973, 0.004),
}


def accuracy_from_predictions(pred, y) -> float:
    pred = np.asarray(pred)
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("accuracy of an empty set is undefined")
    return float(np.mean(pred == y))


def evaluate_accuracy(model, test: Dataset, complexes=None) -> float:
    """Fraction of ``test`` whose arg-max prediction equals the label."""
    if len(test) == 0:
        raise ValueError("empty test set")
    return accuracy_from_predictions(model.predict(test.X, complexes), test.y)


def confusion_matrix(pred, y, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y), np.asarray(pred)), 1)
    return cm


def davies_bouldin(X, labels) -> float:
    """Davies-Bouldin index with Euclidean distances (lower is better).

    Scatter of a class is the mean distance of its points to the centroid.
    Two classes sharing a centroid give an infinite ratio, and so ``inf``.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    if X.ndim == 1:
        X = X[:, None]
    classes = np.unique(labels)
    if len(classes) < 2:
        raise ValueError("Davies-Bouldin needs at least two classes")
    cents = np.stack([X[labels == c].mean(axis=0) for c in classes])
    scatter = np.array([np.linalg.norm(X[labels == c] - cents[i], axis=1).mean()
                        for i, c in enumerate(classes)])
    gaps = np.linalg.norm(cents[:, None, :] - cents[None, :, :], axis=-1)
    num = scatter[:, None] + scatter[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(gaps > 0, num / np.where(gaps > 0, gaps, 1.0), math.inf)
    np.fill_diagonal(ratio, -math.inf)
    return float(ratio.max(axis=1).mean())


def export_embeddings(model, data: Dataset, path, complexes=None) -> np.ndarray:
    """CSV with header ``label,r_0,...`` and one row per sample (9 significant digits)."""
    R = model.embed(data.X, complexes)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label"] + [f"r_{i}" for i in range(R.shape[1])])
    for lab, row in zip(data.y, R):
        w.writerow([int(lab)] + [f"{v:.9g}" for v in row])
    atomic_write(path, buf.getvalue())
    return R


def read_embeddings(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    body = np.array(rows[1:], dtype=np.float64)
    return body[:, 1:], body[:, 0].astype(np.int64)


@dataclass
class MetricsReport:
    dataset: str
    seeds: list[int]
    accuracies: list[float]
    mean: float = 0.0
    std: float = 0.0
    dbi: float | None = None
    dbi_space: str = "raw"
    config: dict = field(default_factory=dict)
    wall_seconds: float = 0.0
    reference_accuracy: dict | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.accuracies:
            self.mean = float(np.mean(self.accuracies))
            self.std = float(np.std(self.accuracies)) if len(self.accuracies) > 1 else 0.0
        if self.reference_accuracy is None and self.dataset in REFERENCE_ACCURACY:
            m, s = REFERENCE_ACCURACY[self.dataset]
            self.reference_accuracy = {"mean": m, "std": s}

    def to_json(self) -> str:
        d = asdict(self)
        if d["dbi"] is not None and not math.isfinite(d["dbi"]):
            d["dbi"] = str(d["dbi"])
        return json.dumps(d, indent=2, sort_keys=True)

    def summary(self) -> str:
        lines = [f"dataset {self.dataset}: accuracy {self.mean:.4f} +/- {self.std:.4f} "
                 f"over seeds {self.seeds}"]
        lines.append("  per seed: " + ", ".join(f"{a:.4f}" for a in self.accuracies))
        if self.dbi is not None:
            lines.append(f"  Davies-Bouldin ({self.dbi_space} embeddings): {self.dbi:.4f}")
        if self.reference_accuracy:
            lines.append(f"  reference: {self.reference_accuracy['mean']:.3f} "
                         f"+/- {self.reference_accuracy['std']:.3f}")
        return "\n".join(lines)
