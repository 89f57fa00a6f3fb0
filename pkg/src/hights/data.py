"""UCR-style labelled time-series ingestion, normalisation, splitting and batching."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Malformed or unusable dataset file."""


@dataclass(frozen=True)
class TimeSeriesSample:
    values: np.ndarray
    label: int


@dataclass(frozen=True)
class Dataset:
    """Equal-length univariate series with contiguous labels ``0..C-1``.

    ``label_map`` maps the original file label (as parsed float) to its index.
    """

    X: np.ndarray
    y: np.ndarray
    n_classes: int
    label_map: dict[float, int] = field(default_factory=dict)
    name: str = ""
    stratified: bool = True

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise DataError(f"X {self.X.shape} and y {self.y.shape} disagree")
        if not np.all(np.isfinite(self.X)):
            raise DataError("non-finite values in series")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def length(self) -> int:
        return self.X.shape[1]

    @property
    def samples(self) -> list[TimeSeriesSample]:
        return [TimeSeriesSample(self.X[i], int(self.y[i])) for i in range(len(self))]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return replace(self, X=self.X[idx], y=self.y[idx])


def _parse_rows(path: Path) -> tuple[list[float], list[list[float]]]:
    text = path.read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty file")
    delim = "\t" if "\t" in lines[0] else ","
    labels, rows = [], []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.strip().split(delim)
        try:
            vals = [float(f) for f in fields]
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: non-numeric field ({exc})") from None
        if len(vals) < 2:
            raise DataError(f"{path}:{lineno}: need a label and at least one value")
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise DataError(f"{path}:{lineno}: ragged row ({len(vals) - 1} values, expected {width - 1})")
        labels.append(vals[0])
        rows.append(vals[1:])
    return labels, rows


def load_tsv(path, label_map: dict[float, int] | None = None) -> Dataset:
    """Read one sample per line: label then the series, tab- or comma-separated.

    Labels are remapped to contiguous indices in sorted order of the original
    values unless an existing ``label_map`` is given (for a matching test file).
    """
    path = Path(path)
    labels, rows = _parse_rows(path)
    if label_map is None:
        label_map = {v: i for i, v in enumerate(sorted(set(labels)))}
    missing = set(labels) - set(label_map)
    if missing:
        raise DataError(f"{path}: labels {sorted(missing)} not in label map")
    y = np.array([label_map[v] for v in labels], dtype=np.int64)
    return Dataset(np.array(rows, dtype=np.float64), y, len(label_map), dict(label_map), path.stem)


def load_split(data_dir, name: str) -> tuple[Dataset, Dataset]:
    """Load ``<name>_TRAIN.tsv`` / ``<name>_TEST.tsv`` with a shared label map.

    Looks in ``data_dir/name/`` first, then ``data_dir/``.
    """
    base = Path(data_dir)
    for d in (base / name, base):
        train_p, test_p = d / f"{name}_TRAIN.tsv", d / f"{name}_TEST.tsv"
        if train_p.exists() and test_p.exists():
            break
    else:
        raise DataError(f"no {name}_TRAIN.tsv/{name}_TEST.tsv under {base}")
    l_train, _ = _parse_rows(train_p)
    l_test, _ = _parse_rows(test_p)
    label_map = {v: i for i, v in enumerate(sorted(set(l_train) | set(l_test)))}
    train = replace(load_tsv(train_p, label_map), name=name)
    test = replace(load_tsv(test_p, label_map), name=name)
    if train.length != test.length:
        raise DataError(f"{name}: train length {train.length} != test length {test.length}")
    return train, test


def save_tsv(d: Dataset, path) -> None:
    inverse = {i: v for v, i in d.label_map.items()} if d.label_map else {}
    with open(path, "w", encoding="utf-8") as fh:
        for x, y in zip(d.X, d.y):
            lab = inverse.get(int(y), int(y))
            lab_s = str(int(lab)) if float(lab).is_integer() else repr(float(lab))
            fh.write(lab_s + "\t" + "\t".join(repr(float(v)) for v in x) + "\n")


def znormalize(d: Dataset) -> Dataset:
    """Per-series zero mean / unit (population) std; constant series become zeros."""
    mu = d.X.mean(axis=1, keepdims=True)
    sd = d.X.std(axis=1, keepdims=True)
    X = np.where(sd > 1e-12, (d.X - mu) / np.where(sd > 1e-12, sd, 1.0), 0.0)
    return replace(d, X=X)


def split_train_val(d: Dataset, frac: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded split into (train, validation) with ``frac`` of samples held out.

    Stratified when every class has at least two samples; otherwise a plain
    shuffle and both halves carry ``stratified=False``.
    """
    if not 0.0 < frac < 1.0:
        raise ValueError(f"frac must lie in (0, 1), got {frac}")
    n = len(d)
    n_val = int(round(n * frac))
    n_val = min(max(n_val, 1), n - 1)
    rng = np.random.default_rng(seed)
    counts = np.bincount(d.y, minlength=d.n_classes)
    present = counts[counts > 0]
    stratified = bool(np.all(present >= 2))
    if stratified:
        # largest-remainder allocation so the total is exactly n_val
        classes = np.flatnonzero(counts)
        quota = counts[classes] * n_val / n
        take = np.floor(quota).astype(int)
        take = np.clip(take, 0, counts[classes] - 1)
        order = np.argsort(-(quota - np.floor(quota)), kind="stable")
        i = 0
        while take.sum() < n_val and i < 10 * len(classes):
            c = order[i % len(classes)]
            if take[c] < counts[classes[c]] - 1:
                take[c] += 1
            i += 1
        val_idx = []
        for c, k in zip(classes, take):
            members = np.flatnonzero(d.y == c)
            val_idx.extend(rng.permutation(members)[:k].tolist())
        val_idx = np.array(sorted(val_idx), dtype=np.int64)
    else:
        log.warning("class with fewer than 2 samples; falling back to unstratified split")
        val_idx = np.sort(rng.permutation(n)[:n_val])
    mask = np.zeros(n, dtype=bool)
    mask[val_idx] = True
    train_idx = rng.permutation(np.flatnonzero(~mask))
    val_idx = rng.permutation(val_idx)
    tr = replace(d.subset(train_idx), stratified=stratified)
    va = replace(d.subset(val_idx), stratified=stratified)
    return tr, va


def batches(d: Dataset, batch_size: int, seed: int | np.random.Generator | None = None,
            shuffle: bool = True) -> Iterator[np.ndarray]:
    """Yield index arrays covering every sample once; the last batch may be short."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    n = len(d)
    if shuffle:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        order = rng.permutation(n)
    else:
        order = np.arange(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def sine_vs_noise(n_train: int = 200, n_test: int = 100, length: int = 128,
                  seed: int = 0, noise: float = 0.3) -> tuple[Dataset, Dataset]:
    """Two-class toy set: class 0 is a noisy sine, class 1 white noise.

    Each sine gets a random phase and a period between 16 and 40 samples.
    """
    rng = np.random.default_rng(seed)
    n = n_train + n_test
    y = np.arange(n) % 2
    rng.shuffle(y)
    t = np.arange(length)
    X = np.empty((n, length))
    for i in range(n):
        if y[i] == 0:
            period = rng.uniform(16.0, 40.0)
            phase = rng.uniform(0.0, 2 * math.pi)
            X[i] = np.sin(2 * math.pi * t / period + phase) + noise * rng.standard_normal(length)
        else:
            X[i] = rng.standard_normal(length)
    lm = {0.0: 0, 1.0: 1}
    full = Dataset(X, y.astype(np.int64), 2, lm, "SineVsNoise")
    return full.subset(np.arange(n_train)), full.subset(np.arange(n_train, n))


def class_counts(d: Dataset) -> Sequence[int]:
    return np.bincount(d.y, minlength=d.n_classes).tolist()
