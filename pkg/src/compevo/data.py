"""Datasets: CSV loading, seeded splits, class imbalance, synthetic generators."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DataError,
    EmptyClass,
    MissingValue,
    NonNumericCell,
    StratificationImpossible,
    UnknownColumn,
)
from .kinds import TaskType

_MISSING_TOKENS = {"", "na", "nan", "null", "none", "?"}


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    target: np.ndarray
    task: TaskType
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] != self.target.shape[0]:
            raise DataError(f"features {self.features.shape} and target {self.target.shape} disagree")
        if self.task is TaskType.CLASSIFICATION and not np.isin(self.target, (0.0, 1.0)).all():
            raise DataError("binary targets must be 0 or 1")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take(self, rows: np.ndarray) -> "Dataset":
        return Dataset(self.features[rows], self.target[rows], self.task, self.feature_names)


def load_csv(path: str | Path, target_column: str | int, task: TaskType) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = list(reader)
    header = [h.strip() for h in header]
    if isinstance(target_column, int) or (isinstance(target_column, str) and target_column.lstrip("-").isdigit()
                                         and target_column not in header):
        t = int(target_column)
        if not -len(header) <= t < len(header):
            raise UnknownColumn(f"target index {t} out of range for {len(header)} columns")
        t %= len(header)
    else:
        if target_column not in header:
            raise UnknownColumn(f"no column named {target_column!r}")
        t = header.index(target_column)

    values = np.empty((len(rows), len(header)))
    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise DataError(f"row {r} has {len(row)} cells, header has {len(header)}")
        for c, cell in enumerate(row):
            text = cell.strip()
            if text.lower() in _MISSING_TOKENS:
                raise MissingValue(r, c)
            try:
                v = float(text)
            except ValueError:
                raise NonNumericCell(r, c, cell) from None
            if math.isnan(v):
                raise MissingValue(r, c)
            values[r - 1, c] = v
    feature_cols = [c for c in range(len(header)) if c != t]
    return Dataset(values[:, feature_cols], values[:, t].copy(), task, tuple(header[c] for c in feature_cols))


def save_csv(data: Dataset, path: str | Path, target_name: str = "target") -> None:
    names = list(data.feature_names or (f"x{i}" for i in range(data.n_features)))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(names + [target_name])
        for x, y in zip(data.features, data.target):
            w.writerow([repr(float(v)) for v in x] + [repr(float(y))])


def split_indices(
    target: np.ndarray, task: TaskType, train_fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    n = len(target)
    if n < 4:
        raise DataError("need at least 4 samples to split")
    if task is TaskType.REGRESSION:
        perm = rng.permutation(n)
        k = math.ceil(train_fraction * n)
        return np.sort(perm[:k]), np.sort(perm[k:])
    train, test = [], []
    for c in (0.0, 1.0):
        members = np.flatnonzero(target == c)
        if len(members) < 2:
            raise StratificationImpossible(f"class {int(c)} has {len(members)} sample(s); need 2")
        perm = rng.permutation(members)
        k = min(math.ceil(train_fraction * len(members)), len(members) - 1)
        train.append(perm[:k])
        test.append(perm[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def train_test_split(d: Dataset, train_fraction: float = 0.7, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded shuffle split; classification splits are stratified per class."""
    tr, te = split_indices(d.target, d.task, train_fraction, np.random.default_rng(seed))
    return d.take(tr), d.take(te)


def imbalance_metric(target: Sequence[float], n_classes: int = 2) -> float:
    """K * sum_c (n_c/N - 1/K)^2; zero for a perfectly balanced target."""
    y = np.asarray(target)
    if n_classes < 2:
        raise ValueError("need at least two classes")
    labels, counts = np.unique(y, return_counts=True)
    if len(labels) < n_classes:
        raise EmptyClass(f"{n_classes} classes declared but only {len(labels)} present")
    freq = counts / counts.sum()
    return float(n_classes * np.sum((freq - 1.0 / n_classes) ** 2))


# --- synthetic generators --------------------------------------------------

SYNTH_KINDS = ("linear_regression", "noisy_xor", "two_gaussians", "friedman_like")
LINEAR_WEIGHTS = np.array([1.5, -2.0, 0.5, 3.0, -1.0])
LINEAR_BIAS = 0.5


def synth_dataset(kind: str, n: int, noise: float = 0.0, seed: int = 0) -> Dataset:
    """Deterministic desk-scale datasets.

    linear_regression
        X ~ N(0, 1)^5, y = X @ (1.5, -2, 0.5, 3, -1) + 0.5 + noise * N(0, 1).
    noisy_xor
        X ~ U(-1, 1)^4, y = [x0 * x1 > 0]; each label flipped with probability
        ``noise``.  x2, x3 are distractors.
    two_gaussians
        Equal-size classes, N(0, 1)^4 with class 1 shifted by +4 along x0;
        labels flipped with probability ``noise``.
    friedman_like
        X ~ U(0, 1)^8, y = 10 sin(pi x0 x1) + 20 (x2 - 0.5)^2 + 10 x3 + 5 x4
        + noise * N(0, 1).
    """
    if n < 20:
        raise DataError("synthetic datasets need n >= 20")
    rng = np.random.default_rng(seed)
    if kind == "linear_regression":
        X = rng.standard_normal((n, 5))
        y = X @ LINEAR_WEIGHTS + LINEAR_BIAS + noise * rng.standard_normal(n)
        task = TaskType.REGRESSION
    elif kind == "noisy_xor":
        X = rng.uniform(-1.0, 1.0, (n, 4))
        y = (X[:, 0] * X[:, 1] > 0).astype(float)
        flip = rng.random(n) < noise
        y[flip] = 1.0 - y[flip]
        task = TaskType.CLASSIFICATION
    elif kind == "two_gaussians":
        y = (np.arange(n) % 2).astype(float)
        X = rng.standard_normal((n, 4))
        X[:, 0] += 4.0 * y
        flip = rng.random(n) < noise
        y[flip] = 1.0 - y[flip]
        task = TaskType.CLASSIFICATION
    elif kind == "friedman_like":
        X = rng.uniform(0.0, 1.0, (n, 8))
        y = (
            10 * np.sin(np.pi * X[:, 0] * X[:, 1])
            + 20 * (X[:, 2] - 0.5) ** 2
            + 10 * X[:, 3]
            + 5 * X[:, 4]
            + noise * rng.standard_normal(n)
        )
        task = TaskType.REGRESSION
    else:
        raise DataError(f"unknown synthetic kind {kind!r}; choose from {', '.join(SYNTH_KINDS)}")
    return Dataset(X, y, task, tuple(f"x{i}" for i in range(X.shape[1])))


def parse_data_source(source: str, target_column: str | int = -1, task: str | None = None) -> Dataset:
    """Resolve ``synth:kind:n:noise[:seed]`` or a CSV path."""
    if source.startswith("synth:"):
        parts = source.split(":")
        if len(parts) not in (4, 5):
            raise DataError(f"bad synthetic source {source!r}; expected synth:kind:n:noise[:seed]")
        try:
            n = int(parts[2])
            noise = float(parts[3])
            seed = int(parts[4]) if len(parts) == 5 else 0
        except ValueError:
            raise DataError(f"bad synthetic source {source!r}") from None
        return synth_dataset(parts[1], n, noise, seed)
    if task is None:
        raise DataError("CSV sources need an explicit task type")
    return load_csv(source, target_column, TaskType.parse(task))
