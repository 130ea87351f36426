"""Dataset container, CSV ingestion, standardization and stratified splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

STD_FLOOR = 1e-12


class DatasetError(ValueError):
    """Raised for malformed or degenerate input data."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with contiguous integer labels and stable instance ids.

    ``metadata`` carries free-form provenance such as the original label values.
    """

    features: np.ndarray
    labels: np.ndarray
    instance_ids: np.ndarray
    n_classes: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        ids = np.asarray(self.instance_ids, dtype=np.int64)
        if X.ndim != 2:
            raise DatasetError("features must be a 2-D matrix")
        if not (X.shape[0] == y.shape[0] == ids.shape[0]):
            raise DatasetError(
                f"row count mismatch: features {X.shape[0]}, labels {y.shape[0]}, "
                f"ids {ids.shape[0]}"
            )
        if y.size and (y.min() < 0 or y.max() >= self.n_classes):
            raise DatasetError("labels must lie in 0..n_classes-1")
        if np.unique(ids).size != ids.size:
            raise DatasetError("instance_ids must be unique")
        for arr in (X, y, ids):
            arr.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "instance_ids", ids)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def feature_count(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(
            self.features[rows],
            self.labels[rows],
            self.instance_ids[rows],
            self.n_classes,
            dict(self.metadata),
        )

    def with_features(self, features) -> "Dataset":
        return Dataset(features, self.labels, self.instance_ids, self.n_classes, dict(self.metadata))


@dataclass(frozen=True, eq=False)
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class SplitPlan:
    repeats: int
    train_indices: tuple
    test_indices: tuple
    seed: int
    train_fraction: float = 0.7


def _parse_float(text, row, col):
    try:
        value = float(text)
    except ValueError:
        raise DatasetError(f"unparseable cell {text!r} at row {row}, column {col}") from None
    if math.isnan(value):
        raise DatasetError(f"missing value at row {row}, column {col}")
    return value


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path, label_column=-1) -> Dataset:
    """Read a comma-separated file into a :class:`Dataset`.

    Parameters
    ----------
    path : str or Path
        UTF-8 CSV file. A header row is detected when any non-label cell of
        the first row is not numeric.
    label_column : str or int
        Header name or 0-based column index (negative indices allowed).

    Returns
    -------
    Dataset
        Labels are remapped to ``0..N-1`` in order of first appearance; the
        original values are kept in ``metadata["label_values"]``.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DatasetError(f"{path} is empty")

    width = len(rows[0])
    header = None
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        header = [c.strip() for c in rows[0]]
        if label_column not in header:
            raise DatasetError(f"label column {label_column!r} not in header")
        label_idx = header.index(label_column)
        rows = rows[1:]
    else:
        label_idx = int(label_column)
        if label_idx < 0:
            label_idx += width
        if not 0 <= label_idx < width:
            raise DatasetError(f"label column index {label_column} out of range")
        first = [c.strip() for j, c in enumerate(rows[0]) if j != label_idx]
        if any(not _is_number(c) for c in first):
            header = [c.strip() for c in rows[0]]
            rows = rows[1:]

    feats, raw_labels = [], []
    for i, row in enumerate(rows):
        lineno = i + (2 if header else 1)
        if len(row) != width:
            raise DatasetError(f"row {lineno} has {len(row)} cells, expected {width}")
        vals = []
        for j, cell in enumerate(row):
            cell = cell.strip()
            if j == label_idx:
                if cell == "":
                    raise DatasetError(f"missing label at row {lineno}")
                raw_labels.append(cell)
            else:
                if cell == "":
                    raise DatasetError(f"missing value at row {lineno}, column {j}")
                vals.append(_parse_float(cell, lineno, j))
        feats.append(vals)

    mapping = {}
    for lab in raw_labels:
        key = _label_key(lab)
        if key not in mapping:
            mapping[key] = len(mapping)
    if len(mapping) < 2:
        raise DatasetError("dataset has a single class")
    labels = np.array([mapping[_label_key(lab)] for lab in raw_labels], dtype=np.int64)
    feature_names = None
    if header:
        feature_names = [h for j, h in enumerate(header) if j != label_idx]
    return Dataset(
        np.array(feats, dtype=np.float64).reshape(len(feats), width - 1),
        labels,
        np.arange(len(labels)),
        len(mapping),
        {
            "source": str(path),
            "label_values": list(mapping),
            "feature_names": feature_names,
        },
    )


def _label_key(text):
    # "1" and "1.0" name the same class
    try:
        value = float(text)
    except ValueError:
        return text
    return int(value) if value.is_integer() else value


def fit_standardizer(train: Dataset) -> ScalerParams:
    if train.n == 0:
        raise DatasetError("cannot fit a standardizer on an empty dataset")
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    std = np.where(std < STD_FLOOR, 1.0, std)
    return ScalerParams(mean, std)


def apply_standardizer(params: ScalerParams, data: Dataset) -> Dataset:
    if data.feature_count != params.mean.shape[0]:
        raise DatasetError(
            f"dimension mismatch: scaler has {params.mean.shape[0]} columns, "
            f"data has {data.feature_count}"
        )
    return data.with_features((data.features - params.mean) / params.std)


def stratified_splits(data: Dataset, repeats: int = 5, train_fraction: float = 0.7,
                      seed: int = 0) -> SplitPlan:
    """Repeated stratified shuffle-splits.

    Each class contributes ``round(train_fraction * n_c)`` rows to the train
    side, clipped so that both sides keep at least one row of the class.
    """
    if not 0.0 < train_fraction < 1.0:
        raise DatasetError("train_fraction must be in (0, 1)")
    counts = data.class_counts()
    if counts.min() < 2:
        raise DatasetError("every class needs at least 2 instances to split")
    rng = np.random.default_rng(seed)
    by_class = [np.flatnonzero(data.labels == c) for c in range(data.n_classes)]
    trains, tests = [], []
    for _ in range(repeats):
        tr, te = [], []
        for idx in by_class:
            perm = rng.permutation(idx)
            k = min(max(int(round(train_fraction * idx.size)), 1), idx.size - 1)
            tr.append(perm[:k])
            te.append(perm[k:])
        trains.append(np.sort(np.concatenate(tr)))
        tests.append(np.sort(np.concatenate(te)))
    return SplitPlan(repeats, tuple(trains), tuple(tests), seed, train_fraction)


def make_gaussian_imbalanced(n_major: int, n_minor: int, d: int, separation: float,
                             seed: int = 0) -> Dataset:
    """Two unit-variance isotropic Gaussian clusters.

    The minority mean sits at distance ``separation`` from the origin along a
    seeded random unit direction. Label 0 is the majority class.
    """
    if n_major < 1 or n_minor < 1 or d < 1:
        raise DatasetError("counts and dimension must be >= 1")
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=d)
    direction /= np.linalg.norm(direction)
    X0 = rng.normal(size=(n_major, d))
    X1 = rng.normal(size=(n_minor, d)) + separation * direction
    X = np.vstack([X0, X1])
    y = np.concatenate([np.zeros(n_major, np.int64), np.ones(n_minor, np.int64)])
    order = rng.permutation(X.shape[0])
    return Dataset(
        X[order],
        y[order],
        np.arange(X.shape[0]),
        2,
        {"source": "gaussian", "separation": float(separation), "label_values": [0, 1]},
    )


def imbalance_ratio(data: Dataset) -> float:
    counts = data.class_counts()
    if counts.size < 2:
        raise DatasetError("imbalance ratio needs at least 2 classes")
    return float(counts.max() / counts.min())


def write_csv(data: Dataset, path, label_name: str = "label"):
    """Write features plus label column (last) with a header row."""
    names = data.metadata.get("feature_names") or [f"f{j}" for j in range(data.feature_count)]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(names) + [label_name])
        for x, lab in zip(data.features, data.labels):
            w.writerow([repr(float(v)) for v in x] + [int(lab)])
