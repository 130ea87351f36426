"""CSV form of an augmented training set: provenance columns, features, optional soft labels."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .resampling import NATURAL, SYNTHETIC, AugmentedDataset, Provenance

PROVENANCE_COLUMNS = ["instance_id", "label", "origin", "parent_a", "parent_b", "lambda"]


def _fmt(v: float) -> str:
    return repr(float(v))


def write_augmented_csv(aug: AugmentedDataset, path):
    d, N = aug.data.feature_count, aug.data.n_classes
    names = aug.data.metadata.get("feature_names") or [f"f{j}" for j in range(d)]
    header = PROVENANCE_COLUMNS + list(names)
    if aug.soft_labels is not None:
        header += [f"soft_{c}" for c in range(N)]
    p = aug.provenance
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in range(aug.data.n):
            syn = bool(p.synthetic[r])
            row = [
                int(aug.data.instance_ids[r]),
                int(aug.data.labels[r]),
                SYNTHETIC if syn else NATURAL,
                int(p.parent_a[r]),
                int(p.parent_b[r]) if p.parent_b[r] >= 0 else "",
                _fmt(p.lam[r]) if syn else "",
            ]
            row += [_fmt(v) for v in aug.data.features[r]]
            if aug.soft_labels is not None:
                row += [_fmt(v) for v in aug.soft_labels[r]]
            w.writerow(row)


def read_augmented_csv(path, n_classes=None, method=None) -> AugmentedDataset:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header[:len(PROVENANCE_COLUMNS)] != PROVENANCE_COLUMNS:
        raise ValueError(f"{path} is not an augmented-dataset CSV")
    soft_cols = [j for j, h in enumerate(header) if h.startswith("soft_")]
    feat_cols = [j for j in range(len(PROVENANCE_COLUMNS), len(header)) if j not in soft_cols]
    ids = np.array([int(r[0]) for r in body], dtype=np.int64)
    labels = np.array([int(r[1]) for r in body], dtype=np.int64)
    syn = np.array([r[2] == SYNTHETIC for r in body])
    pa = np.array([int(r[3]) for r in body], dtype=np.int64)
    pb = np.array([int(r[4]) if r[4] else -1 for r in body], dtype=np.int64)
    lam = np.array([float(r[5]) if r[5] else math.nan for r in body])
    X = np.array([[float(r[j]) for j in feat_cols] for r in body], dtype=np.float64)
    X = X.reshape(len(body), len(feat_cols))
    if n_classes is None:
        n_classes = max(len(soft_cols), int(labels.max()) + 1 if labels.size else 0)
    soft = None
    if soft_cols:
        soft = np.array([[float(r[j]) for j in soft_cols] for r in body])
    data = Dataset(X, labels, ids, n_classes,
                   {"feature_names": [header[j] for j in feat_cols], "source": str(path)})
    meta = {"method": method} if method else {}
    return AugmentedDataset(data, Provenance(syn, pa, pb, lam), soft, meta)
