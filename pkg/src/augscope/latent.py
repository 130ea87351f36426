"""Oversampling in a trained network's latent space.

Both methods work on a :class:`Dataset` whose features are penultimate-layer
activations (see :func:`augscope.models.latent_encode`); the result feeds
:func:`augscope.models.retrain_head`.
"""

from __future__ import annotations

import numpy as np

from .dataset import Dataset
from .models.mlp import MlpModel, latent_encode
from .resampling import AugmentedDataset, Provenance, _check_classes, _finish, _knn, smote

EOS_MAX_LAMBDA = 0.5


def to_latent(model: MlpModel, data: Dataset) -> Dataset:
    Z = latent_encode(model, data.features)
    meta = dict(data.metadata, space="latent", feature_names=[f"z{j}" for j in range(Z.shape[1])])
    return Dataset(Z, data.labels, data.instance_ids, data.n_classes, meta)


def dsm(latent: Dataset, k: int = 5, seed=0) -> AugmentedDataset:
    """Same-class SMOTE among latent rows."""
    aug = smote(latent, k, seed)
    return AugmentedDataset(aug.data, aug.provenance, None, dict(aug.metadata, method="dsm"))


def eos(latent: Dataset, k: int = 5, seed=0) -> AugmentedDataset:
    """Interpolate from minority rows toward their nearest other-class rows.

    For a uniformly drawn row x_i of a class below the majority count, one of
    its k nearest rows from any other class (x_adv) is picked uniformly and
    ``x_i + lam * (x_adv - x_i)`` is emitted with ``lam ~ U(0, 0.5)``, so the
    new row stays closer to x_i and keeps x_i's label.
    """
    _check_classes(latent)
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    counts = latent.class_counts()
    target = counts.max()
    X = latent.features
    rows, provs, labels = [], [], []
    for c in range(latent.n_classes):
        deficit = target - counts[c]
        if deficit == 0:
            continue
        own = np.flatnonzero(latent.labels == c)
        other = np.flatnonzero(latent.labels != c)
        if other.size == 0:
            raise ValueError("EOS needs at least one row from another class")
        nn = other[_knn(X[other], X[own], min(k, other.size))]
        anchors = rng.integers(0, own.size, deficit)
        adv = nn[anchors, rng.integers(0, nn.shape[1], deficit)]
        lam = rng.uniform(0.0, EOS_MAX_LAMBDA, deficit)
        src = own[anchors]
        rows.append(X[src] + lam[:, None] * (X[adv] - X[src]))
        provs.append(Provenance(np.ones(deficit, bool), latent.instance_ids[src],
                                latent.instance_ids[adv], lam))
        labels.append(np.full(deficit, c))
    return _finish(latent, rows, provs, labels, "eos", {"k": k, "max_lambda": EOS_MAX_LAMBDA})
