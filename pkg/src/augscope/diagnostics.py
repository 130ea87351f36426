"""Measurements comparing a base model with a model trained on augmented data.

Weight norms and percentage weight change for linear and dense models,
support-vector census for SVMs, and top-K feature sets (classification
embeddings for logistic regression, input gradients for the MLP) with their
overlap against a base model.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .models.linear import LinearModel
from .models.mlp import MlpModel, input_gradients
from .models.svm import SvmModel
from .resampling import as_augmented

ZERO_WEIGHT = 1e-12
PER_CLASS = "per_class_aggregate"
PER_INSTANCE = "per_instance"


def frobenius_norm(weights) -> float:
    w = np.asarray(weights, dtype=np.float64)
    return float(np.sqrt(np.sum(w * w)))


def weight_diff(base, aug) -> tuple:
    """``(mean |aug - base| / |base|, n_excluded)`` over entries with |base| >= 1e-12."""
    base = np.asarray(base, dtype=np.float64)
    aug = np.asarray(aug, dtype=np.float64)
    if base.shape != aug.shape:
        raise ValueError(f"shape mismatch: {base.shape} vs {aug.shape}")
    keep = np.abs(base) >= ZERO_WEIGHT
    excluded = int(keep.size - keep.sum())
    if not keep.any():
        return float("nan"), excluded
    return float(np.mean(np.abs(aug[keep] - base[keep]) / np.abs(base[keep]))), excluded


def weight_diff_pct(base, aug) -> float:
    return weight_diff(base, aug)[0]


@dataclass
class WeightReport:
    frobenius_total: float
    per_class_head_norms: list
    mean_pct_diff_vs_base: Optional[float] = None
    n_excluded: int = 0


def head_weights(model):
    """The weights whose change is measured: all of W for LG, the output layer for the MLP."""
    if isinstance(model, LinearModel):
        return model.weights
    if isinstance(model, MlpModel):
        return model.weights[-1]
    raise TypeError(f"no weight tensor for {type(model).__name__}")


def weight_report(model, base=None) -> WeightReport:
    """Norms of ``model`` and, given ``base``, the mean percentage change of its head.

    For logistic regression the per-class norms split W by sign (negative
    entries push toward class 0, positive toward class 1); for the MLP they
    are the norms of the output-layer columns.
    """
    if isinstance(model, LinearModel):
        w = model.weights
        total = frobenius_norm(w)
        per_class = [frobenius_norm(w[w < 0]), frobenius_norm(w[w > 0])]
    elif isinstance(model, MlpModel):
        total = math.sqrt(sum(frobenius_norm(W) ** 2 for W in model.weights))
        per_class = [frobenius_norm(col) for col in model.weights[-1].T]
    else:
        raise TypeError(f"no weights to report for {type(model).__name__}")
    report = WeightReport(total, per_class)
    if base is not None:
        report.mean_pct_diff_vs_base, report.n_excluded = weight_diff(head_weights(base),
                                                                      head_weights(model))
    return report


@dataclass
class SvCensus:
    sv_count_per_class: list
    n_support: int
    sv_multiple_vs_base: Optional[float]
    class_ratio_maj_min: Optional[float]
    dual_sum_per_class: list
    new_sv_ratio: Optional[float]
    synthetic_sv_ratio: float
    majority_class: int


def sv_census(model: SvmModel, train, base_model: Optional[SvmModel] = None) -> SvCensus:
    """Count support vectors and trace them to natural or synthetic training rows.

    The majority class is the one with most original (non-copied) rows in
    ``train``. Everything is matched by instance id, never by feature values.
    """
    aug = as_augmented(train)
    ids = aug.data.instance_ids
    pos = {int(i): r for r, i in enumerate(ids)}
    try:
        rows = np.array([pos[int(i)] for i in model.support_indices], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"support vector id {exc.args[0]} is not in the training data") from None

    N = aug.data.n_classes
    counts = np.bincount(model.support_labels, minlength=N)
    orig = aug.data.labels[aug.is_original]
    majority = int(np.argmax(np.bincount(orig, minlength=N))) if orig.size else 0
    minority = 1 - majority if N == 2 else int(np.argmin(np.bincount(orig, minlength=N)))
    ratio = float(counts[majority] / counts[minority]) if counts[minority] else None
    dual_sums = [float(model.dual_coefs[model.support_labels == c].sum()) for c in range(N)]

    synthetic = aug.provenance.synthetic[rows]
    syn_ratio = float(synthetic.mean()) if rows.size else 0.0
    multiple = None
    new_ratio = None
    if base_model is not None:
        multiple = model.n_support / base_model.n_support if base_model.n_support else None
        natural_ids = model.support_indices[~synthetic]
        if natural_ids.size:
            new_ratio = float(np.mean(~np.isin(natural_ids, base_model.support_indices)))
    return SvCensus([int(c) for c in counts], int(model.n_support), multiple, ratio, dual_sums,
                    new_ratio, syn_ratio, majority)


@dataclass
class TopKReport:
    """Top-K feature indices per class (aggregate mode) or per test instance.

    ``keys`` names the sets: class ids, or row positions in the evaluated
    matrix. ``magnitudes`` holds the per-feature scores used for ranking in
    aggregate mode (one row per key).
    """

    mode: str
    K: int
    keys: list
    top_sets: list
    magnitudes: Optional[np.ndarray] = None
    overlap_I_M: Optional[float] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["top_sets"] = [list(map(int, s)) for s in self.top_sets]
        d["magnitudes"] = None if self.magnitudes is None else np.asarray(self.magnitudes).tolist()
        return d


def _top_indices(scores, K):
    # descending, ties to the lower index
    return np.argsort(-np.asarray(scores), kind="stable")[:K]


def _resolve_k(k_arg, d):
    """A float in (0, 1) is a fraction of ``d`` rounded up; anything else a count."""
    if isinstance(k_arg, float) and 0 < k_arg < 1:
        K = math.ceil(k_arg * d)
    elif float(k_arg).is_integer():
        K = int(k_arg)
    else:
        raise ValueError(f"invalid K {k_arg!r}")
    if K < 1 or K > d:
        raise ValueError(f"K={K} must be in 1..{d}")
    return K


def classification_embeddings(model: LinearModel, X) -> np.ndarray:
    """Elementwise feature * weight products, before they are summed into the score."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return X * model.weights[None, :]


def topk_ce(model: LinearModel, X, labels, K: int = 10) -> TopKReport:
    """Per class, the K features with largest mean |feature * weight|."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    labels = np.asarray(labels)
    K = _resolve_k(K, X.shape[1])
    CE = np.abs(classification_embeddings(model, X))
    keys, sets, mags = [], [], []
    for c in np.unique(labels):
        mu = CE[labels == c].mean(axis=0)
        keys.append(int(c))
        sets.append(_top_indices(mu, K))
        mags.append(mu)
    return TopKReport(PER_CLASS, K, keys, sets, np.array(mags))


def topk_input_grad(model: MlpModel, X, k_arg=10, labels=None,
                    mode: str = PER_CLASS) -> TopKReport:
    """Top-K input features by |gradient of the predicted logit|.

    ``k_arg`` is a count or a fraction of the feature count (rounded up).
    In aggregate mode each instance's top-K set votes for its features and
    the K most frequent features per class are kept; ``labels`` default to
    the model's own predictions.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    d = X.shape[1]
    K = _resolve_k(k_arg, d)
    G = np.abs(input_gradients(model, X))
    per_inst = np.argsort(-G, axis=1, kind="stable")[:, :K]
    if mode == PER_INSTANCE:
        return TopKReport(PER_INSTANCE, K, list(range(X.shape[0])), list(per_inst))
    if mode != PER_CLASS:
        raise ValueError(f"unknown mode {mode!r}")
    labels = model.predict(X) if labels is None else np.asarray(labels)
    keys, sets, mags = [], [], []
    for c in np.unique(labels):
        member = labels == c
        freq = np.bincount(per_inst[member].ravel(), minlength=d)
        keys.append(int(c))
        sets.append(_top_indices(freq, K))
        mags.append(G[member].mean(axis=0))
    return TopKReport(PER_CLASS, K, keys, sets, np.array(mags))


def topk_overlap(base: TopKReport, other: TopKReport) -> float:
    """Sum of per-key intersection sizes divided by (number of keys * K)."""
    if base.mode != other.mode or base.K != other.K:
        raise ValueError("reports differ in mode or K")
    if list(base.keys) != list(other.keys):
        raise ValueError("reports cover different classes or instances")
    if not base.keys:
        raise ValueError("empty reports")
    shared = sum(np.intersect1d(a, b).size for a, b in zip(base.top_sets, other.top_sets))
    return shared / (len(base.keys) * base.K)
