"""Balanced accuracy and macro F1 from a confusion matrix."""

from __future__ import annotations

import numpy as np


def confusion_matrix(truth, pred, n_classes=None) -> np.ndarray:
    """Counts with rows = true class, columns = predicted class."""
    truth = np.asarray(truth, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if truth.shape != pred.shape:
        raise ValueError(f"length mismatch: {truth.shape[0]} truths vs {pred.shape[0]} predictions")
    if n_classes is None:
        n_classes = int(max(truth.max(initial=-1), pred.max(initial=-1))) + 1
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (truth, pred), 1)
    return cm


def balanced_accuracy(truth, pred, n_classes=None) -> float:
    """Mean per-class recall.

    With ``n_classes`` given, every class must occur in ``truth``; otherwise
    the classes present in ``truth`` are averaged.
    """
    truth = np.asarray(truth, dtype=np.int64)
    cm = confusion_matrix(truth, pred, n_classes)
    support = cm.sum(axis=1)
    if n_classes is not None:
        if np.any(support == 0):
            raise ValueError("empty class in truth")
        present = np.arange(n_classes)
    else:
        present = np.unique(truth)
    recalls = np.diag(cm)[present] / support[present]
    return float(recalls.mean())


def macro_f1(truth, pred) -> float:
    """Unweighted mean of per-class F1 over classes seen in ``truth`` or ``pred``.

    A class whose precision and recall are both zero (or undefined) scores 0.
    """
    truth = np.asarray(truth, dtype=np.int64)
    cm = confusion_matrix(truth, pred)
    classes = np.union1d(truth, np.asarray(pred, dtype=np.int64))
    tp = np.diag(cm).astype(float)
    pred_tot = cm.sum(axis=0).astype(float)
    true_tot = cm.sum(axis=1).astype(float)
    scores = []
    for c in classes:
        p = tp[c] / pred_tot[c] if pred_tot[c] > 0 else 0.0
        r = tp[c] / true_tot[c] if true_tot[c] > 0 else 0.0
        scores.append(2 * p * r / (p + r) if p + r > 0 else 0.0)
    return float(np.mean(scores))
