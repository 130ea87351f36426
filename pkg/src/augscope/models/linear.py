"""Binary L2-regularised logistic regression fit by full-batch gradient descent."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..resampling import AugmentedDataset, ClassWeights, as_augmented
from .config import LOGREG_DEFAULTS, TrainConfig


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Score ``W.x + bias``; negative scores mean class 0, positive class 1."""

    weights: np.ndarray
    bias: float
    l2: float
    converged: bool = True
    n_epochs: int = 0
    config: dict = field(default_factory=dict)

    kind = "logreg"

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def decision_values(self, X) -> np.ndarray:
        X = _check_dims(X, self.n_features)
        return X @ self.weights + self.bias

    def predict(self, X) -> np.ndarray:
        return (self.decision_values(X) > 0).astype(np.int64)


def _check_dims(X, d):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != d:
        raise ValueError(f"dimension mismatch: model expects {d} features, got {X.shape[1]}")
    return X


def binary_targets(aug: AugmentedDataset) -> np.ndarray:
    """Probability of class 1 per row; soft labels when present."""
    if aug.data.n_classes != 2:
        raise ValueError(f"binary labels required, got {aug.data.n_classes} classes")
    if aug.soft_labels is not None:
        return aug.soft_labels[:, 1].copy()
    return aug.data.labels.astype(np.float64)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logreg_objective(w, b, X, t, s, l2):
    """Weighted mean cross-entropy plus (l2/2)||w||^2, and its gradient."""
    z = X @ w + b
    # log(1 + e^z) - t z, computed stably
    nll = np.logaddexp(0.0, z) - t * z
    n = X.shape[0]
    loss = float(s @ nll / n + 0.5 * l2 * w @ w)
    r = s * (_sigmoid(z) - t) / n
    return loss, X.T @ r + l2 * w, float(r.sum())


def lipschitz_step(X, s, l2) -> float:
    """1/L for the objective above; L bounds the Hessian's largest eigenvalue."""
    Xa = np.hstack([X, np.ones((X.shape[0], 1))])
    sigma = np.linalg.norm(Xa, 2)
    L = 0.25 * float(s.max()) * sigma * sigma / X.shape[0] + l2
    return 1.0 / L


def train_logreg(train, weights: Optional[ClassWeights] = None,
                 cfg: Optional[TrainConfig] = None) -> LinearModel:
    aug = as_augmented(train)
    cfg = (cfg or TrainConfig()).resolved(LOGREG_DEFAULTS)
    X = aug.data.features
    t = binary_targets(aug)
    s = weights.per_sample(aug.data.labels) if weights is not None else np.ones(X.shape[0])
    lr = cfg.lr if cfg.lr is not None else lipschitz_step(X, s, cfg.l2)

    w = np.zeros(X.shape[1])
    b = 0.0
    converged = False
    epoch = 0
    for epoch in range(1, cfg.epochs + 1):
        _, gw, gb = logreg_objective(w, b, X, t, s, cfg.l2)
        if np.sqrt(gw @ gw + gb * gb) < cfg.tol:
            converged = True
            epoch -= 1
            break
        w = w - lr * gw
        b = b - lr * gb
    w.setflags(write=False)
    return LinearModel(w, float(b), cfg.l2, converged, epoch,
                       dict(cfg.to_dict(), lr_used=lr))
