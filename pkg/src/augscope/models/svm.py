"""Binary soft-margin SVM trained in the dual, keeping support-vector identities."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import core
from ..resampling import ClassWeights, as_augmented
from .linear import _check_dims

log = logging.getLogger(__name__)

SV_THRESHOLD = 1e-8
KKT_TOL = 1e-3
# Gram matrices above this many rows are not materialised
GRAM_MAX_ROWS = 6000


@dataclass(frozen=True, eq=False)
class SvmModel:
    """Support vectors with signed dual coefficients ``alpha_i * y_i``.

    ``support_indices`` are training-set instance ids; ``support_labels`` are
    the 0/1 class labels of the support vectors (class 1 has y = +1).
    """

    support_indices: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    kernel: str
    gamma: float
    C: float
    class_C: tuple
    support_vectors: np.ndarray
    support_labels: np.ndarray
    converged: bool = True
    n_iter: int = 0

    kind = "svm"

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    @property
    def n_support(self) -> int:
        return self.support_indices.size

    def decision_values(self, X) -> np.ndarray:
        X = _check_dims(X, self.n_features)
        return kernel_matrix(X, self.support_vectors, self.kernel, self.gamma) @ self.dual_coefs + self.bias

    def predict(self, X) -> np.ndarray:
        return (self.decision_values(X) > 0).astype(np.int64)


def default_gamma(X) -> float:
    """1 / (d * mean per-column variance)."""
    X = np.asarray(X, dtype=np.float64)
    var = float(X.var(axis=0).mean())
    return 1.0 / (X.shape[1] * var) if var > 0 else 1.0


def kernel_matrix(A, B, kernel: str, gamma: float) -> np.ndarray:
    dots = A @ B.T
    if kernel == "linear":
        return dots
    if kernel == "rbf":
        sq = np.einsum("ij,ij->i", A, A)[:, None] + np.einsum("ij,ij->i", B, B)[None, :] - 2.0 * dots
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ValueError(f"unknown kernel {kernel!r}")


def train_svm(train, C: float = 1.0, kernel: str = "rbf", gamma: Optional[float] = None,
              weights: Optional[ClassWeights] = None, seed: int = 0, tol: float = KKT_TOL,
              max_iter: Optional[int] = None) -> SvmModel:
    """Solve the dual with SMO to KKT tolerance ``tol``.

    Class weights scale the box constraint per class (C_c = C * w_c). The
    solver is deterministic, so ``seed`` only exists for a uniform training
    signature. Non-convergence within ``max_iter`` is logged and flagged on
    the returned model rather than raised.
    """
    aug = as_augmented(train)
    data = aug.data
    if data.n_classes != 2:
        raise ValueError(f"binary labels required, got {data.n_classes} classes")
    if C <= 0:
        raise ValueError("C must be positive")
    if kernel not in ("linear", "rbf"):
        raise ValueError(f"unknown kernel {kernel!r}")
    X = np.ascontiguousarray(data.features)
    n = X.shape[0]
    y = np.where(data.labels == 1, 1.0, -1.0)
    cw = weights.weights if weights is not None else (1.0, 1.0)
    class_C = (C * cw[0], C * cw[1])
    Cvec = np.where(data.labels == 1, class_C[1], class_C[0]).astype(np.float64)
    if gamma is None:
        gamma = default_gamma(X) if kernel == "rbf" else 0.0
    if max_iter is None:
        max_iter = max(1_000_000, 100 * n)

    K = kernel_matrix(X, X, kernel, gamma) if n <= GRAM_MAX_ROWS else None
    code = core.LINEAR if kernel == "linear" else core.RBF
    alpha, rho, n_iter, converged = core.smo_solve(X, y, Cvec, code, float(gamma), K,
                                                   float(tol), int(max_iter))
    if not converged:
        log.warning("SMO stopped after %d iterations without reaching tolerance %g", n_iter, tol)

    sv = np.flatnonzero(np.abs(alpha) > SV_THRESHOLD)
    coefs = alpha[sv] * y[sv]
    vecs = X[sv].copy()
    for arr in (coefs, vecs):
        arr.setflags(write=False)
    return SvmModel(
        support_indices=data.instance_ids[sv].copy(),
        dual_coefs=coefs,
        bias=-float(rho),
        kernel=kernel,
        gamma=float(gamma),
        C=float(C),
        class_C=class_C,
        support_vectors=vecs,
        support_labels=data.labels[sv].copy(),
        converged=bool(converged),
        n_iter=int(n_iter),
    )
