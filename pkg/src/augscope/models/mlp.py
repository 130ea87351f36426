"""Dense ReLU network d -> 100 -> 50 -> ceil(d/2) -> N trained with mini-batch SGD.

The last hidden layer is the latent space used for latent oversampling;
``retrain_head`` refits only the final classification layer on top of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..resampling import AugmentedDataset, ClassWeights, as_augmented
from .config import HEAD_DEFAULTS, MLP_DEFAULTS, TrainConfig
from .linear import _check_dims

HIDDEN = (100, 50)


def architecture(d: int, n_classes: int = 2) -> tuple:
    return (d,) + HIDDEN + (math.ceil(d / 2), n_classes)


@dataclass(frozen=True, eq=False)
class MlpModel:
    """Layer ``k`` maps ``a @ weights[k] + biases[k]``; weights are (fan_in, fan_out)."""

    weights: tuple
    biases: tuple
    config: dict = field(default_factory=dict)
    loss_history: tuple = ()

    kind = "mlp"

    def __post_init__(self):
        for k in range(1, len(self.weights)):
            if self.weights[k].shape[0] != self.weights[k - 1].shape[1]:
                raise ValueError(f"layer {k} input width does not match layer {k - 1} output")
        for W, b in zip(self.weights, self.biases):
            if b.shape != (W.shape[1],):
                raise ValueError("bias width must equal layer output width")

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def latent_width(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def shapes(self) -> list:
        return [W.shape for W in self.weights]

    def forward(self, X) -> list:
        """Activations per layer: ``[X, h1, h2, h3, logits]``."""
        acts = [_check_dims(X, self.n_features)]
        last = len(self.weights) - 1
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ W + b
            acts.append(z if k == last else np.maximum(z, 0.0))
        return acts

    def decision_values(self, X) -> np.ndarray:
        return self.forward(X)[-1]

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.decision_values(X), axis=1).astype(np.int64)


def init_params(sizes, rng) -> tuple:
    """Uniform fan-in initialisation: He bounds for ReLU layers, LeCun for the output."""
    Ws, bs = [], []
    for k in range(len(sizes) - 1):
        fan_in = sizes[k]
        gain = 3.0 if k == len(sizes) - 2 else 6.0
        bound = math.sqrt(gain / fan_in)
        Ws.append(rng.uniform(-bound, bound, size=(sizes[k], sizes[k + 1])))
        bs.append(np.zeros(sizes[k + 1]))
    return Ws, bs


def _targets(aug: AugmentedDataset, n_classes: int) -> np.ndarray:
    if aug.soft_labels is not None:
        return aug.soft_labels
    return np.eye(n_classes)[aug.data.labels]


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _log_softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def _freeze(arrays):
    out = []
    for a in arrays:
        a = np.array(a, dtype=np.float64)
        a.setflags(write=False)
        out.append(a)
    return tuple(out)


def _sgd(Ws, bs, X, T, s, cfg, trainable, rng):
    """Mini-batch SGD on weighted soft-target cross-entropy.

    Only layers listed in ``trainable`` are updated; frozen layers'
    activations are computed once. Returns per-epoch mean batch loss.
    """
    n = X.shape[0]
    first = min(trainable)
    H = X
    for k in range(first):
        H = np.maximum(H @ Ws[k] + bs[k], 0.0)
    last = len(Ws) - 1
    history = []
    bsz = min(cfg.batch_size, n)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, bsz):
            idx = order[start:start + bsz]
            acts = [H[idx]]
            for k in range(first, len(Ws)):
                z = acts[-1] @ Ws[k] + bs[k]
                acts.append(z if k == last else np.maximum(z, 0.0))
            logits = acts[-1]
            sw = s[idx]
            m = idx.size
            total += float(-(sw * (T[idx] * _log_softmax(logits)).sum(axis=1)).sum() / m) * m
            delta = sw[:, None] * (_softmax(logits) - T[idx]) / m
            for k in range(last, first - 1, -1):
                a_in = acts[k - first]
                gW = a_in.T @ delta + cfg.l2 * Ws[k]
                gb = delta.sum(axis=0)
                if k > first:
                    delta = (delta @ Ws[k].T) * (a_in > 0)
                if k in trainable:
                    Ws[k] = Ws[k] - cfg.lr * gW
                    bs[k] = bs[k] - cfg.lr * gb
        history.append(total / n)
    return history


def train_mlp(train, cfg: Optional[TrainConfig] = None,
              weights: Optional[ClassWeights] = None) -> MlpModel:
    aug = as_augmented(train)
    cfg = (cfg or TrainConfig()).resolved(MLP_DEFAULTS)
    rng = np.random.default_rng(cfg.seed)
    N = aug.data.n_classes
    sizes = architecture(aug.data.feature_count, N)
    Ws, bs = init_params(sizes, rng)
    X = aug.data.features
    s = weights.per_sample(aug.data.labels) if weights is not None else np.ones(X.shape[0])
    history = _sgd(Ws, bs, X, _targets(aug, N), s, cfg, set(range(len(Ws))), rng)
    return MlpModel(_freeze(Ws), _freeze(bs), cfg.to_dict(), tuple(history))


def latent_encode(model: MlpModel, X) -> np.ndarray:
    """Post-ReLU activations of the last hidden layer (the classifier's input)."""
    return model.forward(X)[-2]


def retrain_head(model: MlpModel, latent_data, cfg: Optional[TrainConfig] = None,
                 weights: Optional[ClassWeights] = None) -> MlpModel:
    """Refit only the final layer on (augmented) latent rows, starting from its current values.

    Encoder arrays are shared with ``model`` (they are read-only), so the
    encoder of the result is bitwise identical to the input's.
    """
    aug = as_augmented(latent_data)
    if aug.data.feature_count != model.latent_width:
        raise ValueError(f"latent width {aug.data.feature_count} != model latent width "
                         f"{model.latent_width}")
    if aug.data.n_classes != model.n_classes:
        raise ValueError("class count does not match the model head")
    cfg = (cfg or TrainConfig()).resolved(HEAD_DEFAULTS)
    rng = np.random.default_rng(cfg.seed)
    head = len(model.weights) - 1
    Ws = [model.weights[head].copy()]
    bs = [model.biases[head].copy()]
    X = aug.data.features
    s = weights.per_sample(aug.data.labels) if weights is not None else np.ones(X.shape[0])
    history = _sgd(Ws, bs, X, _targets(aug, model.n_classes), s, cfg, {0}, rng)
    return MlpModel(
        model.weights[:head] + _freeze(Ws),
        model.biases[:head] + _freeze(bs),
        dict(model.config, head_retrain=cfg.to_dict()),
        tuple(history),
    )


def input_gradients(model: MlpModel, X) -> np.ndarray:
    """d(logit of the predicted class)/d(input) for each row of ``X``.

    A 1-D ``X`` returns a single gradient vector.
    """
    single = np.ndim(X) == 1
    acts = model.forward(X)
    pred = np.argmax(acts[-1], axis=1)
    delta = model.weights[-1].T[pred]
    for k in range(len(model.weights) - 2, -1, -1):
        delta = (delta * (acts[k + 1] > 0)) @ model.weights[k].T
    return delta[0] if single else delta
