"""JSON snapshots of trained models: layer shapes plus row-major weight arrays."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .linear import LinearModel
from .mlp import MlpModel
from .svm import SvmModel

FORMAT_VERSION = 1


def _layer(W, b):
    W = np.atleast_2d(W)
    return {"shape": list(W.shape), "weights": W.ravel().tolist(), "bias": np.ravel(b).tolist()}


def _unlayer(d):
    W = np.array(d["weights"], dtype=np.float64).reshape(d["shape"])
    b = np.array(d["bias"], dtype=np.float64)
    return W, b


def model_to_dict(model) -> dict:
    if isinstance(model, LinearModel):
        return {
            "kind": "logreg",
            "version": FORMAT_VERSION,
            "layers": [_layer(model.weights[None, :], [model.bias])],
            "l2": model.l2,
            "converged": model.converged,
            "n_epochs": model.n_epochs,
            "config": model.config,
        }
    if isinstance(model, MlpModel):
        return {
            "kind": "mlp",
            "version": FORMAT_VERSION,
            "layers": [_layer(W, b) for W, b in zip(model.weights, model.biases)],
            "config": model.config,
            "loss_history": list(model.loss_history),
        }
    if isinstance(model, SvmModel):
        return {
            "kind": "svm",
            "version": FORMAT_VERSION,
            "layers": [_layer(model.support_vectors, model.dual_coefs)],
            "support_indices": model.support_indices.tolist(),
            "support_labels": model.support_labels.tolist(),
            "bias": model.bias,
            "kernel": model.kernel,
            "gamma": model.gamma,
            "C": model.C,
            "class_C": list(model.class_C),
            "converged": model.converged,
            "n_iter": model.n_iter,
        }
    raise TypeError(f"cannot serialise {type(model).__name__}")


def model_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "logreg":
        W, b = _unlayer(d["layers"][0])
        w = W[0].copy()
        w.setflags(write=False)
        return LinearModel(w, float(b[0]), d["l2"], d.get("converged", True),
                           d.get("n_epochs", 0), d.get("config", {}))
    if kind == "mlp":
        Ws, bs = zip(*(_unlayer(layer) for layer in d["layers"]))
        for a in Ws + bs:
            a.setflags(write=False)
        return MlpModel(tuple(Ws), tuple(bs), d.get("config", {}),
                        tuple(d.get("loss_history", ())))
    if kind == "svm":
        shape = d["layers"][0]["shape"]
        vecs, coefs = _unlayer(d["layers"][0])
        vecs = vecs.reshape(shape)
        return SvmModel(
            support_indices=np.array(d["support_indices"], dtype=np.int64),
            dual_coefs=coefs,
            bias=float(d["bias"]),
            kernel=d["kernel"],
            gamma=float(d["gamma"]),
            C=float(d["C"]),
            class_C=tuple(d["class_C"]),
            support_vectors=vecs,
            support_labels=np.array(d["support_labels"], dtype=np.int64),
            converged=d.get("converged", True),
            n_iter=d.get("n_iter", 0),
        )
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path):
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
