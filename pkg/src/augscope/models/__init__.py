"""Classifiers with inspectable internals."""

from .config import TrainConfig
from .linear import LinearModel, train_logreg
from .mlp import MlpModel, input_gradients, latent_encode, retrain_head, train_mlp
from .serialize import load_model, model_from_dict, model_to_dict, save_model
from .svm import SvmModel, default_gamma, kernel_matrix, train_svm

MODEL_KINDS = ("logreg", "svm", "mlp")


def predict(model, X):
    """Hard labels; sign for the binary models (0 on ties), argmax for the MLP."""
    return model.predict(X)


def decision_values(model, X):
    return model.decision_values(X)


__all__ = [
    "TrainConfig", "LinearModel", "SvmModel", "MlpModel", "MODEL_KINDS",
    "train_logreg", "train_svm", "train_mlp", "latent_encode", "retrain_head",
    "input_gradients", "predict", "decision_values", "default_gamma", "kernel_matrix",
    "model_to_dict", "model_from_dict", "save_model", "load_model",
]
