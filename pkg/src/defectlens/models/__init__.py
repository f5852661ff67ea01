"""Classifier families: logistic regression, random forest, dense network."""

from ..errors import NonDifferentiableModel
from .config import TrainConfig, default_config
from .forest import ForestModel, fit_random_forest
from .logistic import LogisticModel, fit_logistic
from .mlp import MlpModel, fit_mlp, init_mlp
from .persistence import load_model, save_model

MODEL_KINDS = ("logistic", "forest", "mlp")

_FITTERS = {"logistic": fit_logistic, "forest": fit_random_forest, "mlp": fit_mlp}


def fit_model(kind, X, y, class_weights, cfg=None):
    try:
        fitter = _FITTERS[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}") from None
    return fitter(X, y, class_weights, cfg or default_config(kind))


def predict_proba(model, X):
    return model.predict_proba(X)


def input_gradient(model, x, output="probability"):
    if not hasattr(model, "input_gradient"):
        raise NonDifferentiableModel(f"{type(model).__name__} has no input gradient")
    return model.input_gradient(x, output=output)


__all__ = [
    "MODEL_KINDS", "TrainConfig", "default_config", "ForestModel", "LogisticModel",
    "MlpModel", "fit_logistic", "fit_random_forest", "fit_mlp", "init_mlp",
    "fit_model", "predict_proba", "input_gradient", "load_model", "save_model",
]
