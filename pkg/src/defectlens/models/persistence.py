"""JSON model artifacts.

Floats are written with ``repr`` precision, so a save/load round trip
reproduces predictions exactly.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from ..data import FeatureSchema, Standardizer
from ..errors import DataError, SchemaMismatch
from .config import TrainConfig
from .forest import ForestModel, Tree
from .logistic import LogisticModel
from .mlp import MlpModel

FORMAT_VERSION = 1


def model_to_dict(model, schema: FeatureSchema, cfg: TrainConfig,
                  standardizer: Standardizer | None = None) -> dict:
    if model.n_features != schema.n_features:
        raise SchemaMismatch("model width does not match schema")
    if isinstance(model, LogisticModel):
        params = {"weights": model.weights.tolist(), "bias": model.bias}
    elif isinstance(model, ForestModel):
        params = {
            "n_features": model.n_features,
            "tree_seeds": [str(s) for s in model.tree_seeds],
            "trees": [t.to_dict() for t in model.trees],
        }
    elif isinstance(model, MlpModel):
        params = {
            "layer_sizes": model.layer_sizes,
            "weights": [W.tolist() for W in model.weights],
            "biases": [b.tolist() for b in model.biases],
            "dropout_rate": model.dropout_rate,
        }
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "schema": {**schema.to_dict(), "fingerprint": schema.fingerprint},
        "train_config": cfg.to_dict(),
        "standardizer": standardizer.to_dict() if standardizer is not None else None,
        "params": params,
    }


def model_from_dict(doc: dict):
    """Returns (model, schema, train_config, standardizer-or-None)."""
    try:
        kind = doc["kind"]
        params = doc["params"]
        schema = FeatureSchema.from_dict(doc["schema"])
        cfg = TrainConfig.from_dict(doc.get("train_config"))
        std = Standardizer.from_dict(doc["standardizer"]) if doc.get("standardizer") else None
        if kind == "logistic":
            model = LogisticModel(np.asarray(params["weights"], dtype=np.float64), float(params["bias"]))
        elif kind == "forest":
            model = ForestModel(
                [Tree.from_dict(t) for t in params["trees"]],
                [int(s) for s in params["tree_seeds"]],
                int(params["n_features"]),
            )
        elif kind == "mlp":
            model = MlpModel(
                [np.asarray(W, dtype=np.float64) for W in params["weights"]],
                [np.asarray(b, dtype=np.float64) for b in params["biases"]],
                float(params.get("dropout_rate", 0.0)),
            )
        else:
            raise DataError(f"unknown model kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model document: {exc}") from exc
    if model.n_features != schema.n_features:
        raise SchemaMismatch("model width does not match its schema")
    return model, schema, cfg, std


def save_model(path, model, schema, cfg, standardizer=None) -> Path:
    path = Path(path)
    text = json.dumps(model_to_dict(model, schema, cfg, standardizer))
    atomic_write_text(path, text)
    return path


def load_model(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"{path}: no such model file") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(doc)


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
