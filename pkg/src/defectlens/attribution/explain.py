from __future__ import annotations

from dataclasses import replace

import numpy as np

from .integrated_gradients import IgConfig, integrated_gradients
from .shap import ShapConfig, exact_shapley, kernel_shap


def instance_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(i)]).generate_state(1, np.uint64)[0] >> 1)


def cap_rows(n: int, cap: int | None, seed: int) -> np.ndarray:
    """Indices of the rows to explain: all of them, or a seeded sorted subsample."""
    if cap is None or cap >= n:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=cap, replace=False))


def sample_background(X, size: int, seed: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return X[cap_rows(X.shape[0], size, seed)]


def explain_rows(model, X, method: str, ig: IgConfig | None = None,
                 shap: ShapConfig | None = None, exact: bool = False) -> list:
    """Attribute every row of ``X``; results keep the row order.

    Sampled Kernel SHAP derives a seed per row from ``shap.seed`` and the
    row position, so each row's result does not depend on the others.
    """
    X = np.asarray(X, dtype=np.float64)
    if method == "ig":
        cfg = ig or IgConfig()
        return [integrated_gradients(model, x, cfg) for x in X]
    if method == "shap":
        if shap is None:
            raise ValueError("SHAP needs a ShapConfig with a background")
        predict = model.predict_proba
        if exact:
            return [exact_shapley(predict, x, shap.background) for x in X]
        return [
            kernel_shap(predict, x, replace(shap, seed=instance_seed(shap.seed, i)))
            for i, x in enumerate(X)
        ]
    raise ValueError(f"unknown attribution method {method!r}")
