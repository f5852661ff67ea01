from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data import ClassWeights
from ..errors import NonFiniteLoss
from ._common import as_rows, check_xy, probability, sigmoid, weighted_bce_from_logits
from .config import TrainConfig, default_config

GRAD_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray
    bias: float
    loss_history: list = field(default_factory=list, repr=False)

    kind = "logistic"

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    def decision_function(self, X):
        X2, single = as_rows(X, self.n_features)
        z = X2 @ self.weights + self.bias
        return z[0] if single else z

    def predict_proba(self, X):
        return probability(self.decision_function(X))

    def input_gradient(self, x, output: str = "probability"):
        X2, single = as_rows(x, self.n_features)
        z = X2 @ self.weights + self.bias
        if output == "logit":
            g = np.tile(self.weights, (X2.shape[0], 1))
        else:
            s = sigmoid(z)
            g = (s * (1.0 - s))[:, None] * self.weights
        return g[0] if single else g


def _objective(X, y, sw, w, b, l2):
    z = X @ w + b
    return weighted_bce_from_logits(z, y, sw) / X.shape[0] + 0.5 * l2 * float(w @ w)


def fit_logistic(X, y, class_weights: ClassWeights, cfg: TrainConfig | None = None) -> LogisticModel:
    """Full-batch gradient descent on class-weighted cross-entropy plus L2.

    Starts at zero, so the result does not depend on the seed. The step is
    halved whenever it would raise the objective, which keeps the loss
    sequence non-increasing.
    """
    cfg = cfg or default_config("logistic")
    X, y = check_xy(X, y)
    n, p = X.shape
    sw = class_weights.per_sample(y)
    l2 = cfg.l2_penalty
    w = np.zeros(p)
    b = 0.0
    step = cfg.learning_rate
    loss = _objective(X, y, sw, w, b, l2)
    history = [loss]
    for _ in range(cfg.max_epochs):
        resid = sw * (sigmoid(X @ w + b) - y) / n
        gw = X.T @ resid + l2 * w
        gb = float(resid.sum())
        gmax = max(float(np.max(np.abs(gw))), abs(gb))
        if gmax <= GRAD_TOL:
            break
        sq = float(gw @ gw) + gb * gb
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            new_loss = _objective(X, y, sw, w_new, b_new, l2)
            if not np.isfinite(new_loss):
                step *= 0.5
            elif new_loss <= loss - 0.5 * step * sq * 1e-4:
                break
            else:
                step *= 0.5
            if step < 1e-20:
                raise NonFiniteLoss("logistic descent failed to decrease the loss")
        w, b, loss = w_new, b_new, new_loss
        history.append(loss)
        step = min(2.0 * step, cfg.learning_rate)
    if not np.all(np.isfinite(w)) or not np.isfinite(b):
        raise NonFiniteLoss("logistic weights diverged")
    return LogisticModel(w, float(b), history)
