from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data import ClassWeights
from ..errors import DegenerateSplit, NonFiniteLoss
from ..metrics import auc
from ._common import as_rows, check_xy, probability, sigmoid, weighted_bce_from_logits
from .config import TrainConfig, default_config

HIDDEN_SIZES = (64, 32, 20, 10)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True, eq=False)
class MlpModel:
    """Dense ReLU network with a single sigmoid output unit.

    ``weights[k]`` has shape (fan_in, fan_out); dropout is only used while
    training, so inference is a deterministic forward pass.
    """

    weights: list
    biases: list
    dropout_rate: float = 0.0
    history: dict = field(default_factory=dict, repr=False)

    kind = "mlp"

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[0]

    @property
    def layer_sizes(self) -> list[int]:
        return [self.n_features] + [W.shape[1] for W in self.weights]

    def _forward(self, X):
        pre = []
        h = X
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            z = h @ W + b
            pre.append(z)
            h = np.maximum(z, 0.0)
        logit = (h @ self.weights[-1] + self.biases[-1])[:, 0]
        return logit, pre

    def decision_function(self, X):
        X2, single = as_rows(X, self.n_features)
        logit, _ = self._forward(X2)
        return logit[0] if single else logit

    def predict_proba(self, X):
        return probability(self.decision_function(X))

    def hidden_preactivations(self, X) -> list:
        X2, _ = as_rows(X, self.n_features)
        return self._forward(X2)[1]

    def input_gradient(self, x, output: str = "probability"):
        """Exact d(output)/dx by reverse mode; ReLU'(0) is taken as 0."""
        X2, single = as_rows(x, self.n_features)
        logit, pre = self._forward(X2)
        if output == "logit":
            g = np.ones((X2.shape[0], 1))
        else:
            s = sigmoid(logit)
            g = (s * (1.0 - s))[:, None]
        g = g @ self.weights[-1].T
        for W, z in zip(reversed(self.weights[:-1]), reversed(pre)):
            g = (g * (z > 0.0)) @ W.T
        return g[0] if single else g


def init_mlp(p: int, seed: int, hidden=HIDDEN_SIZES, dropout_rate: float = 0.0,
             rng: np.random.Generator | None = None) -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    sizes = [p, *hidden, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases, dropout_rate)


def _validation_split(y, fraction, rng):
    """Stratified holdout indices; raises DegenerateSplit if a class would vanish."""
    val = []
    for cls in (0, 1):
        members = np.flatnonzero(y == cls)
        k = int(np.floor(len(members) * fraction + 0.5))
        if k == 0 or k == len(members):
            raise DegenerateSplit("validation split would lose a class")
        val.append(rng.permutation(members)[:k])
    val = np.sort(np.concatenate(val))
    train = np.setdiff1d(np.arange(y.shape[0]), val)
    return train, val


class _Adam:
    def __init__(self, params, lr):
        self.lr = lr
        self.m = [np.zeros_like(a) for a in params]
        self.v = [np.zeros_like(a) for a in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - ADAM_BETA1 ** self.t
        c2 = 1.0 - ADAM_BETA2 ** self.t
        for a, g, m, v in zip(params, grads, self.m, self.v):
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            a -= self.lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


def _train_step(weights, biases, Xb, yb, swb, rate, l2, rng):
    """Forward with inverted dropout, backward; returns (loss_sum, grads)."""
    n_hidden = len(weights) - 1
    acts = [Xb]
    pre = []
    masks = []
    h = Xb
    for k in range(n_hidden):
        z = h @ weights[k] + biases[k]
        pre.append(z)
        h = np.maximum(z, 0.0)
        if rate > 0.0:
            keep = (rng.random(h.shape) >= rate) / (1.0 - rate)
            h = h * keep
            masks.append(keep)
        else:
            masks.append(None)
        acts.append(h)
    logit = (h @ weights[-1] + biases[-1])[:, 0]
    loss = weighted_bce_from_logits(logit, yb, swb)

    B = Xb.shape[0]
    g = ((sigmoid(logit) - yb) * swb / B)[:, None]
    gW = [None] * len(weights)
    gb = [None] * len(weights)
    gW[-1] = acts[-1].T @ g + l2 * weights[-1]
    gb[-1] = g.sum(axis=0)
    g = g @ weights[-1].T
    for k in range(n_hidden - 1, -1, -1):
        if masks[k] is not None:
            g = g * masks[k]
        g = g * (pre[k] > 0.0)
        gW[k] = acts[k].T @ g + l2 * weights[k]
        gb[k] = g.sum(axis=0)
        if k:
            g = g @ weights[k].T
    return loss / B, gW + gb


def fit_mlp(X, y, class_weights: ClassWeights, cfg: TrainConfig | None = None) -> MlpModel:
    """Adam on class-weighted cross-entropy with inverted dropout.

    With ``validation_fraction > 0`` a stratified holdout drives early
    stopping on AUC and the best epoch's weights are restored. Every random
    draw comes from one generator seeded with ``cfg.seed``.
    """
    cfg = cfg or default_config("mlp")
    X, y = check_xy(X, y)
    n, p = X.shape
    rng = np.random.default_rng(cfg.seed)
    model = init_mlp(p, cfg.seed, dropout_rate=cfg.dropout_rate, rng=rng)
    weights = [W.copy() for W in model.weights]
    biases = [b.copy() for b in model.biases]
    sw = class_weights.per_sample(y).astype(np.float64)
    yf = y.astype(np.float64)

    train_idx = np.arange(n)
    val_idx = None
    if cfg.validation_fraction > 0.0:
        try:
            train_idx, val_idx = _validation_split(y, cfg.validation_fraction, rng)
        except DegenerateSplit:
            val_idx = None

    params = weights + biases
    opt = _Adam(params, cfg.learning_rate)
    best_auc = -np.inf
    best_params = None
    best_epoch = -1
    stale = 0
    losses = []
    val_aucs = []
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(train_idx)
        total = 0.0
        for start in range(0, order.shape[0], cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            loss, grads = _train_step(
                weights, biases, X[batch], yf[batch], sw[batch],
                cfg.dropout_rate, cfg.l2_penalty, rng,
            )
            total += loss * batch.shape[0]
            opt.step(params, grads)
        mean_loss = total / order.shape[0]
        if not np.isfinite(mean_loss):
            raise NonFiniteLoss(f"MLP loss became non-finite at epoch {epoch}")
        losses.append(mean_loss)
        if val_idx is None:
            continue
        current = MlpModel(weights, biases)
        score = auc(current.decision_function(X[val_idx]), y[val_idx])
        val_aucs.append(score)
        if score > best_auc:
            best_auc = score
            best_params = [a.copy() for a in params]
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= cfg.early_stop_patience:
                break

    if best_params is not None:
        k = len(weights)
        weights, biases = best_params[:k], best_params[k:]
    history = {"loss": losses, "val_auc": val_aucs, "best_epoch": best_epoch}
    return MlpModel([W.copy() for W in weights], [b.copy() for b in biases],
                    cfg.dropout_rate, history)
