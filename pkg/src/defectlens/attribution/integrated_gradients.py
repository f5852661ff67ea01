from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, NonDifferentiableModel, WidthMismatch
from .types import AttributionVector, Method, make_attribution

DEFAULT_STEPS = 64


@dataclass(frozen=True, eq=False)
class IgConfig:
    """``baseline=None`` means the origin, i.e. the training mean once inputs are standardized."""

    steps: int = DEFAULT_STEPS
    baseline: np.ndarray | None = None
    output: str = "probability"

    def __post_init__(self):
        if int(self.steps) < 1:
            raise ConfigError("IG steps must be >= 1")
        if self.output not in ("probability", "logit"):
            raise ConfigError(f"unknown IG output {self.output!r}")

    def baseline_for(self, p: int) -> np.ndarray:
        if self.baseline is None:
            return np.zeros(p)
        b = np.asarray(self.baseline, dtype=np.float64)
        if b.shape != (p,):
            raise WidthMismatch(f"baseline has shape {b.shape}, expected ({p},)")
        return b


def _output(model, X, output):
    if output == "logit":
        return model.decision_function(X)
    return model.predict_proba(X)


def integrated_gradients(model, x, cfg: IgConfig | None = None) -> AttributionVector:
    """Path-integrated gradients from the baseline to ``x``.

    The integral over the straight path is approximated with the midpoint
    rule on ``cfg.steps`` cells, which is exact whenever the gradient is
    constant along the path.
    """
    cfg = cfg or IgConfig()
    if not callable(getattr(model, "input_gradient", None)):
        raise NonDifferentiableModel(
            f"integrated gradients needs a differentiable model, got {type(model).__name__}"
        )
    x = np.asarray(x, dtype=np.float64)
    p = getattr(model, "n_features", x.shape[-1])
    if x.shape != (p,):
        raise WidthMismatch(f"instance has shape {x.shape}, expected ({p},)")
    base = cfg.baseline_for(p)
    m = int(cfg.steps)
    alphas = (np.arange(1, m + 1) - 0.5) / m
    path = base + alphas[:, None] * (x - base)
    grads = np.asarray(model.input_gradient(path, output=cfg.output)).reshape(m, p)
    values = (x - base) * grads.mean(axis=0)
    f_x, f_base = _output(model, np.vstack([x, base]), cfg.output)
    return make_attribution(values, x, base, Method.INTEGRATED_GRADIENTS, f_x, f_base)
