from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import ConfigError, EmptyBackground, TooManyFeatures, WidthMismatch
from .types import AttributionVector, Method, make_attribution

MAX_EXACT_THRESHOLD = 14
EXACT_SHAPLEY_MAX_FEATURES = 12
# composite rows evaluated per predict call
_CHUNK_ROWS = 1 << 16


@dataclass(frozen=True, eq=False)
class ShapConfig:
    background: np.ndarray
    coalition_budget: int = 2048
    exact_threshold: int = 10
    seed: int = 0

    def __post_init__(self):
        bg = np.asarray(self.background, dtype=np.float64)
        if bg.ndim == 1:
            bg = bg.reshape(1, -1)
        if bg.ndim != 2 or bg.shape[0] == 0:
            raise EmptyBackground("SHAP needs at least one background row")
        object.__setattr__(self, "background", bg)
        if self.coalition_budget < 2:
            raise ConfigError("coalition_budget must be >= 2")
        if not 0 <= self.exact_threshold <= MAX_EXACT_THRESHOLD:
            raise ConfigError(f"exact_threshold must lie in [0, {MAX_EXACT_THRESHOLD}]")


def _check(x, background):
    x = np.asarray(x, dtype=np.float64)
    bg = np.asarray(background, dtype=np.float64)
    if bg.ndim == 1:
        bg = bg.reshape(1, -1)
    if bg.size == 0:
        raise EmptyBackground("SHAP needs at least one background row")
    if x.ndim != 1 or bg.shape[1] != x.shape[0]:
        raise WidthMismatch(f"instance width {x.shape} vs background width {bg.shape[1]}")
    return x, bg


def coalition_values(predict, x, background, masks) -> np.ndarray:
    """v(S) = mean over background rows b of predict(x on S, b elsewhere).

    ``masks`` is a boolean (n_coalitions, p) array.
    """
    masks = np.asarray(masks, dtype=bool)
    k = background.shape[0]
    per_chunk = max(1, _CHUNK_ROWS // k)
    out = np.empty(masks.shape[0])
    for start in range(0, masks.shape[0], per_chunk):
        block = masks[start:start + per_chunk]
        rows = np.where(block[:, None, :], x, background[None, :, :])
        preds = np.asarray(predict(rows.reshape(-1, x.shape[0])), dtype=np.float64)
        out[start:start + block.shape[0]] = preds.reshape(block.shape[0], k).mean(axis=1)
    return out


def _all_masks(p: int) -> np.ndarray:
    codes = np.arange(1 << p)
    return ((codes[:, None] >> np.arange(p)) & 1).astype(bool)


def shapley_kernel_weight(p: int, s: int) -> float:
    return (p - 1) / (math.comb(p, s) * s * (p - s))


def _sample_coalitions(p: int, budget: int, rng: np.random.Generator) -> np.ndarray:
    """Coalition/complement pairs with sizes drawn from the Shapley kernel."""
    sizes = np.arange(1, p)
    size_prob = (p - 1) / (sizes * (p - sizes))
    size_prob /= size_prob.sum()
    n_pairs = budget // 2
    drawn = rng.choice(sizes, size=n_pairs, p=size_prob)
    masks = np.zeros((2 * n_pairs, p), dtype=bool)
    for j, s in enumerate(drawn):
        members = rng.permutation(p)[:s]
        masks[2 * j, members] = True
        masks[2 * j + 1] = ~masks[2 * j]
    return masks


def _constrained_wls(Z, y, weights, total):
    """min sum w (y - Z phi)^2 subject to sum(phi) == total.

    The last coefficient is eliminated, which enforces the constraint
    exactly up to rounding of one subtraction.
    """
    last = Z[:, -1]
    A = Z[:, :-1] - last[:, None]
    b = y - last * total
    sw = np.sqrt(weights)
    head, *_ = np.linalg.lstsq(A * sw[:, None], b * sw, rcond=None)
    return np.append(head, total - head.sum())


def kernel_shap(predict, x, cfg: ShapConfig) -> AttributionVector:
    """Kernel SHAP estimate of the Shapley values of ``predict`` at ``x``.

    All 2^p - 2 proper coalitions are used when ``p <= cfg.exact_threshold``
    (the solution then equals the exact Shapley values); otherwise
    ``cfg.coalition_budget`` coalitions are sampled in complementary pairs.
    """
    x, bg = _check(x, cfg.background)
    p = x.shape[0]
    ends = coalition_values(predict, x, bg, np.array([np.zeros(p, bool), np.ones(p, bool)]))
    v_empty, v_full = float(ends[0]), float(ends[1])
    total = v_full - v_empty
    if p == 1:
        values = np.array([total])
    else:
        if p <= cfg.exact_threshold:
            masks = _all_masks(p)[1:-1]
            sizes = masks.sum(axis=1)
            weights = np.array([shapley_kernel_weight(p, int(s)) for s in sizes])
        else:
            masks = _sample_coalitions(p, cfg.coalition_budget, np.random.default_rng(cfg.seed))
            weights = np.ones(masks.shape[0])
        v = coalition_values(predict, x, bg, masks)
        values = _constrained_wls(masks.astype(np.float64), v - v_empty, weights, total)
    return make_attribution(values, x, bg.mean(axis=0), Method.KERNEL_SHAP, v_full, v_empty)


def exact_shapley(predict, x, background) -> AttributionVector:
    """Shapley values by summing weighted marginal contributions over all coalitions."""
    x, bg = _check(x, background)
    p = x.shape[0]
    if p > EXACT_SHAPLEY_MAX_FEATURES:
        raise TooManyFeatures(f"exact Shapley enumeration limited to {EXACT_SHAPLEY_MAX_FEATURES} features")
    v = coalition_values(predict, x, bg, _all_masks(p))
    fact = math.factorial
    weights = np.array([fact(s) * fact(p - s - 1) / fact(p) for s in range(p)])
    values = kernels.shapley_from_values(v, p, weights)
    return make_attribution(values, x, bg.mean(axis=0), Method.EXACT_SHAPLEY, v[-1], v[0])
