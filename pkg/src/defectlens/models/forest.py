from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..data import ClassWeights
from ._common import as_rows, check_xy
from .config import TrainConfig, default_config


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # class-weighted positive fraction of the node

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def predict(self, X) -> np.ndarray:
        return kernels.predict_tree(self.feature, self.threshold, self.left, self.right, self.value, X)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        ints = {k: np.asarray(d[k], dtype=np.int64) for k in ("feature", "left", "right")}
        return cls(
            feature=ints["feature"],
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=ints["left"],
            right=ints["right"],
            value=np.asarray(d["value"], dtype=np.float64),
        )


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: list
    tree_seeds: list
    n_features: int

    kind = "forest"

    def predict_proba(self, X):
        X2, single = as_rows(X, self.n_features)
        total = np.zeros(X2.shape[0])
        for tree in self.trees:
            total += tree.predict(X2)
        out = total / len(self.trees)
        return out[0] if single else out


def tree_seed(seed: int, t: int) -> int:
    """Per-tree seed derived from (seed, t) only, so tree order does not matter."""
    return int(np.random.SeedSequence([int(seed), int(t)]).generate_state(1, np.uint64)[0])


def _grow(X, y, sw, max_features, seed_t):
    n = X.shape[0]
    rng = np.random.default_rng(seed_t)
    counts = np.bincount(rng.integers(0, n, n), minlength=n)
    arrays = kernels.build_tree(X, y, sw * counts, counts, max_features, seed_t)
    return Tree(*arrays)


def fit_random_forest(
    X,
    y,
    class_weights: ClassWeights,
    cfg: TrainConfig | None = None,
    n_jobs: int = 1,
) -> ForestModel:
    """Bagged class-weighted Gini trees, ceil(sqrt(p)) candidate features per node.

    Trees are grown to purity. ``n_jobs > 1`` grows trees on threads; the
    result is identical to the serial fit.
    """
    cfg = cfg or default_config("forest")
    X, y = check_xy(X, y)
    X = np.ascontiguousarray(X)
    p = X.shape[1]
    max_features = max(1, math.ceil(math.sqrt(p)))
    sw = class_weights.per_sample(y).astype(np.float64)
    seeds = [tree_seed(cfg.seed, t) for t in range(cfg.n_trees)]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(lambda s: _grow(X, y, sw, max_features, s), seeds))
    else:
        trees = [_grow(X, y, sw, max_features, s) for s in seeds]
    return ForestModel(trees, seeds, p)
