"""Accuracy, ROC AUC and the confusion matrix under a >= threshold rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import EmptyInput, LengthMismatch, SingleClass

DEFAULT_THRESHOLD = 0.5


def _pair(scores, y):
    s = np.asarray(scores, dtype=np.float64).ravel()
    t = np.asarray(y).ravel()
    if s.shape != t.shape:
        raise LengthMismatch(f"{s.shape[0]} scores vs {t.shape[0]} labels")
    return s, t.astype(np.int64)


def confusion(scores, y, threshold: float = DEFAULT_THRESHOLD):
    """(tp, fp, tn, fn) with ``score >= threshold`` predicted positive."""
    s, t = _pair(scores, y)
    pred = s >= threshold
    pos = t == 1
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    tn = int(np.sum(~pred & ~pos))
    fn = int(np.sum(~pred & pos))
    return tp, fp, tn, fn


def accuracy(scores, y, threshold: float = DEFAULT_THRESHOLD) -> float:
    s, t = _pair(scores, y)
    if s.shape[0] == 0:
        raise EmptyInput("accuracy of an empty set")
    return float(np.mean((s >= threshold).astype(np.int64) == t))


def auc(scores, y) -> float:
    """ROC AUC via the Mann-Whitney rank sum; tied scores get midranks."""
    s, t = _pair(scores, y)
    pos = t == 1
    n_pos = int(pos.sum())
    n_neg = t.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both classes")
    ranks = rankdata(s, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def percent(value: float) -> int:
    """Whole-number percentage, halves rounded up."""
    return int(np.floor(100.0 * value + 0.5))


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    auc: float
    tp: int
    fp: int
    tn: int
    fn: int
    threshold: float = DEFAULT_THRESHOLD

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "auc": self.auc,
            "accuracy_pct": percent(self.accuracy),
            "auc_pct": percent(self.auc),
            "confusion": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
            "threshold": self.threshold,
        }


def evaluate(scores, y, threshold: float = DEFAULT_THRESHOLD) -> EvalResult:
    tp, fp, tn, fn = confusion(scores, y, threshold)
    return EvalResult(
        accuracy=(tp + tn) / (tp + fp + tn + fn),
        auc=auc(scores, y),
        tp=tp, fp=fp, tn=tn, fn=fn,
        threshold=threshold,
    )
