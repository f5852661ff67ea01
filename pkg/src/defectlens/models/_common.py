import numpy as np

from ..errors import SingleClass, WidthMismatch

# keeps probabilities strictly inside (0, 1) once the logit saturates
_P_FLOOR = np.finfo(np.float64).tiny
_P_CEIL = 1.0 - np.finfo(np.float64).epsneg


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def probability(z):
    return np.clip(sigmoid(z), _P_FLOOR, _P_CEIL)


def weighted_bce_from_logits(z, y, sw):
    """Sum of per-sample weighted cross-entropy, computed stably from logits."""
    # log(1 + e^z) - y z
    return float(np.sum(sw * (np.logaddexp(0.0, z) - y * z)))


def check_xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise WidthMismatch("X must be 2-D with one row per label")
    if np.all(y == 1) or np.all(y == 0):
        raise SingleClass("training data holds a single class")
    return X, y


def as_rows(X, p):
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X2 = X.reshape(1, -1) if single else X
    if X2.ndim != 2 or X2.shape[1] != p:
        raise WidthMismatch(f"expected {p} features, got {X2.shape[-1]}")
    return X2, single
