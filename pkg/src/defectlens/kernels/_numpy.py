"""Vectorized numpy kernels, used when numba is unavailable or disabled.

Tree growth matches ``_numba.build_tree`` bit for bit: the same node order,
the same feature permutations and the same sequential accumulation order.
"""

import numpy as np

from ._numba import LEAF

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(state: int) -> tuple[int, int]:
    state = (state + _GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return state, z ^ (z >> 31)


def feature_permutation(seed: int, node_id: int, p: int) -> np.ndarray:
    state = (int(seed) & _MASK) ^ ((int(node_id) * _MIX1) & _MASK)
    perm = np.arange(p)
    for i in range(p - 1, 0, -1):
        state, r = splitmix64(state)
        j = r % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def _weighted_gini_sum(a, b):
    t = a + b
    return t - (a * a + b * b) / t


def best_split(X, y, w, rows, f):
    vals = X[rows, f]
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    if sv[0] == sv[-1]:
        return np.inf, 0.0, False
    sr = rows[order]
    ws = w[sr]
    pos = y[sr] == 1
    c0 = np.cumsum(np.where(pos, 0.0, ws))
    c1 = np.cumsum(np.where(pos, ws, 0.0))
    tot0, tot1 = c0[-1], c1[-1]
    a0, a1 = c0[:-1], c1[:-1]
    cost = _weighted_gini_sum(a0, a1) + _weighted_gini_sum(tot0 - a0, tot1 - a1)
    lo, hi = sv[:-1], sv[1:]
    cost = np.where(lo < hi, cost, np.inf)
    k = int(np.argmin(cost))
    mid = lo[k] + (hi[k] - lo[k]) / 2.0
    thr = mid if mid < hi[k] else lo[k]
    return float(cost[k]), float(thr), True


def build_tree(X, y, w, counts, max_features, seed):
    n, p = X.shape
    rows = np.flatnonzero(counts > 0).astype(np.int64)
    n_rows = rows.shape[0]
    cap = 2 * n_rows + 1
    feature = np.full(cap, LEAF, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, LEAF, dtype=np.int64)
    right = np.full(cap, LEAF, dtype=np.int64)
    value = np.zeros(cap)

    stack = [(0, 0, n_rows)]
    n_nodes = 1
    while stack:
        node, lo, hi = stack.pop()
        seg = rows[lo:hi]
        pos = y[seg] == 1
        ws = w[seg]
        w0 = np.cumsum(np.where(pos, 0.0, ws))[-1]
        w1 = np.cumsum(np.where(pos, ws, 0.0))[-1]
        value[node] = w1 / (w0 + w1)
        if w0 == 0.0 or w1 == 0.0 or counts[seg].sum() < 2:
            continue

        perm = feature_permutation(seed, node, p)
        best, best_f, best_thr = np.inf, -1, 0.0
        visited = 0
        for f in perm:
            if visited >= max_features:
                break
            cost, thr, ok = best_split(X, y, w, seg, f)
            if not ok:
                continue
            visited += 1
            if cost < best:
                best, best_f, best_thr = cost, int(f), thr
        if best_f < 0:
            continue

        goes_left = X[seg, best_f] <= best_thr
        nl = int(goes_left.sum())
        rows[lo:hi] = np.concatenate([seg[goes_left], seg[~goes_left]])

        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack.append((n_nodes + 1, lo + nl, hi))
        stack.append((n_nodes, lo, lo + nl))
        n_nodes += 2

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


def predict_tree(feature, threshold, left, right, value, X):
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = np.flatnonzero(feature[node] != LEAF)
    while active.size:
        nd = node[active]
        go_left = X[active, feature[nd]] <= threshold[nd]
        node[active] = np.where(go_left, left[nd], right[nd])
        active = active[feature[node[active]] != LEAF]
    return value[node]


def shapley_from_values(v, p, weights):
    masks = np.arange(1 << p)
    sizes = np.zeros(masks.shape, dtype=np.int64)
    for i in range(p):
        sizes += (masks >> i) & 1
    phi = np.zeros(p)
    for i in range(p):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        phi[i] = np.sum(weights[sizes[without]] * (v[without | bit] - v[without]))
    return phi
