"""Loop-style kernels compiled with numba when it is installed.

The vectorized twins in ``_numpy`` must produce bit-identical trees, so any
change to accumulation order here has to be mirrored there.
"""

import numpy as np

from .._accel import njit

_jit = njit(cache=True, nogil=True)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)

LEAF = -1


@_jit
def splitmix64(state):
    """Advance a splitmix64 state; returns (new_state, output)."""
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return state, z ^ (z >> _S31)


@_jit
def feature_permutation(seed, node_id, p):
    state = np.uint64(seed) ^ (np.uint64(node_id) * _MIX1)
    perm = np.arange(p)
    for i in range(p - 1, 0, -1):
        state, r = splitmix64(state)
        j = np.int64(r % np.uint64(i + 1))
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    return perm


@_jit
def _weighted_gini_sum(a, b):
    t = a + b
    return t - (a * a + b * b) / t


@_jit
def best_split(X, y, w, rows, f):
    """Best threshold of feature ``f`` over ``rows``.

    Returns (cost, threshold, ok); ``ok`` is False for a constant feature.
    Cost is W_left*gini_left + W_right*gini_right with class-weighted counts.
    """
    m = rows.shape[0]
    vals = np.empty(m)
    for k in range(m):
        vals[k] = X[rows[k], f]
    order = np.argsort(vals, kind="mergesort")
    if vals[order[0]] == vals[order[m - 1]]:
        return np.inf, 0.0, False
    tot0 = 0.0
    tot1 = 0.0
    for k in range(m):
        r = rows[order[k]]
        if y[r] == 1:
            tot1 += w[r]
        else:
            tot0 += w[r]
    best = np.inf
    thr = 0.0
    a0 = 0.0
    a1 = 0.0
    for k in range(m - 1):
        r = rows[order[k]]
        if y[r] == 1:
            a1 += w[r]
        else:
            a0 += w[r]
        lo = vals[order[k]]
        hi = vals[order[k + 1]]
        if lo < hi:
            cost = _weighted_gini_sum(a0, a1) + _weighted_gini_sum(tot0 - a0, tot1 - a1)
            if cost < best:
                best = cost
                mid = lo + (hi - lo) / 2.0
                thr = mid if mid < hi else lo
    return best, thr, True


@_jit
def build_tree(X, y, w, counts, max_features, seed):
    """Grow one unpruned tree on the rows with ``counts > 0``.

    ``w`` is the per-row weight (bootstrap multiplicity times class weight),
    ``counts`` the bootstrap multiplicity. Nodes split until pure or until
    they hold fewer than two bootstrap samples. Returns node arrays
    (feature, threshold, left, right, value); ``feature == -1`` marks a leaf
    and ``value`` is the weighted positive fraction.
    """
    n, p = X.shape
    n_rows = 0
    for i in range(n):
        if counts[i] > 0:
            n_rows += 1
    rows = np.empty(n_rows, dtype=np.int64)
    k = 0
    for i in range(n):
        if counts[i] > 0:
            rows[k] = i
            k += 1

    cap = 2 * n_rows + 1
    feature = np.full(cap, LEAF, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, LEAF, dtype=np.int64)
    right = np.full(cap, LEAF, dtype=np.int64)
    value = np.zeros(cap)

    stack_node = np.empty(cap, dtype=np.int64)
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    top = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n_rows
    top = 1
    n_nodes = 1
    scratch = np.empty(n_rows, dtype=np.int64)

    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        seg = rows[lo:hi]

        w0 = 0.0
        w1 = 0.0
        c = 0
        for k in range(seg.shape[0]):
            r = seg[k]
            c += counts[r]
            if y[r] == 1:
                w1 += w[r]
            else:
                w0 += w[r]
        value[node] = w1 / (w0 + w1)
        if w0 == 0.0 or w1 == 0.0 or c < 2:
            continue

        perm = feature_permutation(seed, node, p)
        best = np.inf
        best_f = -1
        best_thr = 0.0
        visited = 0
        for q in range(p):
            if visited >= max_features:
                break
            f = perm[q]
            cost, thr, ok = best_split(X, y, w, seg, f)
            if not ok:
                continue
            visited += 1
            if cost < best:
                best = cost
                best_f = f
                best_thr = thr
        if best_f < 0:
            continue

        # stable partition: rows going left keep their order, then rows going right
        nl = 0
        for k in range(seg.shape[0]):
            if X[seg[k], best_f] <= best_thr:
                scratch[nl] = seg[k]
                nl += 1
        nr = nl
        for k in range(seg.shape[0]):
            if X[seg[k], best_f] > best_thr:
                scratch[nr] = seg[k]
                nr += 1
        for k in range(seg.shape[0]):
            rows[lo + k] = scratch[k]

        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack_node[top] = n_nodes + 1
        stack_lo[top] = lo + nl
        stack_hi[top] = hi
        top += 1
        stack_node[top] = n_nodes
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        top += 1
        n_nodes += 2

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


@_jit
def predict_tree(feature, threshold, left, right, value, X):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        while feature[node] != LEAF:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


@_jit
def shapley_from_values(v, p, weights):
    """Shapley values from a full coalition value table.

    ``v[mask]`` is the value of the coalition whose members are the set bits of
    ``mask``; ``weights[s]`` is |S|!(p-|S|-1)!/p! for a coalition of size s.
    """
    phi = np.zeros(p)
    n_masks = 1 << p
    for i in range(p):
        bit = 1 << i
        acc = 0.0
        for mask in range(n_masks):
            if mask & bit:
                continue
            s = 0
            m = mask
            while m:
                m &= m - 1
                s += 1
            acc += weights[s] * (v[mask | bit] - v[mask])
        phi[i] = acc
    return phi
