"""Pure-NumPy regression tree kernel (fallback backend).

Semantics shared with the compiled backend:

* greedy CART on squared error; candidate thresholds are midpoints between
  consecutive sorted distinct feature values;
* the best split maximizes ``sumL^2/nL + sumR^2/nR``; ties are broken by
  lowest feature index, then lowest threshold (features are scanned in
  ascending order and thresholds in ascending value, first strict winner
  kept);
* a node becomes a leaf when it has fewer than ``min_samples_split``
  samples, hits ``max_depth``, has a constant target, or admits no valid
  split;
* feature subsampling (``0 < max_features < n_features``) draws a sorted
  subset per node from a splitmix64 stream seeded with ``seed``; the stream
  advances once per candidate node, in depth-first (left-first) order.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, (z ^ (z >> 31)) & _MASK64


def build_tree(X, y, max_depth=-1, min_samples_split=2, max_features=0, seed=0):
    """Grow a regression tree; returns (feature, threshold, left, right, value).

    ``feature[i] == -1`` marks a leaf. ``max_depth < 0`` means unlimited;
    ``max_features == 0`` means all features at every split.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, d = X.shape
    if n == 0 or d == 0:
        raise ValueError("cannot grow a tree on an empty matrix")

    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    value = np.zeros(cap, dtype=np.float64)

    samples = np.arange(n, dtype=np.intp)
    subsample = 0 < max_features < d
    rng_state = seed & _MASK64
    all_features = np.arange(d)
    node_count = 1
    stack = [(0, 0, n, 0)]  # node id, start, end, depth
    while stack:
        nid, s, e, depth = stack.pop()
        idx = samples[s:e]
        m = e - s
        ys = y[idx]
        csum = np.cumsum(ys)
        total = float(csum[-1])
        value[nid] = total / m
        if m < min_samples_split or (0 <= max_depth <= depth):
            continue
        if np.all(ys == ys[0]):
            continue

        if subsample:
            rng_state, feats = _draw_features(rng_state, d, max_features)
        else:
            feats = all_features

        best_proxy = -np.inf
        best_feat = -1
        best_thr = 0.0
        n_left = np.arange(1, m, dtype=np.float64)
        n_right = m - n_left
        for j in feats:
            col = X[idx, j]
            order = np.argsort(col, kind="mergesort")
            vs = col[order]
            if vs[0] == vs[-1]:
                continue
            c = np.cumsum(ys[order])[:-1]
            proxy = c * c / n_left + (total - c) ** 2 / n_right
            proxy = np.where(vs[1:] > vs[:-1], proxy, -np.inf)
            i = int(np.argmax(proxy))
            if proxy[i] > best_proxy:
                thr = (vs[i] + vs[i + 1]) / 2.0
                if thr >= vs[i + 1]:  # midpoint rounded up to the right value
                    thr = vs[i]
                best_proxy = float(proxy[i])
                best_feat = int(j)
                best_thr = thr
        if best_feat < 0:
            continue

        go_left = X[idx, best_feat] <= best_thr
        n_l = int(np.count_nonzero(go_left))
        l_idx = idx[go_left]  # idx is a view into samples: copy both halves
        r_idx = idx[~go_left]  # before writing the partition back
        samples[s : s + n_l] = l_idx
        samples[s + n_l : e] = r_idx
        lid = node_count
        rid = node_count + 1
        node_count += 2
        feature[nid] = best_feat
        threshold[nid] = best_thr
        left[nid] = lid
        right[nid] = rid
        stack.append((rid, s + n_l, e, depth + 1))
        stack.append((lid, s, s + n_l, depth + 1))

    sl = slice(0, node_count)
    return (
        feature[sl].copy(),
        threshold[sl].copy(),
        left[sl].copy(),
        right[sl].copy(),
        value[sl].copy(),
    )


def _draw_features(rng_state: int, d: int, k: int) -> tuple[int, np.ndarray]:
    pool = list(range(d))
    for i in range(k):
        rng_state, r = _splitmix64(rng_state)
        j = i + r % (d - i)
        pool[i], pool[j] = pool[j], pool[i]
    chosen = sorted(pool[:k])
    return rng_state, np.asarray(chosen)


def predict_tree(feature, threshold, left, right, value, X):
    """Evaluate a tree built by :func:`build_tree` on rows of X."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    while True:
        f = feature[node]
        active = f >= 0
        if not np.any(active):
            break
        act_rows = rows[active]
        act_node = node[active]
        act_f = f[active]
        goes_left = X[act_rows, act_f] <= threshold[act_node]
        node[act_rows] = np.where(goes_left, left[act_node], right[act_node])
    return value[node].astype(np.float64, copy=True)
