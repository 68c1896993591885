# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled regression tree kernel.

Mirrors the semantics of ``_tree_py`` (see its module docstring): greedy
CART on squared error, midpoint thresholds, lowest-feature/lowest-threshold
tie break, splitmix64-driven per-node feature subsampling, depth-first
left-first node order.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY


cdef inline unsigned long long _splitmix64_next(unsigned long long *state) nogil:
    cdef unsigned long long z
    state[0] = state[0] + <unsigned long long>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <unsigned long long>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <unsigned long long>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef void _sort_pairs(double *v, double *w, Py_ssize_t lo, Py_ssize_t hi) nogil:
    # iterative quicksort with insertion sort below a small cutoff; sorts
    # v[lo:hi] ascending and applies the same permutation to w
    cdef Py_ssize_t stack_lo[128]
    cdef Py_ssize_t stack_hi[128]
    cdef int top = 0
    cdef Py_ssize_t i, j, l, r, mid
    cdef double pivot, tv, tw
    stack_lo[0] = lo
    stack_hi[0] = hi
    top = 1
    while top > 0:
        top -= 1
        l = stack_lo[top]
        r = stack_hi[top]
        while r - l > 16:
            mid = l + (r - l) // 2
            # median of three -> pivot value
            if v[mid] < v[l]:
                tv = v[l]; v[l] = v[mid]; v[mid] = tv
                tw = w[l]; w[l] = w[mid]; w[mid] = tw
            if v[r - 1] < v[l]:
                tv = v[l]; v[l] = v[r - 1]; v[r - 1] = tv
                tw = w[l]; w[l] = w[r - 1]; w[r - 1] = tw
            if v[r - 1] < v[mid]:
                tv = v[mid]; v[mid] = v[r - 1]; v[r - 1] = tv
                tw = w[mid]; w[mid] = w[r - 1]; w[r - 1] = tw
            pivot = v[mid]
            i = l
            j = r - 1
            while True:
                while v[i] < pivot:
                    i += 1
                while v[j] > pivot:
                    j -= 1
                if i >= j:
                    break
                tv = v[i]; v[i] = v[j]; v[j] = tv
                tw = w[i]; w[i] = w[j]; w[j] = tw
                i += 1
                j -= 1
            # recurse into the smaller side via the explicit stack
            if j + 1 - l < r - (j + 1):
                stack_lo[top] = j + 1
                stack_hi[top] = r
                top += 1
                r = j + 1
            else:
                stack_lo[top] = l
                stack_hi[top] = j + 1
                top += 1
                l = j + 1
        # insertion sort for the remaining short run
        for i in range(l + 1, r):
            tv = v[i]
            tw = w[i]
            j = i - 1
            while j >= l and v[j] > tv:
                v[j + 1] = v[j]
                w[j + 1] = w[j]
                j -= 1
            v[j + 1] = tv
            w[j + 1] = tw


def build_tree(X, y, int max_depth=-1, int min_samples_split=2,
               int max_features=0, unsigned long long seed=0):
    """Grow a regression tree; returns (feature, threshold, left, right, value)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[:, ::1] Xv = X
    cdef double[::1] yv = y
    cdef Py_ssize_t n = Xv.shape[0]
    cdef Py_ssize_t d = Xv.shape[1]
    if n == 0 or d == 0:
        raise ValueError("cannot grow a tree on an empty matrix")

    cdef Py_ssize_t cap = 2 * n + 1
    feature_arr = np.full(cap, -1, dtype=np.int32)
    threshold_arr = np.zeros(cap, dtype=np.float64)
    left_arr = np.full(cap, -1, dtype=np.int32)
    right_arr = np.full(cap, -1, dtype=np.int32)
    value_arr = np.zeros(cap, dtype=np.float64)
    cdef int[::1] feature = feature_arr
    cdef double[::1] threshold = threshold_arr
    cdef int[::1] left = left_arr
    cdef int[::1] right = right_arr
    cdef double[::1] value = value_arr

    samples_arr = np.arange(n, dtype=np.intp)
    cdef Py_ssize_t[::1] samples = samples_arr
    buf_v = np.empty(n, dtype=np.float64)
    buf_w = np.empty(n, dtype=np.float64)
    buf_i = np.empty(n, dtype=np.intp)
    cdef double[::1] vals = buf_v
    cdef double[::1] ws = buf_w
    cdef Py_ssize_t[::1] part = buf_i
    pool_arr = np.empty(d, dtype=np.intp)
    cdef Py_ssize_t[::1] pool = pool_arr

    stack_arr = np.empty((cap + 2, 4), dtype=np.int64)
    cdef long long[:, ::1] stack = stack_arr
    cdef Py_ssize_t stack_size = 0

    cdef unsigned long long rng_state = seed
    cdef bint subsample = 0 < max_features < d
    cdef Py_ssize_t n_feats = max_features if subsample else d

    cdef Py_ssize_t nid, s, e, depth, m, i, j, k, fj, n_l, lid, rid
    cdef Py_ssize_t node_count = 1
    cdef double total, sl, proxy, best_proxy, best_thr, thr, first, rhs
    cdef Py_ssize_t best_feat
    cdef bint constant

    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    stack_size = 1

    while stack_size > 0:
        stack_size -= 1
        nid = <Py_ssize_t>stack[stack_size, 0]
        s = <Py_ssize_t>stack[stack_size, 1]
        e = <Py_ssize_t>stack[stack_size, 2]
        depth = <Py_ssize_t>stack[stack_size, 3]
        m = e - s

        total = 0.0
        for i in range(s, e):
            total += yv[samples[i]]
        value[nid] = total / m

        if m < min_samples_split or (max_depth >= 0 and depth >= max_depth):
            continue
        constant = True
        first = yv[samples[s]]
        for i in range(s + 1, e):
            if yv[samples[i]] != first:
                constant = False
                break
        if constant:
            continue

        if subsample:
            for i in range(d):
                pool[i] = i
            for i in range(max_features):
                j = i + <Py_ssize_t>(_splitmix64_next(&rng_state) % <unsigned long long>(d - i))
                k = pool[i]
                pool[i] = pool[j]
                pool[j] = k
            # sort the chosen prefix ascending so the tie rule stays by index
            for i in range(1, max_features):
                k = pool[i]
                j = i - 1
                while j >= 0 and pool[j] > k:
                    pool[j + 1] = pool[j]
                    j -= 1
                pool[j + 1] = k
        else:
            for i in range(d):
                pool[i] = i

        best_proxy = -INFINITY
        best_feat = -1
        best_thr = 0.0
        for k in range(n_feats):
            fj = pool[k]
            for i in range(m):
                vals[i] = Xv[samples[s + i], fj]
                ws[i] = yv[samples[s + i]]
            _sort_pairs(&vals[0], &ws[0], 0, m)
            if vals[0] == vals[m - 1]:
                continue
            sl = 0.0
            for i in range(m - 1):
                sl += ws[i]
                if vals[i + 1] > vals[i]:
                    rhs = total - sl
                    proxy = sl * sl / (i + 1) + rhs * rhs / (m - 1 - i)
                    if proxy > best_proxy:
                        thr = (vals[i] + vals[i + 1]) / 2.0
                        if thr >= vals[i + 1]:
                            thr = vals[i]
                        best_proxy = proxy
                        best_feat = fj
                        best_thr = thr
        if best_feat < 0:
            continue

        # stable partition of samples[s:e] around the chosen threshold
        n_l = 0
        for i in range(s, e):
            if Xv[samples[i], best_feat] <= best_thr:
                part[n_l] = samples[i]
                n_l += 1
        j = n_l
        for i in range(s, e):
            if Xv[samples[i], best_feat] > best_thr:
                part[j] = samples[i]
                j += 1
        for i in range(m):
            samples[s + i] = part[i]

        lid = node_count
        rid = node_count + 1
        node_count += 2
        feature[nid] = <int>best_feat
        threshold[nid] = best_thr
        left[nid] = <int>lid
        right[nid] = <int>rid
        stack[stack_size, 0] = rid
        stack[stack_size, 1] = s + n_l
        stack[stack_size, 2] = e
        stack[stack_size, 3] = depth + 1
        stack_size += 1
        stack[stack_size, 0] = lid
        stack[stack_size, 1] = s
        stack[stack_size, 2] = s + n_l
        stack[stack_size, 3] = depth + 1
        stack_size += 1

    return (
        feature_arr[:node_count].copy(),
        threshold_arr[:node_count].copy(),
        left_arr[:node_count].copy(),
        right_arr[:node_count].copy(),
        value_arr[:node_count].copy(),
    )


def predict_tree(feature, threshold, left, right, value, X):
    """Evaluate a tree built by :func:`build_tree` on rows of X."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] Xv = X
    cdef int[::1] f = np.ascontiguousarray(feature, dtype=np.int32)
    cdef double[::1] thr = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef int[::1] l = np.ascontiguousarray(left, dtype=np.int32)
    cdef int[::1] r = np.ascontiguousarray(right, dtype=np.int32)
    cdef double[::1] val = np.ascontiguousarray(value, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef int node
    with nogil:
        for i in range(n):
            node = 0
            while f[node] >= 0:
                if Xv[i, f[node]] <= thr[node]:
                    node = l[node]
                else:
                    node = r[node]
            out[i] = val[node]
    return out_arr
