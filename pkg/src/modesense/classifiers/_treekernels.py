"""Compiled kernels for growing and evaluating binary classification trees.

Greedy CART growth: every node scans its candidate features, considers
thresholds at midpoints between consecutive distinct sorted values, and
takes the split with the lowest weighted Gini impurity of the children.
Ties resolve to the lowest feature id, then the lowest threshold (strict
improvement comparison over an ascending candidate scan). Growth stops on
purity, on min_leaf, or when no split decreases impurity.

The candidate-feature draw uses an embedded xorshift64 generator so tree
structure is reproducible from a single integer seed independently of numpy
RNG stream details.
"""

import numpy as np
from numba import njit

#: gains at or below this are treated as "no impurity decrease"
_MIN_GAIN = 1e-12


@njit(cache=True, nogil=True)
def build_tree(X, y, n_classes, min_leaf, mtry, seed):
    """Grow one tree on (X, y); y must be int64 codes in [0, n_classes).

    Returns (feature, threshold, left, right, counts, n_nodes, importances,
    total_decrease). feature[v] == -1 marks a leaf. counts[v] holds the
    per-class training counts at node v. importances accumulates the
    root-weighted Gini decrease per split feature; total_decrease is its sum.
    """
    n, d = X.shape
    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    counts = np.zeros((max_nodes, n_classes), np.float64)
    importances = np.zeros(d, np.float64)
    total_decrease = 0.0

    idx = np.arange(n)
    stack_node = np.empty(max_nodes, np.int64)
    stack_lo = np.empty(max_nodes, np.int64)
    stack_hi = np.empty(max_nodes, np.int64)
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    top = 1
    n_nodes = 1

    perm = np.arange(d)
    state = np.uint64(seed)
    if state == np.uint64(0):
        state = np.uint64(88172645463325252)

    vals = np.empty(n, np.float64)
    buf = np.empty(n, np.int64)
    lcnt = np.empty(n_classes, np.float64)

    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        m = hi - lo

        cnt = np.zeros(n_classes, np.float64)
        for i in range(lo, hi):
            cnt[y[idx[i]]] += 1.0
        counts[node] = cnt
        gini = 1.0
        pure = False
        for c in range(n_classes):
            p = cnt[c] / m
            gini -= p * p
            if cnt[c] == m:
                pure = True
        if pure or m < 2 * min_leaf:
            continue

        k = mtry if mtry < d else d
        for j in range(k):
            state ^= state << np.uint64(13)
            state ^= state >> np.uint64(7)
            state ^= state << np.uint64(17)
            r = j + np.int64(state % np.uint64(d - j))
            tmp = perm[j]
            perm[j] = perm[r]
            perm[r] = tmp
        cand = np.sort(perm[:k].copy())

        best_gain = _MIN_GAIN
        best_feat = -1
        best_thr = 0.0
        for ci in range(k):
            f = cand[ci]
            for i in range(m):
                vals[i] = X[idx[lo + i], f]
            order = np.argsort(vals[:m])
            for c in range(n_classes):
                lcnt[c] = 0.0
            for p in range(1, m):
                lcnt[y[idx[lo + order[p - 1]]]] += 1.0
                v_prev = vals[order[p - 1]]
                v_here = vals[order[p]]
                if v_here <= v_prev:
                    continue
                nl = p
                nr = m - p
                if nl < min_leaf or nr < min_leaf:
                    continue
                gl = 1.0
                gr = 1.0
                for c in range(n_classes):
                    pl = lcnt[c] / nl
                    pr = (cnt[c] - lcnt[c]) / nr
                    gl -= pl * pl
                    gr -= pr * pr
                gain = gini - (nl * gl + nr * gr) / m
                if gain > best_gain:
                    best_gain = gain
                    best_feat = f
                    best_thr = 0.5 * (v_prev + v_here)

        if best_feat < 0:
            continue

        nl = 0
        nr = 0
        for i in range(m):
            row = idx[lo + i]
            if X[row, best_feat] <= best_thr:
                idx[lo + nl] = row
                nl += 1
            else:
                buf[nr] = row
                nr += 1
        for i in range(nr):
            idx[lo + nl + i] = buf[i]

        contribution = m * best_gain / n
        importances[best_feat] += contribution
        total_decrease += contribution

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = lid
        right[node] = rid
        stack_node[top] = lid
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        top += 1
        stack_node[top] = rid
        stack_lo[top] = lo + nl
        stack_hi[top] = hi
        top += 1

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], counts[:n_nodes], n_nodes, importances,
            total_decrease)


@njit(cache=True, nogil=True)
def leaf_ids(X, feature, threshold, left, right):
    """Route each row of X to its leaf; returns node ids."""
    n = X.shape[0]
    out = np.empty(n, np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out
