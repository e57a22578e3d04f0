"""Pure-Python kernels.

Reference implementations of the hot loops. ``_kernels.pyx`` mirrors these
operation for operation, so both backends return bit-identical results.
"""

from collections import deque

import numpy as np

RESCALE_FLOOR = 1e-9


def hinge_sgd(indptr, indices, labels, order, lr, lam, dim):
    """Stochastic subgradient descent on the L2-regularised hinge loss.

    Rows are binary presence vectors in CSR form (``indptr``/``indices``).
    ``order`` lists the row visited at each step across all epochs. The
    weight vector is kept as ``scale * v`` so the per-step decay is O(1).

    Returns ``(weights, bias)``.
    """
    v = [0.0] * dim
    scale = 1.0
    bias = 0.0
    ptr = indptr.tolist()
    idx = indices.tolist()
    ys = labels.tolist()
    for t, i in enumerate(order.tolist()):
        eta = lr / (1.0 + lr * lam * t)
        y = ys[i]
        lo, hi = ptr[i], ptr[i + 1]
        dot = 0.0
        for p in range(lo, hi):
            dot += v[idx[p]]
        dot = dot * scale + bias
        scale *= 1.0 - eta * lam
        if y * dot < 1.0:
            step = eta * y / scale
            for p in range(lo, hi):
                v[idx[p]] += step
            bias += eta * y
        if scale < RESCALE_FLOOR:
            for j in range(dim):
                v[j] *= scale
            scale = 1.0
    w = np.empty(dim, dtype=np.float64)
    for j in range(dim):
        w[j] = v[j] * scale
    return w, bias


def bfs_distance_sum(indptr, indices, sources):
    """Sum of shortest-path hop counts from each source to every node it reaches.

    Returns ``(total_distance, reachable_pairs)``; the source itself is not
    counted as a pair.
    """
    ptr = indptr.tolist()
    idx = indices.tolist()
    n = len(ptr) - 1
    total = 0
    pairs = 0
    for s in sources.tolist():
        dist = [-1] * n
        dist[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            du = dist[u] + 1
            for p in range(ptr[u], ptr[u + 1]):
                w = idx[p]
                if dist[w] < 0:
                    dist[w] = du
                    total += du
                    pairs += 1
                    queue.append(w)
    return total, pairs


def local_clustering(indptr, indices):
    """Local clustering coefficient per node; NaN where degree < 2.

    Neighbour lists must be sorted and the adjacency symmetric.
    """
    ptr = indptr.tolist()
    idx = indices.tolist()
    n = len(ptr) - 1
    out = np.full(n, np.nan)
    for u in range(n):
        lo, hi = ptr[u], ptr[u + 1]
        k = hi - lo
        if k < 2:
            continue
        closed = 0
        for p in range(lo, hi):
            v = idx[p]
            # sorted-merge intersection of N(u) and N(v)
            a, b = lo, ptr[v]
            bend = ptr[v + 1]
            while a < hi and b < bend:
                x, y = idx[a], idx[b]
                if x == y:
                    closed += 1
                    a += 1
                    b += 1
                elif x < y:
                    a += 1
                else:
                    b += 1
        out[u] = closed / (k * (k - 1))
    return out
