# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Same arithmetic, same order as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double RESCALE_FLOOR = 1e-9


def hinge_sgd(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
              const double[::1] labels, const cnp.int64_t[::1] order,
              double lr, double lam, Py_ssize_t dim):
    cdef double[::1] v = np.zeros(dim, dtype=np.float64)
    cdef double scale = 1.0
    cdef double bias = 0.0
    cdef double eta, y, dot, step
    cdef Py_ssize_t t, i, p, j, lo, hi
    cdef Py_ssize_t steps = order.shape[0]
    for t in range(steps):
        i = order[t]
        eta = lr / (1.0 + lr * lam * <double>t)
        y = labels[i]
        lo = indptr[i]
        hi = indptr[i + 1]
        dot = 0.0
        for p in range(lo, hi):
            dot += v[indices[p]]
        dot = dot * scale + bias
        scale *= 1.0 - eta * lam
        if y * dot < 1.0:
            step = eta * y / scale
            for p in range(lo, hi):
                v[indices[p]] += step
            bias += eta * y
        if scale < RESCALE_FLOOR:
            for j in range(dim):
                v[j] *= scale
            scale = 1.0
    w = np.empty(dim, dtype=np.float64)
    cdef double[::1] wv = w
    for j in range(dim):
        wv[j] = v[j] * scale
    return w, bias


def bfs_distance_sum(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices,
                     const cnp.int64_t[::1] sources):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef long long total = 0
    cdef long long pairs = 0
    cdef Py_ssize_t k, s, u, w, p, head, tail
    cdef long long du
    cdef long long *dist = <long long *> malloc(n * sizeof(long long))
    cdef Py_ssize_t *queue = <Py_ssize_t *> malloc(n * sizeof(Py_ssize_t))
    if dist == NULL or queue == NULL:
        free(dist)
        free(queue)
        raise MemoryError()
    try:
        for k in range(sources.shape[0]):
            s = sources[k]
            for u in range(n):
                dist[u] = -1
            dist[s] = 0
            queue[0] = s
            head = 0
            tail = 1
            while head < tail:
                u = queue[head]
                head += 1
                du = dist[u] + 1
                for p in range(indptr[u], indptr[u + 1]):
                    w = indices[p]
                    if dist[w] < 0:
                        dist[w] = du
                        total += du
                        pairs += 1
                        queue[tail] = w
                        tail += 1
    finally:
        free(dist)
        free(queue)
    return int(total), int(pairs)


def local_clustering(const cnp.int64_t[::1] indptr, const cnp.int64_t[::1] indices):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    out = np.full(n, np.nan)
    cdef double[::1] ov = out
    cdef Py_ssize_t u, v, p, a, b, lo, hi, bend
    cdef long long k, closed
    cdef cnp.int64_t x, y
    for u in range(n):
        lo = indptr[u]
        hi = indptr[u + 1]
        k = hi - lo
        if k < 2:
            continue
        closed = 0
        for p in range(lo, hi):
            v = indices[p]
            a = lo
            b = indptr[v]
            bend = indptr[v + 1]
            while a < hi and b < bend:
                x = indices[a]
                y = indices[b]
                if x == y:
                    closed += 1
                    a += 1
                    b += 1
                elif x < y:
                    a += 1
                else:
                    b += 1
        ov[u] = <double>closed / <double>(k * (k - 1))
    return out
