# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: exhaustive nearest-neighbour scan and bipartite matching.

Pure-Python equivalents live in ``_fallback.py``; ``_kernels.py`` picks one at
import time.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def sq_distances(X, q):
    cdef const double[:, ::1] xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1], i, j
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double acc, diff
    for i in range(n):
        acc = 0.0
        for j in range(d):
            diff = xv[i, j] - qv[j]
            acc = acc + diff * diff
        ov[i] = acc
    return out


def scan_k_nearest(X, Q, Py_ssize_t k):
    cdef const double[:, ::1] xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] qv = np.ascontiguousarray(Q, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1], m = qv.shape[0]
    ids = np.empty((m, k), dtype=np.int64)
    dists = np.empty((m, k), dtype=np.float64)
    cdef long long[:, ::1] iv = ids
    cdef double[:, ::1] dv = dists
    cdef Py_ssize_t qi, i, j, pos, filled
    cdef double acc, diff, dist
    for qi in range(m):
        filled = 0
        for i in range(n):
            acc = 0.0
            for j in range(d):
                diff = xv[i, j] - qv[qi, j]
                acc = acc + diff * diff
            dist = sqrt(acc)
            # rows arrive in ascending id, so equal distances keep insertion order
            if filled == k and dist >= dv[qi, k - 1]:
                continue
            if filled < k:
                pos = filled
                filled += 1
            else:
                pos = k - 1
            while pos > 0 and dv[qi, pos - 1] > dist:
                dv[qi, pos] = dv[qi, pos - 1]
                iv[qi, pos] = iv[qi, pos - 1]
                pos -= 1
            dv[qi, pos] = dist
            iv[qi, pos] = i
    return ids, dists


def hopcroft_karp(Py_ssize_t n_left, Py_ssize_t n_right, indptr, indices):
    cdef const long long[::1] ptr = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const long long[::1] adj = np.ascontiguousarray(indices, dtype=np.int64)
    match_left = np.full(n_left, -1, dtype=np.int64)
    match_right = np.full(n_right, -1, dtype=np.int64)
    cdef long long[::1] ml = match_left
    cdef long long[::1] mr = match_right
    cdef long long[::1] dist = np.empty(n_left, dtype=np.int64)
    cdef long long[::1] queue = np.empty(max(n_left, 1), dtype=np.int64)
    cdef long long[::1] edge_pos = np.empty(max(n_left, 1), dtype=np.int64)
    cdef long long[::1] stack = np.empty(max(n_left, 1), dtype=np.int64)
    cdef long long inf = n_left + n_right + 1
    cdef Py_ssize_t head, tail, u, e, v, w, root, top, depth, uu
    cdef bint found, advanced
    while True:
        head = 0
        tail = 0
        for u in range(n_left):
            if ml[u] == -1:
                dist[u] = 0
                queue[tail] = u
                tail += 1
            else:
                dist[u] = inf
        found = False
        while head < tail:
            u = queue[head]
            head += 1
            for e in range(ptr[u], ptr[u + 1]):
                w = mr[adj[e]]
                if w == -1:
                    found = True
                elif dist[w] == inf:
                    dist[w] = dist[u] + 1
                    queue[tail] = w
                    tail += 1
        if not found:
            break
        for u in range(n_left):
            edge_pos[u] = ptr[u]
        for root in range(n_left):
            if ml[root] != -1:
                continue
            top = 0
            stack[0] = root
            while top >= 0:
                u = stack[top]
                advanced = False
                while edge_pos[u] < ptr[u + 1]:
                    v = adj[edge_pos[u]]
                    w = mr[v]
                    if w == -1:
                        for depth in range(top, -1, -1):
                            uu = stack[depth]
                            v = adj[edge_pos[uu]]
                            mr[v] = uu
                            ml[uu] = v
                        top = -1
                        advanced = True
                        break
                    if dist[w] == dist[u] + 1:
                        top += 1
                        stack[top] = w
                        advanced = True
                        break
                    edge_pos[u] += 1
                if top < 0:
                    break
                if not advanced:
                    dist[u] = inf
                    top -= 1
                    if top >= 0:
                        edge_pos[stack[top]] += 1
    return match_left, match_right


def alternating_reach(Py_ssize_t n_left, Py_ssize_t n_right, indptr, indices,
                      match_left, match_right):
    cdef const long long[::1] ptr = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const long long[::1] adj = np.ascontiguousarray(indices, dtype=np.int64)
    cdef const long long[::1] mr = np.ascontiguousarray(match_right, dtype=np.int64)
    cdef const long long[::1] ml = np.ascontiguousarray(match_left, dtype=np.int64)
    seen_left = np.zeros(n_left, dtype=np.uint8)
    seen_right = np.zeros(n_right, dtype=np.uint8)
    cdef unsigned char[::1] sl = seen_left
    cdef unsigned char[::1] sr = seen_right
    cdef long long[::1] queue = np.empty(max(n_left, 1), dtype=np.int64)
    cdef Py_ssize_t head = 0, tail = 0, u, e, v, w
    for u in range(n_left):
        if ml[u] == -1:
            sl[u] = 1
            queue[tail] = u
            tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        for e in range(ptr[u], ptr[u + 1]):
            v = adj[e]
            if sr[v]:
                continue
            sr[v] = 1
            w = mr[v]
            if w != -1 and not sl[w]:
                sl[w] = 1
                queue[tail] = w
                tail += 1
    return seen_left.astype(bool), seen_right.astype(bool)
