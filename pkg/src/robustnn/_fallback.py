"""Pure-Python/numpy versions of the compiled kernels in ``_core.pyx``.

Arithmetic order matches the compiled code (per-row squared differences
summed left to right over coordinates), so both backends produce the same
distances bit for bit.
"""
from collections import deque

import numpy as np


def sq_distances(X, q):
    X = np.asarray(X, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    out = np.zeros(X.shape[0], dtype=np.float64)
    for j in range(X.shape[1]):
        diff = X[:, j] - q[j]
        out += diff * diff
    return out


def scan_k_nearest(X, Q, k):
    """Exhaustive k-nearest search for every row of ``Q``.

    Returns ``(ids, dists)`` of shape ``(m, k)``, ordered by distance and then
    by ascending row id.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    n = X.shape[0]
    m = Q.shape[0]
    ids = np.empty((m, k), dtype=np.int64)
    dists = np.empty((m, k), dtype=np.float64)
    row_ids = np.arange(n)
    for i in range(m):
        d = np.sqrt(sq_distances(X, Q[i]))
        order = np.lexsort((row_ids, d))[:k]
        ids[i] = order
        dists[i] = d[order]
    return ids, dists


def hopcroft_karp(n_left, n_right, indptr, indices):
    """Maximum-cardinality matching on a bipartite graph in CSR form.

    ``indptr``/``indices`` give, for each left vertex, its right neighbours.
    Returns ``(match_left, match_right)`` with -1 marking unmatched vertices.
    """
    indptr = [int(v) for v in indptr]
    indices = [int(v) for v in indices]
    match_left = [-1] * n_left
    match_right = [-1] * n_right
    inf = n_left + n_right + 1

    while True:
        dist = [inf] * n_left
        queue = deque()
        for u in range(n_left):
            if match_left[u] == -1:
                dist[u] = 0
                queue.append(u)
        found = False
        while queue:
            u = queue.popleft()
            for e in range(indptr[u], indptr[u + 1]):
                w = match_right[indices[e]]
                if w == -1:
                    found = True
                elif dist[w] == inf:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        if not found:
            break

        edge_pos = indptr[:-1]
        for root in range(n_left):
            if match_left[root] != -1:
                continue
            # iterative DFS along the BFS layering
            stack = [root]
            while stack:
                u = stack[-1]
                advanced = False
                while edge_pos[u] < indptr[u + 1]:
                    v = indices[edge_pos[u]]
                    w = match_right[v]
                    if w == -1:
                        # augment along the stack
                        for depth in range(len(stack) - 1, -1, -1):
                            uu = stack[depth]
                            vv = indices[edge_pos[uu]]
                            match_right[vv] = uu
                            match_left[uu] = vv
                        stack = []
                        advanced = True
                        break
                    if dist[w] == dist[u] + 1:
                        stack.append(w)
                        advanced = True
                        break
                    edge_pos[u] += 1
                if not stack:
                    break
                if not advanced:
                    dist[u] = inf
                    stack.pop()
                    if stack:
                        edge_pos[stack[-1]] += 1
    return np.array(match_left, dtype=np.int64), np.array(match_right, dtype=np.int64)


def alternating_reach(n_left, n_right, indptr, indices, match_left, match_right):
    """Vertices reachable from unmatched left vertices by alternating paths.

    Left-to-right steps use any edge, right-to-left steps use matched edges.
    """
    indptr = np.asarray(indptr)
    indices = np.asarray(indices)
    seen_left = np.zeros(n_left, dtype=bool)
    seen_right = np.zeros(n_right, dtype=bool)
    queue = deque()
    for u in range(n_left):
        if match_left[u] == -1:
            seen_left[u] = True
            queue.append(u)
    while queue:
        u = queue.popleft()
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if seen_right[v]:
                continue
            seen_right[v] = True
            w = match_right[v]
            if w != -1 and not seen_left[w]:
                seen_left[w] = True
                queue.append(w)
    return seen_left, seen_right
