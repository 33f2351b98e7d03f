"""Labeled datasets, Euclidean distance and exact nearest-neighbour search."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels

# relative/absolute slack used when asking the kd-tree for candidates; every
# candidate is re-checked with the exact kernel distance afterwards
_SLACK_REL = 1e-9
_SLACK_ABS = 1e-12
_SCAN_BELOW = 64


def as_vector(x, d: int | None = None) -> np.ndarray:
    """Validate and return ``x`` as a finite 1-D float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"expected a non-empty 1-D feature vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("feature vector has non-finite coordinates")
    if d is not None and v.size != d:
        raise ValueError(f"dimension mismatch: expected {d}, got {v.size}")
    return v


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Points in R^d with binary labels; row ``i`` is example id ``i``."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[1] < 1:
            raise ValueError(f"X must have shape (n, d) with d >= 1, got {X.shape}")
        y = np.array(self.y).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"{X.shape[0]} points but {y.shape[0]} labels")
        if not np.all(np.isfinite(X)):
            raise ValueError("dataset has non-finite coordinates")
        if y.size and not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0 or 1")
        y = y.astype(np.int64)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def subset(self, ids) -> "LabeledDataset":
        ids = np.asarray(ids, dtype=np.int64)
        return LabeledDataset(self.X[ids], self.y[ids])

    def concat(self, other: "LabeledDataset") -> "LabeledDataset":
        if other.d != self.d:
            raise ValueError(f"dimension mismatch: {self.d} vs {other.d}")
        return LabeledDataset(np.vstack([self.X, other.X]), np.concatenate([self.y, other.y]))

    def identical(self, other: "LabeledDataset") -> bool:
        """Bitwise equality of coordinates and labels."""
        return (
            self.X.shape == other.X.shape
            and self.X.tobytes() == other.X.tobytes()
            and np.array_equal(self.y, other.y)
        )


def euclidean_distance(a, b) -> float:
    a = as_vector(a)
    b = as_vector(b, a.size)
    return float(np.sqrt(_kernels.sq_distances(a.reshape(1, -1), b)[0]))


def exhaustive_k_nearest(data: LabeledDataset, x, k: int) -> list[tuple[int, float]]:
    """Linear scan over every point; the reference the index must agree with."""
    x = as_vector(x, data.d)
    _check_k(k, data.n)
    ids, dists = _kernels.scan_k_nearest(data.X, x.reshape(1, -1), k)
    return [(int(i), float(dd)) for i, dd in zip(ids[0], dists[0])]


def _check_k(k, n):
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if k > n:
        raise ValueError(f"k={k} exceeds dataset size {n}")


class NeighborIndex:
    """kd-tree over a dataset with exact, id-tie-broken answers.

    The tree only proposes candidates; final distances come from the same
    kernel as :func:`exhaustive_k_nearest`, so results match the scan exactly.
    """

    def __init__(self, data: LabeledDataset):
        if data.n == 0:
            raise ValueError("cannot index an empty dataset")
        self.data = data
        self._tree = cKDTree(data.X) if data.n > _SCAN_BELOW else None

    def __len__(self):
        return self.data.n

    def _exact(self, cand, x):
        cand = np.asarray(cand, dtype=np.int64)
        d = np.sqrt(_kernels.sq_distances(self.data.X[cand], x))
        return cand, d

    def k_nearest_batch(self, Q, k: int) -> tuple[np.ndarray, np.ndarray]:
        """(ids, distances) arrays of shape (m, k) for each query row."""
        Q = np.asarray(Q, dtype=np.float64)
        if Q.ndim == 1:
            Q = Q.reshape(1, -1)
        if Q.shape[1] != self.data.d:
            raise ValueError(f"dimension mismatch: expected {self.data.d}, got {Q.shape[1]}")
        if not np.all(np.isfinite(Q)):
            raise ValueError("query has non-finite coordinates")
        _check_k(k, self.data.n)
        if self._tree is None or k * 4 > self.data.n:
            return _kernels.scan_k_nearest(self.data.X, Q, k)
        tree_d, _ = self._tree.query(Q, k=k)
        tree_d = np.asarray(tree_d).reshape(len(Q), k)
        radius = tree_d[:, -1] * (1 + _SLACK_REL) + _SLACK_ABS
        cands = self._tree.query_ball_point(Q, radius)
        ids = np.empty((len(Q), k), dtype=np.int64)
        dists = np.empty((len(Q), k), dtype=np.float64)
        for i, cand in enumerate(cands):
            cand, d = self._exact(cand, Q[i])
            order = np.lexsort((cand, d))[:k]
            ids[i] = cand[order]
            dists[i] = d[order]
        return ids, dists

    def k_nearest(self, x, k: int) -> list[tuple[int, float]]:
        x = as_vector(x, self.data.d)
        ids, dists = self.k_nearest_batch(x.reshape(1, -1), k)
        return [(int(i), float(dd)) for i, dd in zip(ids[0], dists[0])]

    def within(self, x, r: float) -> np.ndarray:
        """Sorted ids of all points at distance <= r from x."""
        x = as_vector(x, self.data.d)
        if self._tree is None:
            cand = np.arange(self.data.n)
        else:
            cand = self._tree.query_ball_point(x, r * (1 + _SLACK_REL) + _SLACK_ABS)
        cand, d = self._exact(cand, x)
        return np.sort(cand[d <= r])

    def pairs_within(self, r: float) -> np.ndarray:
        """All pairs (i, j), i < j, with distance <= r, as an (m, 2) array."""
        X = self.data.X
        if self._tree is None:
            i, j = np.triu_indices(self.data.n, k=1)
            pairs = np.column_stack([i, j]).astype(np.int64)
        else:
            pairs = self._tree.query_pairs(r * (1 + _SLACK_REL) + _SLACK_ABS, output_type="ndarray")
            pairs = np.sort(pairs.astype(np.int64), axis=1)
        if len(pairs) == 0:
            return np.empty((0, 2), dtype=np.int64)
        sq = np.zeros(len(pairs))
        for c in range(self.data.d):
            diff = X[pairs[:, 0], c] - X[pairs[:, 1], c]
            sq += diff * diff
        keep = np.sqrt(sq) <= r
        pairs = pairs[keep]
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        return pairs[order]


def build_index(data: LabeledDataset) -> NeighborIndex:
    return NeighborIndex(data)


def k_nearest(index: NeighborIndex, x, k: int) -> list[tuple[int, float]]:
    return index.k_nearest(x, k)
