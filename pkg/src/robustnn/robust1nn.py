"""Training-set pruning for a robust 1-NN classifier.

Each point gets a confident label from the vote of its k_n nearest
neighbours (or an abstention).  Points whose confident label matches their
own label and agrees with every training point within ``r`` are marked red.
The pruned set is the largest r-separated subset that keeps every red point;
for binary labels that is an independent-set problem on a bipartite conflict
graph, solved exactly by maximum matching and Konig's theorem.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import LabeledDataset, NeighborIndex, as_vector


class ConfidentLabel(enum.IntEnum):
    ZERO = 0
    ONE = 1
    ABSTAIN = -1


@dataclass(frozen=True)
class RobustParams:
    r: float
    Delta: float = 0.45
    delta: float = 0.1

    def __post_init__(self):
        if not (self.r >= 0 and math.isfinite(self.r)):
            raise ValueError(f"defense radius must be finite and >= 0, got {self.r}")
        if not 0 < self.Delta < 0.5:
            raise ValueError(f"Delta must lie in (0, 1/2), got {self.Delta}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


class EmptyPrunedSet(ValueError):
    pass


class NotSeparated(ValueError):
    pass


def compute_kn(n: int, Delta: float, delta: float) -> int:
    """ceil(3 ln(2n/delta) / Delta^2), capped at n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 < Delta < 0.5 or not 0 < delta < 1:
        raise ValueError("need 0 < Delta < 1/2 and 0 < delta < 1")
    return min(n, math.ceil(3.0 * math.log(2.0 * n / delta) / Delta**2))


def _classify_mean(ybar, Delta):
    out = np.full(ybar.shape, int(ConfidentLabel.ABSTAIN), dtype=np.int64)
    out[ybar > 0.5 + Delta] = int(ConfidentLabel.ONE)
    out[ybar < 0.5 - Delta] = int(ConfidentLabel.ZERO)
    return out


def confident_labels(data: LabeledDataset, params: RobustParams, Q=None, index=None) -> np.ndarray:
    """Confident labels (0, 1 or -1 for abstain) at each query row.

    Queries default to the training points themselves.
    """
    if data.n == 0:
        raise ValueError("dataset is empty")
    index = index or NeighborIndex(data)
    kn = compute_kn(data.n, params.Delta, params.delta)
    Q = data.X if Q is None else np.atleast_2d(np.asarray(Q, dtype=np.float64))
    ids, _ = index.k_nearest_batch(Q, kn)
    ybar = data.y[ids].mean(axis=1)
    return _classify_mean(ybar, params.Delta)


def confident_label(data: LabeledDataset, params: RobustParams, x) -> ConfidentLabel:
    x = as_vector(x, data.d)
    return ConfidentLabel(int(confident_labels(data, params, x.reshape(1, -1))[0]))


def mark_red_from_labels(data: LabeledDataset, r: float, conf: np.ndarray, index=None) -> np.ndarray:
    """Red ids given precomputed confident labels of the training points."""
    index = index or NeighborIndex(data)
    candidates = np.flatnonzero(conf == data.y)
    red = []
    for i in candidates:
        near = index.within(data.X[i], r)
        if np.all(conf[near] == conf[i]):
            red.append(i)
    return np.asarray(red, dtype=np.int64)


def mark_red(data: LabeledDataset, params: RobustParams, index=None) -> np.ndarray:
    index = index or NeighborIndex(data)
    conf = confident_labels(data, params, index=index)
    return mark_red_from_labels(data, params.r, conf, index)


@dataclass
class ConflictGraph:
    """Oppositely labelled candidate pairs within distance r.

    ``left``/``right`` hold dataset ids of label-0/label-1 candidates;
    ``indptr``/``indices`` give each left vertex's right neighbours (positions
    into ``right``).
    """

    left: np.ndarray
    right: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    required: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def n_edges(self) -> int:
        return int(self.indices.size)

    def edges(self) -> np.ndarray:
        """(m, 2) array of (left dataset id, right dataset id)."""
        rows = np.repeat(np.arange(self.left.size), np.diff(self.indptr))
        return np.column_stack([self.left[rows], self.right[self.indices]])


def _conflict_pairs(data, r, index):
    pairs = index.pairs_within(r)
    if len(pairs) == 0:
        return pairs
    return pairs[data.y[pairs[:, 0]] != data.y[pairs[:, 1]]]


def build_conflict_graph(data: LabeledDataset, r: float, candidates, pairs=None, index=None) -> ConflictGraph:
    candidates = np.asarray(sorted(set(int(c) for c in candidates)), dtype=np.int64)
    if pairs is None:
        pairs = _conflict_pairs(data, r, index or NeighborIndex(data))
    is_cand = np.zeros(data.n, dtype=bool)
    is_cand[candidates] = True
    left = candidates[data.y[candidates] == 0]
    right = candidates[data.y[candidates] == 1]
    if len(pairs):
        keep = is_cand[pairs[:, 0]] & is_cand[pairs[:, 1]]
        pairs = pairs[keep]
    # orient every pair as (label-0 id, label-1 id)
    if len(pairs):
        flip = data.y[pairs[:, 0]] == 1
        pairs = np.where(flip[:, None], pairs[:, ::-1], pairs)
    left_pos = np.full(data.n, -1, dtype=np.int64)
    left_pos[left] = np.arange(left.size)
    right_pos = np.full(data.n, -1, dtype=np.int64)
    right_pos[right] = np.arange(right.size)
    if len(pairs):
        u = left_pos[pairs[:, 0]]
        v = right_pos[pairs[:, 1]]
        order = np.lexsort((v, u))
        u, v = u[order], v[order]
    else:
        u = v = np.empty(0, dtype=np.int64)
    indptr = np.zeros(left.size + 1, dtype=np.int64)
    np.add.at(indptr, u + 1, 1)
    indptr = np.cumsum(indptr)
    return ConflictGraph(left, right, indptr, v.astype(np.int64))


def max_independent_set(graph: ConflictGraph) -> np.ndarray:
    """Dataset ids of a maximum independent set of the bipartite graph."""
    nl, nr = graph.left.size, graph.right.size
    ml, mr = _kernels.hopcroft_karp(nl, nr, graph.indptr, graph.indices)
    seen_l, seen_r = _kernels.alternating_reach(nl, nr, graph.indptr, graph.indices, ml, mr)
    # Konig: cover = (L \ Z) u (R n Z); independent set is its complement
    keep = np.concatenate([graph.left[seen_l], graph.right[~seen_r]])
    return np.sort(keep)


def is_r_separated(data: LabeledDataset, ids, r: float) -> bool:
    ids = np.asarray(sorted(set(int(i) for i in ids)), dtype=np.int64)
    if ids.size < 2:
        return True
    sub = data.subset(ids)
    pairs = NeighborIndex(sub).pairs_within(r)
    return not np.any(sub.y[pairs[:, 0]] != sub.y[pairs[:, 1]]) if len(pairs) else True


def max_separated_subset(data: LabeledDataset, r: float, required=(), index=None, pairs=None) -> np.ndarray:
    """Largest r-separated subset of ``data`` containing ``required``.

    Returns sorted example ids.  Raises :class:`NotSeparated` if the required
    points are not r-separated themselves.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    index = index or NeighborIndex(data)
    if pairs is None:
        pairs = _conflict_pairs(data, r, index)
    req = np.zeros(data.n, dtype=bool)
    req[np.asarray(list(required), dtype=np.int64)] = True
    if len(pairs) and np.any(req[pairs[:, 0]] & req[pairs[:, 1]]):
        raise NotSeparated("required points are not r-separated")
    excluded = req.copy()
    if len(pairs):
        # a free point in conflict with a required point can never be kept
        excluded[pairs[req[pairs[:, 0]], 1]] = True
        excluded[pairs[req[pairs[:, 1]], 0]] = True
    candidates = np.flatnonzero(~excluded)
    graph = build_conflict_graph(data, r, candidates, pairs=pairs)
    keep = np.concatenate([np.flatnonzero(req), max_independent_set(graph)])
    return np.sort(keep)


@dataclass
class PruneResult:
    data: LabeledDataset
    kept: np.ndarray
    red: np.ndarray
    kn: int


def robust_1nn_prune(data: LabeledDataset, params: RobustParams, conf=None, index=None) -> PruneResult:
    """Pruned training set plus bookkeeping (kept ids, red ids, k_n).

    ``conf`` may carry precomputed confident labels; they depend on Delta and
    delta only, not on r.
    """
    if data.n == 0:
        raise ValueError("dataset is empty")
    index = index or NeighborIndex(data)
    if conf is None:
        conf = confident_labels(data, params, index=index)
    red = mark_red_from_labels(data, params.r, conf, index)
    kept = max_separated_subset(data, params.r, red, index=index)
    if kept.size == 0:
        raise EmptyPrunedSet(
            f"pruning removed every point (r={params.r}, Delta={params.Delta}); lower r or Delta"
        )
    return PruneResult(data.subset(kept), kept, red, compute_kn(data.n, params.Delta, params.delta))


def robust_1nn_train(data: LabeledDataset, params: RobustParams) -> LabeledDataset:
    return robust_1nn_prune(data, params).data
