"""k-NN, kernel and Bayes-optimal classifiers (the MLP lives in ``mlp``)."""
from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .distributions import AnalyticDistribution
from .geometry import LabeledDataset, NeighborIndex, as_vector


class KnnClassifier:
    """Plain k-NN vote; predicts 1 when at least k/2 neighbours say 1."""

    def __init__(self, data: LabeledDataset, k: int = 1):
        if k < 1 or k > data.n:
            raise ValueError(f"k must be in [1, {data.n}], got {k}")
        self.data = data
        self.k = k
        self.index = NeighborIndex(data)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        ids, _ = self.index.k_nearest_batch(X, self.k)
        votes = self.data.y[ids].sum(axis=1)
        return (2 * votes >= self.k).astype(np.int64)

    def predict_one(self, x) -> int:
        return int(self.predict(as_vector(x, self.data.d).reshape(1, -1))[0])

    def __call__(self, X) -> np.ndarray:
        return self.predict(X)


def knn_predict(clf: KnnClassifier, x) -> int:
    return clf.predict_one(x)


class KernelClassifier:
    """Gaussian-weighted class probabilities, exp(-|x - z|^2 / c) per point.

    Weights are normalised in log space, so far-away queries never hit 0/0;
    there is no hard nearest-neighbour fallback.
    """

    def __init__(self, train: LabeledDataset, c: float = 0.1):
        if c <= 0:
            raise ValueError("bandwidth c must be positive")
        if train.n == 0:
            raise ValueError("kernel classifier needs training points")
        self.train = train
        self.c = float(c)
        self.one_hot = np.eye(2)[train.y]
        self._members = [np.flatnonzero(train.y == k) for k in (0, 1)]

    def _logits(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.train.d:
            raise ValueError(f"dimension mismatch: expected {self.train.d}, got {X.shape[1]}")
        Z = self.train.X
        sq = (X**2).sum(1)[:, None] - 2 * X @ Z.T + (Z**2).sum(1)[None, :]
        return -np.maximum(sq, 0.0) / self.c, X

    def _class_log_mass(self, s):
        out = np.full((s.shape[0], 2), -np.inf)
        for k, idx in enumerate(self._members):
            if idx.size:
                out[:, k] = logsumexp(s[:, idx], axis=1)
        return out

    def predict_proba(self, X) -> np.ndarray:
        s, _ = self._logits(X)
        lm = self._class_log_mass(s)
        return np.exp(lm - logsumexp(lm, axis=1, keepdims=True))

    def predict(self, X) -> np.ndarray:
        p = self.predict_proba(X)
        return (p[:, 1] >= p[:, 0]).astype(np.int64)

    def loss(self, X, y) -> np.ndarray:
        """Cross-entropy of the predicted probabilities against labels y."""
        s, _ = self._logits(X)
        lm = self._class_log_mass(s)
        y = np.broadcast_to(np.asarray(y, dtype=np.int64), (lm.shape[0],))
        return logsumexp(lm, axis=1) - lm[np.arange(lm.shape[0]), y]

    def _weighted_means(self, X):
        s, X = self._logits(X)
        Z = self.train.X
        means = []
        for idx in (np.arange(self.train.n), *self._members):
            if idx.size == 0:
                means.append(None)
                continue
            w = np.exp(s[:, idx] - s[:, idx].max(axis=1, keepdims=True))
            w /= w.sum(axis=1, keepdims=True)
            means.append(w @ Z[idx])
        return X, means

    def loss_gradient(self, X, y) -> np.ndarray:
        """d/dx of the cross-entropy loss; equals (2/c)(m_all - m_y).

        m_all and m_y are kernel-weighted means of all training points and of
        the class-y points.
        """
        X, (m_all, m0, m1) = self._weighted_means(X)
        y = np.broadcast_to(np.asarray(y, dtype=np.int64), (X.shape[0],))
        grads = np.empty_like(X)
        for k, m in ((0, m0), (1, m1)):
            rows = y == k
            if not rows.any():
                continue
            if m is None:
                raise ValueError(f"class {k} has no training points; loss is infinite")
            grads[rows] = (2.0 / self.c) * (m_all[rows] - m[rows])
        return grads

    def class_score_gradient(self, X, cls) -> np.ndarray:
        """d/dx of the probability assigned to class ``cls``."""
        p = self.predict_proba(X)
        cls = np.broadcast_to(np.asarray(cls, dtype=np.int64), (p.shape[0],))
        pc = p[np.arange(p.shape[0]), cls]
        # dp/dx = p * dlog p/dx = -p * dL/dx
        return -pc[:, None] * self.loss_gradient(X, cls)

    def __call__(self, X) -> np.ndarray:
        return self.predict(X)


def kernel_predict(clf: KernelClassifier, x) -> np.ndarray:
    return clf.predict_proba(as_vector(x, clf.train.d).reshape(1, -1))[0]


def kernel_gradient(clf: KernelClassifier, x, y_true: int) -> np.ndarray:
    return clf.loss_gradient(as_vector(x, clf.train.d).reshape(1, -1), y_true)[0]


class BayesClassifier:
    """Predicts 1 exactly where eta(x) >= 1/2."""

    def __init__(self, dist: AnalyticDistribution):
        self.dist = dist

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dist.d:
            raise ValueError(f"dimension mismatch: expected {self.dist.d}, got {X.shape[1]}")
        if not np.all(self.dist.in_support(X)):
            raise ValueError("query lies outside the distribution's support")
        return (self.dist.eta(X) >= 0.5).astype(np.int64)

    def __call__(self, X) -> np.ndarray:
        return self.predict(X)


def bayes_predict(dist: AnalyticDistribution, x) -> int:
    return int(BayesClassifier(dist).predict(as_vector(x, dist.d).reshape(1, -1))[0])
