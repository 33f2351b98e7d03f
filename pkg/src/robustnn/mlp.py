"""Two-hidden-layer ReLU network with softmax output, trained by plain SGD.

Used as the neural substitute in black-box attacks.  Parameters serialise to
JSON: ``{"layer_sizes": [...], "weights": [[row-major floats], ...],
"biases": [[...], ...]}``.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .geometry import LabeledDataset, as_vector

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class MlpClassifier:
    weights: list  # weights[l] has shape (fan_in, fan_out)
    biases: list

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias vector per weight matrix")
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[1],):
                raise ValueError(f"layer {l}: weight {W.shape} and bias {b.shape} incompatible")
            if l and self.weights[l - 1].shape[1] != W.shape[0]:
                raise ValueError(f"layer {l}: expects {W.shape[0]} inputs, previous layer gives "
                                 f"{self.weights[l - 1].shape[1]}")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {l} has non-finite parameters")
        if self.weights[-1].shape[1] != 2:
            raise ValueError("output layer must have 2 units")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [W.shape[1] for W in self.weights]

    @classmethod
    def initialize(cls, layer_sizes, rng: np.random.Generator) -> "MlpClassifier":
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases)

    def _forward(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.layer_sizes[0]:
            raise ValueError(f"dimension mismatch: expected {self.layer_sizes[0]}, got {X.shape[1]}")
        acts = [X]
        pre = []
        h = X
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            pre.append(z)
            h = np.maximum(z, 0.0) if l < len(self.weights) - 1 else z
            acts.append(h)
        return acts, pre

    def predict_proba(self, X) -> np.ndarray:
        acts, _ = self._forward(X)
        return _softmax(acts[-1])

    def predict(self, X) -> np.ndarray:
        p = self.predict_proba(X)
        return (p[:, 1] >= p[:, 0]).astype(np.int64)

    def __call__(self, X):
        return self.predict(X)

    def loss(self, X, y) -> np.ndarray:
        acts, _ = self._forward(X)
        z = acts[-1]
        y = np.broadcast_to(np.asarray(y, dtype=np.int64), (z.shape[0],))
        zmax = z.max(axis=1, keepdims=True)
        lse = (zmax + np.log(np.exp(z - zmax).sum(axis=1, keepdims=True)))[:, 0]
        return lse - z[np.arange(z.shape[0]), y]

    def _backward(self, X, dlogits):
        """Backpropagate d(loss)/d(logits); returns (dX, dWs, dbs)."""
        acts, pre = self._forward(X)
        dWs = [None] * len(self.weights)
        dbs = [None] * len(self.weights)
        g = dlogits
        for l in range(len(self.weights) - 1, -1, -1):
            dWs[l] = acts[l].T @ g
            dbs[l] = g.sum(axis=0)
            g = g @ self.weights[l].T
            if l > 0:
                g = g * (pre[l - 1] > 0)
        return g, dWs, dbs

    def loss_gradient(self, X, y) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        p = self.predict_proba(X)
        y = np.broadcast_to(np.asarray(y, dtype=np.int64), (p.shape[0],))
        dlogits = p - np.eye(2)[y]
        dX, _, _ = self._backward(X, dlogits)
        return dX

    def class_score_gradient(self, X, cls) -> np.ndarray:
        """d/dx of the softmax probability of class ``cls``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        p = self.predict_proba(X)
        cls = np.broadcast_to(np.asarray(cls, dtype=np.int64), (p.shape[0],))
        pc = p[np.arange(p.shape[0]), cls]
        dlogits = pc[:, None] * (np.eye(2)[cls] - p)
        dX, _, _ = self._backward(X, dlogits)
        return dX

    def to_dict(self) -> dict:
        return {
            "layer_sizes": self.layer_sizes,
            "weights": [W.ravel(order="C").tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "MlpClassifier":
        sizes = rec["layer_sizes"]
        weights = [
            np.asarray(w, dtype=np.float64).reshape(a, b)
            for w, a, b in zip(rec["weights"], sizes[:-1], sizes[1:])
        ]
        return cls(weights, [np.asarray(b, dtype=np.float64) for b in rec["biases"]])

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> "MlpClassifier":
        return cls.from_dict(json.loads(text))


def mlp_train(
    data: LabeledDataset,
    hidden=(32, 32),
    epochs: int = 200,
    learning_rate: float = 0.1,
    seed: int = 0,
    batch_size: int = 32,
) -> MlpClassifier:
    """Fit by mini-batch gradient descent on mean cross-entropy.

    Deterministic for a given seed.  Raises :class:`TrainingDiverged` if the
    loss becomes non-finite.
    """
    if data.n == 0:
        raise ValueError("cannot train on an empty dataset")
    rng = np.random.default_rng(seed)
    net = MlpClassifier.initialize([data.d, *hidden, 2], rng)
    X, y = data.X, data.y
    onehot = np.eye(2)[y]
    for epoch in range(epochs):
        order = rng.permutation(data.n)
        for start in range(0, data.n, batch_size):
            idx = order[start:start + batch_size]
            p = net.predict_proba(X[idx])
            _, dWs, dbs = net._backward(X[idx], (p - onehot[idx]) / len(idx))
            for l in range(len(net.weights)):
                net.weights[l] -= learning_rate * dWs[l]
                net.biases[l] -= learning_rate * dbs[l]
        loss = float(net.loss(X, y).mean())
        if not np.isfinite(loss):
            raise TrainingDiverged(f"training loss became non-finite at epoch {epoch}")
        log.debug("epoch %d loss %.6f", epoch, loss)
    return net


def mlp_predict(clf: MlpClassifier, x) -> np.ndarray:
    return clf.predict_proba(as_vector(x, clf.layer_sizes[0]).reshape(1, -1))[0]


def mlp_gradient(clf: MlpClassifier, x, y_true: int) -> np.ndarray:
    return clf.loss_gradient(as_vector(x, clf.layer_sizes[0]).reshape(1, -1), y_true)[0]
