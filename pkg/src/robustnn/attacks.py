"""Direct attack, FGSM against kernel/MLP substitutes, substitute training and
adversarial data augmentation.

Every prepared attack reduces to a per-point direction ``u`` with
``|u|_2 = 1`` (or a sign vector in L-infinity mode), so the adversarial point
at radius r is simply ``x + r * u`` and a radius sweep reuses the directions.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .classifiers import KernelClassifier, KnnClassifier
from .geometry import LabeledDataset, NeighborIndex, as_vector
from .mlp import mlp_train


class AttackKind(str, enum.Enum):
    DIRECT = "direct"
    KERNEL = "kernel"
    BLACKBOX_KERNEL = "bb-kernel"
    BLACKBOX_MLP = "bb-mlp"


class AttackNotApplicable(ValueError):
    pass


@dataclass(frozen=True)
class AttackSpec:
    kind: AttackKind
    bandwidth: float = 0.1
    step: float = 0.1
    rounds: int = 2
    toward: bool = True
    norm: str = "l2"
    hidden: tuple = (32, 32)
    epochs: int = 300
    learning_rate: float = 0.05
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        if self.bandwidth <= 0 or self.step <= 0:
            raise ValueError("bandwidth and augmentation step must be positive")
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if self.norm not in ("l2", "linf"):
            raise ValueError("norm must be 'l2' or 'linf'")


# --- single-point primitives ---------------------------------------------

def _nearest_opposite(data: LabeledDataset, X, y):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.broadcast_to(np.asarray(y, dtype=np.int64), (X.shape[0],))
    out = np.empty_like(X)
    for label in (0, 1):
        rows = np.flatnonzero(y == label)
        if rows.size == 0:
            continue
        opp = np.flatnonzero(data.y != label)
        if opp.size == 0:
            raise AttackNotApplicable(f"no training point with label {1 - label}")
        ids, _ = NeighborIndex(data.subset(opp)).k_nearest_batch(X[rows], 1)
        out[rows] = data.X[opp[ids[:, 0]]]
    return out


def direct_directions(data: LabeledDataset, X, y, toward: bool = True) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    target = _nearest_opposite(data, X, y)
    diff = target - X if toward else X - target
    norm = np.linalg.norm(diff, axis=1, keepdims=True)
    # a query sitting on an opposite point has no direction; leave it in place
    return np.divide(diff, norm, out=np.zeros_like(diff), where=norm > 0)


def direct_attack(data: LabeledDataset, x, y: int, r: float, toward: bool = True) -> np.ndarray:
    """Move x by r along the line to its nearest oppositely labelled point.

    ``toward=False`` applies x + r (x - x') / |x - x'| literally, which moves
    away from that point.
    """
    x = as_vector(x, data.d)
    return x + r * direct_directions(data, x, y, toward)[0]


def sign_directions(grad, norm: str = "l2") -> np.ndarray:
    s = np.sign(np.atleast_2d(np.asarray(grad, dtype=np.float64)))
    if norm == "linf":
        return s
    k = np.sqrt((s != 0).sum(axis=1, keepdims=True))
    return np.divide(s, k, out=np.zeros_like(s), where=k > 0)


def fgsm(clf, x, y_true: int, r: float, norm: str = "l2") -> np.ndarray:
    """One signed-gradient step on the classifier's cross-entropy loss.

    In "l2" mode the sign vector is rescaled to Euclidean length r; in "linf"
    mode every moving coordinate shifts by exactly r.  Zero gradient
    coordinates stay put.
    """
    if not hasattr(clf, "loss_gradient"):
        raise AttackNotApplicable(f"{type(clf).__name__} exposes no gradient")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    g = clf.loss_gradient(x.reshape(1, -1), y_true)
    return x + r * sign_directions(g, norm)[0]


# --- substitute training --------------------------------------------------

def _fit_substitute(data, kind, spec: AttackSpec, seed):
    if kind == "kernel":
        return KernelClassifier(data, spec.bandwidth)
    if kind == "mlp":
        return mlp_train(data, hidden=spec.hidden, epochs=spec.epochs,
                         learning_rate=spec.learning_rate, seed=seed)
    raise ValueError(f"unknown substitute kind {kind!r}")


def train_substitute(
    seed_data: LabeledDataset,
    oracle: Callable[[np.ndarray], np.ndarray],
    kind: str = "kernel",
    rounds: int = 2,
    step: float = 0.1,
    seed: int = 0,
    spec: AttackSpec | None = None,
):
    """Fit a substitute on oracle labels, doubling the set each round.

    Each round adds ``x + step * sign(d p_c / dx)`` for every current point,
    where c is the substitute's predicted class.  Returns ``(substitute,
    final_training_set)``.
    """
    if seed_data.n == 0:
        raise ValueError("seed set is empty")
    if rounds < 0 or step <= 0:
        raise ValueError("need rounds >= 0 and step > 0")
    spec = spec or AttackSpec(AttackKind.BLACKBOX_KERNEL if kind == "kernel" else AttackKind.BLACKBOX_MLP)
    X = seed_data.X
    for rnd in range(rounds + 1):
        data = LabeledDataset(X, np.asarray(oracle(X), dtype=np.int64))
        sub = _fit_substitute(data, kind, spec, seed + rnd)
        if rnd == rounds:
            return sub, data
        cls = sub.predict(X)
        X = np.vstack([X, X + step * np.sign(sub.class_score_gradient(X, cls))])


# --- prepared attacks -----------------------------------------------------

@dataclass
class Attack:
    """An attack bound to a target; yields per-point perturbation directions."""

    spec: AttackSpec
    _directions: Callable[[np.ndarray, np.ndarray], np.ndarray]
    substitute: object = None
    substitute_train: LabeledDataset | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def name(self) -> str:
        return self.spec.kind.value

    def directions(self, X, y) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.broadcast_to(np.asarray(y, dtype=np.int64), (X.shape[0],))
        key = (X.tobytes(), y.tobytes())
        if key not in self._cache:
            self._cache = {key: self._directions(X, y)}
        return self._cache[key]

    def perturb(self, X, y, r: float) -> np.ndarray:
        if r < 0:
            raise ValueError("attack radius must be >= 0")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return X + r * self.directions(X, y)


def prepare_attack(
    spec: AttackSpec,
    train: LabeledDataset,
    target=None,
    seed_data: LabeledDataset | None = None,
) -> Attack:
    """Bind ``spec`` to a target classifier trained on ``train``.

    White-box attacks read ``train`` directly.  Black-box attacks only query
    ``target`` (default: 1-NN on ``train``) on points of ``seed_data``.
    """
    kind = spec.kind
    if kind is AttackKind.DIRECT:
        if np.unique(train.y).size < 2:
            raise AttackNotApplicable("direct attack needs both labels in the training set")
        return Attack(spec, lambda X, y: direct_directions(train, X, y, spec.toward))
    if kind is AttackKind.KERNEL:
        sub = KernelClassifier(train, spec.bandwidth)
        return Attack(spec, lambda X, y: sign_directions(sub.loss_gradient(X, y), spec.norm), sub, train)
    if seed_data is None:
        raise AttackNotApplicable(f"{kind.value} attack needs seed data")
    target = target if target is not None else KnnClassifier(train, 1)
    sub, sub_train = train_substitute(
        seed_data, target.predict, "kernel" if kind is AttackKind.BLACKBOX_KERNEL else "mlp",
        spec.rounds, spec.step, spec.seed, spec,
    )
    return Attack(spec, lambda X, y: sign_directions(sub.loss_gradient(X, y), spec.norm), sub, sub_train)


def augment_adversarial(
    data: LabeledDataset,
    specs: list[AttackSpec],
    defense_radius: float,
    seed_data: LabeledDataset | None = None,
) -> LabeledDataset:
    """Append one adversarial copy of every example per attack (labels kept)."""
    if not specs:
        raise ValueError("need at least one attack")
    out = data
    for spec in specs:
        attack = prepare_attack(spec, data, seed_data=seed_data)
        out = out.concat(LabeledDataset(attack.perturb(data.X, data.y, defense_radius), data.y))
    return out


ATTACK_CSV_FIELDS = ("test_id", "attack", "radius")


def write_attack_rows(path, attack: Attack, target, test: LabeledDataset, radii) -> None:
    """CSV rows (test_id, attack, radius, x0..x{d-1}, pred_before, pred_after)."""
    path = Path(path)
    before = target.predict(test.X)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*ATTACK_CSV_FIELDS, *(f"x{j}" for j in range(test.d)), "pred_before", "pred_after"])
        for r in radii:
            adv = attack.perturb(test.X, test.y, r)
            after = target.predict(adv)
            for i in range(test.n):
                w.writerow([i, attack.name, format(r, ".17g"), *(format(v, ".17g") for v in adv[i]),
                            int(before[i]), int(after[i])])
