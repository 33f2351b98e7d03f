"""Robustness certificates, attack-based accuracy, astuteness, and the
interior / probability-radius oracles for analytic distributions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classifiers import KnnClassifier
from .distributions import AnalyticDistribution
from .geometry import LabeledDataset, NeighborIndex, as_vector

# opposite points tried as flip witnesses for the upper bound
WITNESS_CANDIDATES = 16


@dataclass(frozen=True)
class RobustnessCertificate:
    """Bounds on the 1-NN robustness radius at a point.

    ``lower`` is sound against any perturbation; ``upper`` is the length of
    an explicit perturbation that flips the prediction.
    """

    lower: float
    upper: float
    predicted: int


def certify_batch(data: LabeledDataset, X, index: NeighborIndex | None = None,
                  candidates: int = WITNESS_CANDIDATES) -> list[RobustnessCertificate]:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if data.n == 0:
        raise ValueError("dataset is empty")
    index = index or NeighborIndex(data)
    ids, dists = index.k_nearest_batch(X, 1)
    pred = data.y[ids[:, 0]]
    d_same = dists[:, 0]
    by_label = {}
    for label in (0, 1):
        members = np.flatnonzero(data.y == label)
        by_label[label] = (members, NeighborIndex(data.subset(members)) if members.size else None)

    out = []
    for i, x in enumerate(X):
        opp_ids, opp_index = by_label[1 - pred[i]]
        if opp_index is None:
            out.append(RobustnessCertificate(math.inf, math.inf, int(pred[i])))
            continue
        m = min(candidates, opp_ids.size)
        cand, cand_d = opp_index.k_nearest_batch(x.reshape(1, -1), m)
        lower = max(0.0, float(cand_d[0, 0] - d_same[i]) / 2.0)
        same = data.X[by_label[pred[i]][0]]
        upper = _segment_witness(x, data.X[opp_ids[cand[0]]], same)
        out.append(RobustnessCertificate(lower, max(upper, lower), int(pred[i])))
    return out


def _segment_witness(x, P, S):
    """Shortest flip found walking from x straight to each row of P.

    Along x + t (p - x) the squared-distance gap between p and a same-label
    point s is linear in t, so the first t where p beats every s is exact.
    """
    V = P - x  # (m, d)
    A = ((x - P) ** 2).sum(1)[:, None] - ((x - S) ** 2).sum(1)[None, :]
    B = V @ S.T - (V * P).sum(1)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(B < 0, -A / (2.0 * B), 0.0)
    t_star = np.clip(t.max(axis=1), 0.0, 1.0)
    return float(np.min(t_star * np.linalg.norm(V, axis=1)))


def certify_1nn_radius(data: LabeledDataset, x, index: NeighborIndex | None = None) -> RobustnessCertificate:
    x = as_vector(x, data.d)
    return certify_batch(data, x.reshape(1, -1), index)[0]


def _predict(clf, X):
    return np.asarray(clf.predict(X) if hasattr(clf, "predict") else clf(X))


def empirical_robust_accuracy(classifier, attacks, r: float, test: LabeledDataset) -> float:
    """Fraction of test points classified correctly before and after every attack."""
    if test.n == 0:
        return float("nan")
    ok = _predict(classifier, test.X) == test.y
    if r > 0:
        for attack in attacks:
            ok &= _predict(classifier, attack.perturb(test.X, test.y, r)) == test.y
    return float(ok.mean())


@dataclass(frozen=True)
class AstutenessEstimate:
    value: float
    certified: bool


def certified_astuteness(certs, test: LabeledDataset, r: float) -> float:
    lower = np.array([c.lower for c in certs])
    pred = np.array([c.predicted for c in certs])
    return float(((pred == test.y) & (lower >= r)).mean())


def astuteness_estimate(classifier, r: float, test: LabeledDataset, attacks=()) -> AstutenessEstimate:
    """Certified astuteness for 1-NN; attack-based accuracy otherwise.

    The certified value counts points that are correct with certified lower
    radius >= r, so it never exceeds the true astuteness.
    """
    if isinstance(classifier, KnnClassifier) and classifier.k == 1:
        certs = certify_batch(classifier.data, test.X, classifier.index)
        return AstutenessEstimate(certified_astuteness(certs, test, r), True)
    return AstutenessEstimate(empirical_robust_accuracy(classifier, attacks, r, test), False)


# --- analytic-distribution oracles -----------------------------------------

def probability_radius(dist: AnalyticDistribution, x, p: float, tol: float = 1e-9) -> float:
    """inf{r : mu(B(x, r)) >= p}, by bisection."""
    return float(probability_radii(dist, np.atleast_2d(as_vector(x, dist.d)), p, tol)[0])


def probability_radii(dist: AnalyticDistribution, X, p: float, tol: float = 1e-9) -> np.ndarray:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if p == 0.0:
        return np.zeros(X.shape[0])
    hi = np.full(X.shape[0], 2.0 * dist.diameter)
    if np.any(dist.ball_mass(X, hi) < p - 1e-12):
        raise ValueError(f"ball mass {p} is not reachable")
    lo = np.zeros(X.shape[0])
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        enough = dist.ball_mass(X, mid) >= p
        hi = np.where(enough, mid, hi)
        lo = np.where(enough, lo, mid)
    return hi


def _ball_nodes(d, radius, h):
    """Grid offsets inside the closed ball plus points on its boundary."""
    if radius <= 0:
        return np.zeros((1, d))
    m = int(math.floor(radius / h))
    steps = np.arange(-m, m + 1) * h
    if d == 1:
        return np.concatenate([steps, [-radius, radius]]).reshape(-1, 1)
    gx, gy = np.meshgrid(steps, steps, indexing="ij")
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    grid = grid[(grid**2).sum(1) <= radius * radius]
    k = max(8, int(math.ceil(2 * math.pi * radius / h)))
    ang = np.linspace(0.0, 2 * math.pi, k, endpoint=False)
    ring = radius * np.column_stack([np.cos(ang), np.sin(ang)])
    return np.vstack([grid, ring])


@dataclass(frozen=True)
class InteriorCheck:
    """Grid verdict on membership in a strict interior.

    The check visits grid nodes of spacing ``resolution`` (plus ball
    boundaries), so it can miss violations that fall between nodes.
    """

    inside: bool
    resolution: float
    nodes_checked: int

    def __bool__(self):
        return self.inside


def in_strict_interior(dist: AnalyticDistribution, x, r: float, Delta: float, p: float,
                       sign: str = "+", resolution: float | None = None) -> InteriorCheck:
    """Whether every x' within r of x has eta strictly past 1/2 +- Delta on
    its whole p-mass ball.

    At r = 0 the condition is applied at x itself.  The ball around x is
    checked with its boundary included, which only makes the answer more
    conservative.
    """
    if dist.d not in (1, 2):
        raise ValueError(f"interior checks support d in (1, 2), got {dist.d}")
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    if r < 0 or not 0 <= Delta < 0.5 or not 0 <= p <= 1:
        raise ValueError("need r >= 0, 0 <= Delta < 1/2, 0 <= p <= 1")
    x = as_vector(x, dist.d)
    h = resolution if resolution is not None else (r / 50.0 if r > 0 else 1e-3)
    outer = x + _ball_nodes(dist.d, r, h)
    outer = outer[dist.in_support(outer)]
    radii = probability_radii(dist, outer, p)
    if not np.any(radii > 0):
        # every p-mass ball is the single point x'
        eta = dist.eta(outer)
        ok = np.all(eta > 0.5 + Delta) if sign == "+" else np.all(eta < 0.5 - Delta)
        return InteriorCheck(bool(ok), h, outer.shape[0])
    checked = 0
    for xp, rp in zip(outer, radii):
        inner = xp + _ball_nodes(dist.d, rp, h)
        inner = inner[dist.in_support(inner)]
        eta = dist.eta(inner)
        checked += inner.shape[0]
        ok = np.all(eta > 0.5 + Delta) if sign == "+" else np.all(eta < 0.5 - Delta)
        if not ok:
            return InteriorCheck(False, h, checked)
    return InteriorCheck(True, h, checked)


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    stderr: float


def bayes_astuteness(dist: AnalyticDistribution, r: float, samples: int = 20000, seed: int = 0,
                     resolution: float | None = None) -> MonteCarloEstimate:
    """Monte Carlo estimate of E[eta 1(X in X+)] + E[(1 - eta) 1(X in X-)]
    with interiors taken at (r, Delta=0, p=0)."""
    rng = np.random.default_rng(seed)
    X, _ = dist.sample(samples, rng)
    eta = dist.eta(X)
    vals = np.empty(samples)
    for i, x in enumerate(X):
        if eta[i] > 0.5:
            hit = bool(in_strict_interior(dist, x, r, 0.0, 0.0, "+", resolution))
            vals[i] = eta[i] if hit else 0.0
        elif eta[i] < 0.5:
            hit = bool(in_strict_interior(dist, x, r, 0.0, 0.0, "-", resolution))
            vals[i] = 1.0 - eta[i] if hit else 0.0
        else:
            vals[i] = 0.0
    return MonteCarloEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)))
