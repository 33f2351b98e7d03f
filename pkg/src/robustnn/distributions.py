"""Synthetic distributions with a known conditional label probability.

Every distribution here has a uniform marginal on an axis-aligned box, so
the mass of a ball is the (normalised) volume of its intersection with the
box.  Only 1-D and 2-D boxes support ball masses.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class AnalyticDistribution:
    """Uniform marginal on ``[lo, hi]`` with label probability ``eta``.

    ``eta`` maps an ``(m, d)`` array to ``m`` values in [0, 1].
    """

    lo: np.ndarray
    hi: np.ndarray
    eta_fn: Callable[[np.ndarray], np.ndarray]
    name: str = "analytic"
    _volume: float = field(init=False, repr=False)

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=np.float64))
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError("support box needs lo < hi in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "_volume", float(np.prod(hi - lo)))

    @property
    def d(self) -> int:
        return self.lo.size

    def in_support(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.all((X >= self.lo) & (X <= self.hi), axis=1)

    def density(self, X) -> np.ndarray:
        return np.where(self.in_support(X), 1.0 / self._volume, 0.0)

    def eta(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.clip(np.asarray(self.eta_fn(X), dtype=np.float64).reshape(-1), 0.0, 1.0)

    def sample(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        X = self.lo + (self.hi - self.lo) * rng.random((n, self.d))
        y = (rng.random(n) < self.eta(X)).astype(np.int64)
        return X, y

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def ball_mass(self, x, r) -> np.ndarray | float:
        """mu(B(x, r)) for closed balls; vectorised over rows of x and r."""
        X = np.asarray(x, dtype=np.float64)
        scalar = X.ndim <= 1 and np.ndim(r) == 0
        X = X.reshape(-1, self.d)
        r = np.broadcast_to(np.asarray(r, dtype=np.float64), (X.shape[0],))
        if self.d == 1:
            length = np.minimum(X[:, 0] + r, self.hi[0]) - np.maximum(X[:, 0] - r, self.lo[0])
            mass = np.where(r >= 0, np.maximum(length, 0.0), 0.0) / self._volume
        elif self.d == 2:
            mass = disk_box_area(X, r, self.lo, self.hi) / self._volume
        else:
            raise ValueError(f"ball mass only available for d <= 2, got d={self.d}")
        mass = np.minimum(mass, 1.0)
        return float(mass[0]) if scalar else mass


def _chord_integral(u, r):
    """Antiderivative of sqrt(r^2 - u^2), evaluated at u clipped to [-r, r]."""
    u = np.clip(u, -r, r)
    safe = np.where(r > 0, r, 1.0)
    h = np.sqrt(np.maximum(r * r - u * u, 0.0))
    return np.where(r > 0, 0.5 * (u * h + r * r * np.arcsin(np.clip(u / safe, -1.0, 1.0))), 0.0)


def _quadrant_area(a, b, r):
    """Area of the origin-centred disk of radius r with u <= a and v <= b."""
    a = np.minimum(a, r)
    H = _chord_integral
    w = np.sqrt(np.maximum(r * r - np.minimum(b * b, r * r), 0.0))
    # b >= 0: integrand 2h for |u| >= w, b + h for |u| < w
    lo_end = np.minimum(a, -w)
    part1 = np.where(a > -r, 2 * (H(lo_end, r) - H(-r, r)), 0.0)
    mid_end = np.minimum(a, w)
    mid = np.where(a > -w, b * (mid_end + w) + H(mid_end, r) - H(-w, r), 0.0)
    hi_part = np.where(a > w, 2 * (H(a, r) - H(w, r)), 0.0)
    pos = part1 + mid + hi_part
    # b < 0: integrand b + h on |u| < w only
    neg = np.where(a > -w, b * (mid_end + w) + H(mid_end, r) - H(-w, r), 0.0)
    out = np.where(b >= 0, pos, neg)
    out = np.where(b <= -r, 0.0, out)
    return np.maximum(out, 0.0)


def disk_box_area(C, r, lo, hi) -> np.ndarray:
    """Area of B(c, r) intersected with the box [lo, hi], per row of C."""
    C = np.atleast_2d(np.asarray(C, dtype=np.float64))
    r = np.broadcast_to(np.asarray(r, dtype=np.float64), (C.shape[0],))
    r = np.maximum(r, 0.0)
    x1, x2 = lo[0] - C[:, 0], hi[0] - C[:, 0]
    y1, y2 = lo[1] - C[:, 1], hi[1] - C[:, 1]
    F = _quadrant_area
    area = F(x2, y2, r) - F(x1, y2, r) - F(x2, y1, r) + F(x1, y1, r)
    return np.maximum(area, 0.0)


def linear_eta_1d() -> AnalyticDistribution:
    """Uniform on [0, 1] with eta(x) = x."""
    return AnalyticDistribution([0.0], [1.0], lambda X: X[:, 0], name="linear-1d")


def constant_eta(value: float, d: int = 1) -> AnalyticDistribution:
    if not 0.0 <= value <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    return AnalyticDistribution(
        np.zeros(d), np.ones(d), lambda X: np.full(X.shape[0], value), name=f"constant-{value}-{d}d"
    )


def smooth_step_2d(width: float = 0.05, threshold: float = 0.5) -> AnalyticDistribution:
    """Uniform on [0, 1]^2 with eta a logistic step across x0 = threshold."""
    return AnalyticDistribution(
        np.zeros(2),
        np.ones(2),
        lambda X: 1.0 / (1.0 + np.exp(-(X[:, 0] - threshold) / width)),
        name="smooth-step-2d",
    )
