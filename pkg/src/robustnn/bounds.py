"""Finite-sample quantities from the k-NN robustness analysis.

The constants C0, C1, C2 are never pinned down by the analysis; they are
caller-supplied and default to 1.  All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .robust1nn import compute_kn


@dataclass(frozen=True)
class TheoryBounds:
    k_n: int
    beta_n: float
    a_n: float
    b_n: float
    p_n: float
    kn_ratio_required: float  # minimum k_n / n for the large-k robustness rate
    kn_high_k_min: float  # C1 sqrt(d n log n + n log(1/delta)) / Delta
    pn_high_k_min: float  # (k_n / n)(1 + C2 sqrt((d log n + log(1/delta)) / k_n))
    c_dkdelta: float
    n_threshold: float


def beta_n(n: int, d: int, delta: float) -> float:
    return math.sqrt((4.0 / n) * ((d + 1) * math.log(2 * n) + math.log(8.0 / delta)))


def c_dkdelta(d: int, k: int, delta: float) -> float:
    return 4 * (d + 1) + math.sqrt(16 * (d + 1) ** 2 + 8 * (math.log(8.0 / delta) + k + 1))


def sample_threshold(d: int, k: int, delta: float, p: float) -> float:
    """Smallest n covered by the fixed-k finite-sample rate."""
    c = c_dkdelta(d, k, delta)
    return max(1e4, c**4 / ((k + 1) ** 2 * p**2))


def theory_bounds(n: int, d: int, delta: float, Delta: float, k: int, p: float,
                  C0: float = 1.0, C1: float = 1.0, C2: float = 1.0) -> TheoryBounds:
    if n < 2 or d < 1 or k < 1:
        raise ValueError("need n >= 2, d >= 1, k >= 1")
    if not 0 < delta < 1 or not 0 < Delta < 0.5 or not 0 < p <= 1:
        raise ValueError("need 0 < delta < 1, 0 < Delta < 1/2, 0 < p <= 1")
    complexity = d * math.log(n) + math.log(1.0 / delta)
    kn = compute_kn(n, Delta, delta)
    a = C0 / n * complexity
    b = C0 * math.sqrt(complexity / n)
    beta = beta_n(n, d, delta)
    ratio = (2 * beta + b + math.sqrt((2 * beta + b) ** 2 + 2 * Delta * (2 * beta**2 + a))) / Delta
    pn = kn / n + C0 / n * (complexity + math.sqrt(kn * complexity))
    kn_min = C1 * math.sqrt(d * n * math.log(n) + n * math.log(1.0 / delta)) / Delta
    pn_min = kn / n * (1 + C2 * math.sqrt(complexity / kn))
    return TheoryBounds(
        k_n=kn, beta_n=beta, a_n=a, b_n=b, p_n=pn,
        kn_ratio_required=ratio, kn_high_k_min=kn_min, pn_high_k_min=pn_min,
        c_dkdelta=c_dkdelta(d, k, delta), n_threshold=sample_threshold(d, k, delta, p),
    )
