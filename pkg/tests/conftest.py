import itertools
import math

import numpy as np
import pytest

from robustnn.geometry import LabeledDataset


def scalar_distance(a, b):
    total = 0.0
    for u, v in zip(a, b):
        total += (u - v) * (u - v)
    return math.sqrt(total)


def brute_k_nearest(X, q, k):
    rows = sorted(range(len(X)), key=lambda i: (scalar_distance(X[i], q), i))
    return rows[:k]


def brute_separated(X, y, r, required=()):
    """Largest r-separated subset containing ``required``, by enumeration."""
    n = len(X)
    bad = [[scalar_distance(X[i], X[j]) <= r and y[i] != y[j] for j in range(n)] for i in range(n)]
    req = set(required)
    best = None
    for size in range(n, -1, -1):
        for combo in itertools.combinations(range(n), size):
            s = set(combo)
            if not req <= s:
                continue
            if any(bad[i][j] for i in combo for j in combo if i < j):
                continue
            return s
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def two_clusters():
    rng = np.random.default_rng(7)
    a = rng.normal([0.0, 0.0], 0.1, (30, 2))
    b = rng.normal([3.0, 0.0], 0.1, (30, 2))
    return LabeledDataset(np.vstack([a, b]), np.r_[np.zeros(30), np.ones(30)])


@pytest.fixture
def big_clusters():
    # large enough that k_n (Delta=0.45) stays below one cluster's size
    rng = np.random.default_rng(8)
    a = rng.normal([0.0, 0.0], 0.2, (400, 2))
    b = rng.normal([4.0, 0.0], 0.2, (400, 2))
    return LabeledDataset(np.vstack([a, b]), np.r_[np.zeros(400), np.ones(400)])


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES = []


def report(number, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
