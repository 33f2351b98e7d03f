"""Compare the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import sys
import timeit

import numpy as np

from robustnn import _fallback
from robustnn.datasets import HalfmoonSpec, gen_halfmoon
from robustnn.geometry import NeighborIndex
from robustnn.robust1nn import build_conflict_graph

try:
    from robustnn import _core
except ImportError:
    sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation`")


def cases():
    rng = np.random.default_rng(0)
    X = rng.random((4000, 8))
    Q = rng.random((200, 8))
    yield "scan_k_nearest 4000x8, 200 queries, k=10", lambda m: m.scan_k_nearest(X, Q, 10)

    data = gen_halfmoon(HalfmoonSpec(3000, 0.2, 0))
    g = build_conflict_graph(data, 0.3, range(data.n), index=NeighborIndex(data))
    nl, nr = len(g.left), len(g.right)
    indptr = np.asarray(g.indptr, dtype=np.int64)
    indices = np.asarray(g.indices, dtype=np.int64)
    yield (f"hopcroft_karp halfmoon n=3000 r=0.3 ({indices.size} edges)",
           lambda m: m.hopcroft_karp(nl, nr, indptr, indices))

    ml, mr = _core.hopcroft_karp(nl, nr, indptr, indices)
    ml, mr = np.asarray(ml), np.asarray(mr)
    yield "alternating_reach same graph", lambda m: m.alternating_reach(nl, nr, indptr, indices, ml, mr)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'kernel':58s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s}")
    for name, fn in cases():
        a, b = fn(_fallback), fn(_core)
        for u, v in zip(a, b):
            assert np.array_equal(np.asarray(u), np.asarray(v)), f"backends disagree on {name}"
        t_py = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat))
        t_c = min(timeit.repeat(lambda: fn(_core), number=1, repeat=args.repeat))
        print(f"{name:58s} {t_py:10.4f} {t_c:11.4f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
