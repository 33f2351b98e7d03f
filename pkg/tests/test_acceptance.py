"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line (also collected in the terminal
summary) before asserting.
"""
import math
import time

import numpy as np
import pytest

from robustnn.attacks import AttackKind, AttackSpec, prepare_attack, train_substitute
from robustnn.bounds import beta_n
from robustnn.classifiers import KernelClassifier, KnnClassifier
from robustnn.datasets import HalfmoonSpec, gen_halfmoon, sample_analytic
from robustnn.distributions import constant_eta, linear_eta_1d
from robustnn.experiment import ExperimentConfig, read_results, run_experiment
from robustnn.geometry import LabeledDataset
from robustnn.metrics import bayes_astuteness, certify_batch
from robustnn.mlp import MlpClassifier
from robustnn.robust1nn import RobustParams, compute_kn, is_r_separated, mark_red, max_separated_subset

from conftest import brute_separated, report


def central_diff(f, x):
    h = 1e-6 * (1 + np.linalg.norm(x))
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)


def test_c01_exact_solver_matches_enumeration():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    mismatches = 0
    trials = 120
    for _ in range(trials):
        n = int(rng.integers(1, 15))
        X = rng.random((n, 2))
        y = rng.integers(0, 2, n)
        r = float(rng.uniform(0.0, 0.6))
        # a required set that is itself separated: a random subset of a brute-force optimum
        base = sorted(brute_separated(X.tolist(), y.tolist(), r))
        required = [i for i in base if rng.random() < 0.4]
        expect = brute_separated(X.tolist(), y.tolist(), r, required)
        got = max_separated_subset(LabeledDataset(X, y), r, required)
        ok = len(got) == len(expect) and set(required) <= set(got.tolist())
        ok = ok and is_r_separated(LabeledDataset(X, y), got, r)
        mismatches += not ok
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 60
    report(1, ok, f"exact solver vs enumeration: {trials} instances, {mismatches} mismatches, {elapsed:.1f}s")
    assert ok


def test_c02_red_points_are_separated():
    rng = np.random.default_rng(202)
    violations = nonempty = 0
    trials = 1000
    for t in range(trials):
        n = int(rng.integers(2, 120))
        kind = t % 3
        if kind == 0:
            X = rng.random((n, 2))
            y = rng.integers(0, 2, n)
        elif kind == 1:
            # two clusters with label noise so that some points turn red
            n = int(rng.integers(150, 500))
            y = rng.integers(0, 2, n)
            X = rng.normal(0, 0.3, (n, 2)) + np.c_[3.0 * y, np.zeros(n)]
            flip = rng.random(n) < 0.05
            y = np.where(flip, 1 - y, y)
        else:
            X = rng.normal(size=(n, int(rng.integers(1, 4))))
            y = (X[:, 0] > 0).astype(int)
        Delta = float(rng.uniform(0.3, 0.49) if kind == 1 else rng.uniform(0.05, 0.49))
        params = RobustParams(float(rng.uniform(0.0, 1.5)), Delta, float(rng.uniform(0.01, 0.5)))
        data = LabeledDataset(X, y)
        red = np.asarray(mark_red(data, params))
        nonempty += red.size > 1
        violations += not is_r_separated(data, red, params.r)
    ok = violations == 0
    report(2, ok, f"red sets r-separated: {trials} fuzz cases ({nonempty} with 2+ red points), "
                  f"{violations} violations")
    assert ok


def test_c03_certificate_soundness():
    train = gen_halfmoon(HalfmoonSpec(1000, 0.2, seed=31))
    test = gen_halfmoon(HalfmoonSpec(500, 0.2, seed=32))
    seed_set = gen_halfmoon(HalfmoonSpec(100, 0.2, seed=33))
    target = KnnClassifier(train, 1)
    specs = [AttackSpec("direct"), AttackSpec("direct", toward=False), AttackSpec("kernel"),
             AttackSpec("bb-kernel"), AttackSpec("bb-mlp", epochs=50)]
    attacks = [prepare_attack(s, train, target, seed_set) for s in specs]
    certs = certify_batch(train, test.X, target.index)
    lower = np.array([c.lower for c in certs])
    base = target.predict(test.X)
    rng = np.random.default_rng(34)
    violations = checks = 0
    for frac in (0.25, 0.5, 0.9, 0.999999):
        R = lower * frac
        for att in attacks:
            U = att.directions(test.X, test.y)
            adv = test.X + R[:, None] * U
            violations += int(np.sum(target.predict(adv) != base))
            checks += test.n
        U = rng.normal(size=test.X.shape)
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        violations += int(np.sum(target.predict(test.X + R[:, None] * U) != base))
        checks += test.n
    ok = violations == 0
    report(3, ok, f"certificate soundness: {test.n} points x {len(attacks)} attacks + random, "
                  f"{checks} perturbations, {violations} flips below the lower bound")
    assert ok


def test_c04_gradients_match_finite_differences():
    rng = np.random.default_rng(404)
    worst_k = worst_m = 0.0
    trials = 120
    for _ in range(trials):
        n, d = int(rng.integers(2, 40)), int(rng.integers(1, 6))
        y = rng.integers(0, 2, n)
        y[:2] = [0, 1]
        clf = KernelClassifier(LabeledDataset(rng.random((n, d)), y), c=float(rng.uniform(0.05, 1.0)))
        x = rng.random(d)
        label = int(rng.integers(0, 2))
        g = clf.loss_gradient(x.reshape(1, -1), label)[0]
        fd = central_diff(lambda v: clf.loss(v.reshape(1, -1), label)[0], x)
        worst_k = max(worst_k, rel_err(g, fd))
    for _ in range(trials):
        d = int(rng.integers(1, 6))
        net = MlpClassifier.initialize([d, int(rng.integers(2, 12)), int(rng.integers(2, 12)), 2], rng)
        for b in net.biases:
            b += rng.normal(size=b.shape) * 0.1
        x = rng.normal(size=d)
        label = int(rng.integers(0, 2))
        g = net.loss_gradient(x.reshape(1, -1), label)[0]
        fd = central_diff(lambda v: net.loss(v.reshape(1, -1), label)[0], x)
        worst_m = max(worst_m, rel_err(g, fd))
    ok = worst_k <= 1e-5 and worst_m <= 1e-5
    report(4, ok, f"gradient checks: {trials} kernel (max rel err {worst_k:.1e}), "
                  f"{trials} MLP (max rel err {worst_m:.1e})")
    assert ok


def test_c05_halfmoon_direct_attack_ordering(tmp_path):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(dataset="halfmoon", n=2000, sigma=0.2, attacks=["direct"],
                           methods=["StandardNN", "RobustNN", "ATNN"], seed=0)
    rows = read_results(run_experiment(cfg, tmp_path).csv_path)
    acc = {(r["method"], float(r["radius"])): float(r["adversarial_accuracy"]) for r in rows}
    radii = sorted({float(r["radius"]) for r in rows})
    top = radii[-1]
    beats_std = all(acc["RobustNN", r] >= acc["StandardNN", r] for r in radii if r >= 0.1)
    beats_at = acc["RobustNN", top] >= acc["ATNN", top]
    elapsed = time.perf_counter() - t0
    ok = beats_std and beats_at and elapsed < 300
    curve = " ".join(f"{r:g}:{acc['RobustNN', r]:.3f}/{acc['StandardNN', r]:.3f}/{acc['ATNN', r]:.3f}"
                     for r in radii if r >= 0.1)
    report(5, ok, f"halfmoon direct sweep Robust/Std/ATNN {curve}; {elapsed:.0f}s")
    assert ok


def test_c06_halfmoon_1nn_accuracy():
    train = gen_halfmoon(HalfmoonSpec(2000, 0.2, seed=0))
    test = gen_halfmoon(HalfmoonSpec(1000, 0.2, seed=1))
    acc = float((KnnClassifier(train, 1).predict(test.X) == test.y).mean())
    ok = acc >= 0.93
    report(6, ok, f"halfmoon 1-NN test accuracy {acc:.3f} (>= 0.93)")
    assert ok


def test_c07_bayes_astuteness_closed_forms():
    d = linear_eta_1d()
    a1 = bayes_astuteness(d, 0.1, samples=20000, seed=7)
    a0 = bayes_astuteness(d, 0.0, samples=20000, seed=7)
    ok = abs(a1.value - 0.64) <= 0.02 and abs(a0.value - 0.75) <= 0.02
    report(7, ok, f"Bayes astuteness r=0.1: {a1.value:.4f}+-{a1.stderr:.4f} (0.64), "
                  f"r=0: {a0.value:.4f}+-{a0.stderr:.4f} (0.75)")
    assert ok


def test_c08_upper_bound_shrinks_with_n():
    t0 = time.perf_counter()
    dist = constant_eta(0.8, 2)
    test = sample_analytic(dist, 200, seed=81)
    med = {}
    for n in (100, 10000):
        certs = certify_batch(sample_analytic(dist, n, seed=82), test.X)
        med[n] = float(np.median([c.upper for c in certs]))
    elapsed = time.perf_counter() - t0
    ratio = med[100] / med[10000]
    ok = ratio >= 2 and elapsed < 120
    report(8, ok, f"median upper radius n=100 {med[100]:.4f} -> n=10000 {med[10000]:.4f} "
                  f"(x{ratio:.1f} drop, {elapsed:.1f}s)")
    assert ok


def test_c09_kn_and_beta():
    kn = compute_kn(2000, 0.45, 0.1)
    b = beta_n(2, 1, 0.1)
    ok = kn == 157 and abs(b - 3.783) <= 1e-3
    report(9, ok, f"k_n(2000, 0.45, 0.1) = {kn} (157); beta_n(2, 1, 0.1) = {b:.5f} (3.783)")
    assert ok


def test_c10_kernel_substitute_agreement():
    train = gen_halfmoon(HalfmoonSpec(2000, 0.2, seed=100))
    seed_set = gen_halfmoon(HalfmoonSpec(200, 0.2, seed=101))
    test = gen_halfmoon(HalfmoonSpec(1000, 0.2, seed=102))
    target = KnnClassifier(train, 1)
    sub, sub_train = train_substitute(seed_set, target.predict, "kernel", rounds=2, step=0.1)
    agree = float((sub.predict(test.X) == target.predict(test.X)).mean())
    ok = agree >= 0.9
    report(10, ok, f"kernel substitute ({sub_train.n} queries) agrees with target on {agree:.3f} of test")
    assert ok


def test_c11_experiment_determinism(tmp_path):
    cfg = ExperimentConfig(n=400, test_size=150, seed_size=60, radii=[0.0, 0.1, 0.2],
                           defense_grid=[0.1, 0.3], attacks=[k.value for k in AttackKind],
                           epochs=30, seed=11)
    a = run_experiment(cfg, tmp_path / "a").csv_path.read_bytes()
    b = run_experiment(cfg, tmp_path / "b").csv_path.read_bytes()
    ok = a == b and len(a) > 0
    report(11, ok, f"repeated run_experiment: CSVs {'identical' if a == b else 'differ'} ({len(a)} bytes)")
    assert ok
