import numpy as np
import pytest

from robustnn.attacks import (AttackKind, AttackNotApplicable, AttackSpec, augment_adversarial,
                              direct_attack, fgsm, prepare_attack, sign_directions, train_substitute,
                              write_attack_rows)
from robustnn.classifiers import KernelClassifier, KnnClassifier
from robustnn.datasets import HalfmoonSpec, gen_halfmoon
from robustnn.geometry import LabeledDataset, euclidean_distance


class FixedGradient:
    def __init__(self, g):
        self.g = np.asarray(g, dtype=float)

    def loss_gradient(self, X, y):
        return np.tile(self.g, (np.atleast_2d(X).shape[0], 1))


PAIR = LabeledDataset([[2.0, 0.0], [-5.0, 0.0]], [0, 1])


def test_direct_attack_toward_and_literal():
    assert direct_attack(PAIR, [0, 0], 1, 1.0).tolist() == [1.0, 0.0]
    assert direct_attack(PAIR, [0, 0], 1, 1.0, toward=False).tolist() == [-1.0, 0.0]


def test_direct_attack_requires_opposite():
    with pytest.raises(AttackNotApplicable):
        direct_attack(LabeledDataset([[0.0, 0.0]], [0]), [1, 1], 0, 0.5)


def test_direct_attack_norm_and_progress(rng):
    data = LabeledDataset(rng.normal(size=(200, 3)), rng.integers(0, 2, 200))
    for _ in range(200):
        x = rng.normal(size=3) * 2
        y = int(rng.integers(0, 2))
        r = float(rng.uniform(0, 3))
        adv = direct_attack(data, x, y, r)
        assert abs(np.linalg.norm(adv - x) - r) <= 1e-12 * max(1, r)
        opp = data.X[data.y != y]
        d0 = np.min(np.linalg.norm(opp - x, axis=1))
        if r < d0:
            assert np.min(np.linalg.norm(opp - adv, axis=1)) < d0


def test_fgsm_sign_map():
    clf = FixedGradient([-2.0, 3.0])
    assert fgsm(clf, [0, 0], 1, 0.5, norm="linf").tolist() == [-0.5, 0.5]
    l2 = fgsm(clf, [0, 0], 1, 0.5)
    assert np.allclose(l2, [-0.5 / np.sqrt(2), 0.5 / np.sqrt(2)])
    assert np.linalg.norm(l2) == pytest.approx(0.5, abs=1e-15)


def test_fgsm_zero_gradient():
    assert fgsm(FixedGradient([0.0, 0.0]), [1.0, 2.0], 0, 0.3).tolist() == [1.0, 2.0]
    assert fgsm(FixedGradient([0.0, 4.0]), [1.0, 2.0], 0, 0.3).tolist() == [1.0, 2.3]


def test_fgsm_needs_gradient():
    with pytest.raises(AttackNotApplicable):
        fgsm(KnnClassifier(PAIR), [0, 0], 1, 0.1)


def test_fgsm_on_kernel_raises_loss():
    clf = KernelClassifier(LabeledDataset([[0.0, 0.0], [1.0, 0.0]], [0, 1]), c=0.5)
    x = np.array([0.2, 0.1])
    adv = fgsm(clf, x, 0, 0.2)
    assert clf.loss(adv.reshape(1, -1), 0)[0] > clf.loss(x.reshape(1, -1), 0)[0]
    assert adv[0] > x[0]  # toward the class-1 point


def test_sign_directions_unit_norm(rng):
    g = rng.normal(size=(50, 6))
    g[0] = 0
    u = sign_directions(g)
    assert np.allclose(np.linalg.norm(u[1:], axis=1), 1.0) and np.all(u[0] == 0)


@pytest.fixture(scope="module")
def moons():
    return gen_halfmoon(HalfmoonSpec(600, 0.2, seed=11)), gen_halfmoon(HalfmoonSpec(100, 0.2, seed=12))


def test_substitute_zero_rounds(moons):
    train, seed = moons
    target = KnnClassifier(train, 1)
    sub, data = train_substitute(seed, target.predict, "kernel", rounds=0)
    assert data.n == seed.n
    assert np.array_equal(data.y, target.predict(seed.X))
    assert np.array_equal(data.X, seed.X)


def test_substitute_two_rounds_quadruples(moons):
    train, seed = moons
    target = KnnClassifier(train, 1)
    for kind in ("kernel", "mlp"):
        sub, data = train_substitute(seed, target.predict, kind, rounds=2, step=0.1,
                                     spec=AttackSpec(AttackKind.BLACKBOX_MLP, epochs=20))
        assert data.n == 4 * seed.n
        assert np.array_equal(data.X[: seed.n], seed.X)
        assert np.array_equal(data.y, target.predict(data.X))


def test_substitute_deterministic(moons):
    train, seed = moons
    target = KnnClassifier(train, 1)
    spec = AttackSpec(AttackKind.BLACKBOX_MLP, epochs=15, seed=4)
    a = prepare_attack(spec, train, target, seed)
    b = prepare_attack(spec, train, target, seed)
    assert np.array_equal(a.directions(train.X, train.y), b.directions(train.X, train.y))


def test_substitute_oracle_failure_propagates(moons):
    train, seed = moons

    def broken(X):
        raise RuntimeError("oracle down")

    with pytest.raises(RuntimeError, match="oracle down"):
        train_substitute(seed, broken, "kernel")


def test_blackbox_needs_seed(moons):
    train, _ = moons
    with pytest.raises(AttackNotApplicable):
        prepare_attack(AttackSpec(AttackKind.BLACKBOX_KERNEL), train)


def test_every_attack_respects_radius(moons):
    train, seed = moons
    test = gen_halfmoon(HalfmoonSpec(80, 0.2, seed=13))
    for kind in AttackKind:
        att = prepare_attack(AttackSpec(kind, epochs=20), train, seed_data=seed)
        for r in (0.0, 0.05, 0.3):
            adv = att.perturb(test.X, test.y, r)
            assert np.all(np.linalg.norm(adv - test.X, axis=1) <= r + 1e-9)


def test_augment_sizes():
    data = LabeledDataset(np.random.default_rng(0).random((10, 2)), [0, 1] * 5)
    one = augment_adversarial(data, [AttackSpec("direct")], 0.1)
    two = augment_adversarial(data, [AttackSpec("direct"), AttackSpec("kernel")], 0.1)
    assert one.n == 20 and two.n == 30
    assert np.array_equal(two.y, np.tile(data.y, 3))
    assert np.array_equal(two.X[:10], data.X)
    zero = augment_adversarial(data, [AttackSpec("direct")], 0.0)
    assert np.array_equal(zero.X[10:], data.X)


def test_attack_csv(tmp_path, moons):
    train, _ = moons
    test = LabeledDataset([[0.0, 0.5], [1.0, -0.3]], [0, 1])
    att = prepare_attack(AttackSpec("direct"), train)
    p = tmp_path / "a.csv"
    write_attack_rows(p, att, KnnClassifier(train), test, [0.0, 0.2])
    lines = p.read_text().splitlines()
    assert lines[0] == "test_id,attack,radius,x0,x1,pred_before,pred_after"
    assert len(lines) == 5
    assert lines[1].startswith("0,direct,0,0,0.5,")
