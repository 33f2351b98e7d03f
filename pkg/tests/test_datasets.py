import numpy as np
import pytest

from robustnn.classifiers import KnnClassifier
from robustnn.datasets import (BadMagic, DimensionMismatch, HalfmoonSpec, MalformedRow, TruncatedFile,
                               gen_halfmoon, load_abalone, load_idx, read_csv, sample_analytic, write_csv,
                               write_idx)
from robustnn.distributions import constant_eta
from robustnn.geometry import LabeledDataset


def test_noiseless_halfmoon_on_arcs():
    data = gen_halfmoon(HalfmoonSpec(4, sigma=0.0, seed=3))
    assert np.bincount(data.y).tolist() == [2, 2]
    for x, y in zip(data.X, data.y):
        if y == 0:
            assert np.hypot(*x) == pytest.approx(1.0, abs=1e-12) and x[1] >= 0
        else:
            assert np.hypot(x[0] - 1, x[1] - 0.5) == pytest.approx(1.0, abs=1e-12) and x[1] <= 0.5


def test_halfmoon_odd_count_and_determinism():
    a = gen_halfmoon(HalfmoonSpec(7, seed=5))
    assert np.bincount(a.y).tolist() == [4, 3]
    assert a.identical(gen_halfmoon(HalfmoonSpec(7, seed=5)))
    assert not a.identical(gen_halfmoon(HalfmoonSpec(7, seed=6)))


def test_halfmoon_1nn_accuracy():
    train = gen_halfmoon(HalfmoonSpec(2000, 0.2, seed=0))
    test = gen_halfmoon(HalfmoonSpec(1000, 0.2, seed=1))
    acc = (KnnClassifier(train, 1).predict(test.X) == test.y).mean()
    assert acc >= 0.93


def test_sample_analytic():
    assert np.all(sample_analytic(constant_eta(1.0, 2), 500, 0).y == 1)
    data = sample_analytic(constant_eta(0.8, 2), 10000, 1)
    assert abs(data.y.mean() - 0.8) <= 0.02
    assert np.all(np.abs(data.X.mean(axis=0) - 0.5) <= 0.02)
    assert data.identical(sample_analytic(constant_eta(0.8, 2), 10000, 1))


def test_csv_round_trip_bitwise(tmp_path, rng):
    X = rng.normal(size=(50, 3)) * 10.0 ** rng.integers(-300, 300, (50, 3))
    X[0, 0] = 0.1
    X[1, 1] = -0.0
    data = LabeledDataset(X, rng.integers(0, 2, 50))
    p = tmp_path / "d.csv"
    write_csv(data, p)
    assert p.read_text().splitlines()[0] == "label,f0,f1,f2"
    assert read_csv(p).identical(data)


def test_csv_malformed(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("label,f0\n1,0.5\n0,abc\n")
    with pytest.raises(MalformedRow, match="line 3"):
        read_csv(p)


def _fixture_idx(tmp_path, images, labels):
    ip, lp = tmp_path / "img.idx", tmp_path / "lab.idx"
    write_idx(ip, images)
    write_idx(lp, labels)
    return ip, lp


def test_idx_magic_constants(tmp_path):
    ip, lp = _fixture_idx(tmp_path, np.zeros((2, 28, 28), np.uint8), np.array([1, 7], np.uint8))
    assert ip.read_bytes()[:4] == b"\x00\x00\x08\x03"
    assert lp.read_bytes()[:4] == b"\x00\x00\x08\x01"


def test_idx_pixel_round_trip(tmp_path):
    imgs = np.zeros((3, 28, 28), np.uint8)
    imgs[0, 0, 0] = 255
    imgs[1, 27, 27] = 51
    imgs[2, 5, 6] = 9
    ip, lp = _fixture_idx(tmp_path, imgs, np.array([7, 1, 3], np.uint8))
    data = load_idx(ip, lp, keep=(1, 7))
    assert data.n == 2 and data.d == 784
    assert data.y.tolist() == [1, 0]
    assert data.X[0, 0] == 1.0 and data.X[0].sum() == 1.0
    assert data.X[1, 783] == 51 / 255
    assert data.X.min() >= 0 and data.X.max() <= 1


def test_idx_per_class_cap(tmp_path):
    labels = np.array([1, 7, 1, 1, 7, 7, 7], np.uint8)
    ip, lp = _fixture_idx(tmp_path, np.arange(7 * 4, dtype=np.uint8).reshape(7, 2, 2), labels)
    data = load_idx(ip, lp, keep=(1, 7), per_class=2)
    assert data.y.tolist() == [0, 1, 0, 1]
    assert data.X[:, 0].tolist() == [v / 255 for v in (0, 4, 8, 16)]


def test_idx_errors(tmp_path):
    ip, lp = _fixture_idx(tmp_path, np.zeros((2, 2, 2), np.uint8), np.array([1, 7], np.uint8))
    with pytest.raises(BadMagic, match="lab.idx"):
        load_idx(lp, lp)
    short = tmp_path / "short.idx"
    short.write_bytes(ip.read_bytes()[:-3])
    with pytest.raises(TruncatedFile):
        load_idx(short, lp)
    lp3 = tmp_path / "lab3.idx"
    write_idx(lp3, np.array([1, 7, 7], np.uint8))
    with pytest.raises(DimensionMismatch):
        load_idx(ip, lp3)


def test_abalone(tmp_path):
    p = tmp_path / "abalone.data"
    p.write_text(
        "M,0.455,0.365,0.095,0.514,0.2245,0.101,0.15,9\n"
        "F,0.53,0.42,0.135,0.677,0.2565,0.1415,0.21,10\n"
        "I,0.33,0.255,0.08,0.205,0.0895,0.0395,0.055,7\n"
    )
    data = load_abalone(p)
    assert data.y.tolist() == [0, 1, 0]
    assert data.X.tolist() == [
        [0.455, 0.365, 0.095, 0.514, 0.2245, 0.101, 0.15],
        [0.53, 0.42, 0.135, 0.677, 0.2565, 0.1415, 0.21],
        [0.33, 0.255, 0.08, 0.205, 0.0895, 0.0395, 0.055],
    ]


def test_abalone_malformed(tmp_path):
    p = tmp_path / "abalone.data"
    p.write_text("M,0.455,0.365,0.095,0.514,0.2245,0.101,0.15,9\nF,0.53,0.42\n")
    with pytest.raises(MalformedRow, match="line 2"):
        load_abalone(p)
