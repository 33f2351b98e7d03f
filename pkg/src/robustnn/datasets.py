"""Data generators, loaders and the dataset CSV format.

CSV layout: header ``label,f0,...,f{d-1}``, one example per row, features
written with 17 significant digits so that reading back is bit-exact.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .distributions import AnalyticDistribution
from .geometry import LabeledDataset

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    pass


class BadMagic(IdxFormatError):
    pass


class TruncatedFile(IdxFormatError):
    pass


class DimensionMismatch(IdxFormatError):
    pass


class MalformedRow(ValueError):
    pass


@dataclass(frozen=True)
class HalfmoonSpec:
    n: int
    sigma: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


def halfmoon_arcs(n0: int, n1: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free points on the two arcs (class 0 upper, class 1 lower)."""
    t0 = rng.uniform(0.0, np.pi, n0)
    t1 = rng.uniform(0.0, np.pi, n1)
    upper = np.column_stack([np.cos(t0), np.sin(t0)])
    lower = np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)])
    return upper, lower


def gen_halfmoon(spec: HalfmoonSpec) -> LabeledDataset:
    """Two interleaving half circles with Gaussian noise.

    Class 0 lies on the unit upper half circle, class 1 on the lower half
    circle centred at (1, 0.5).  An odd extra point goes to class 0.
    """
    rng = np.random.default_rng(spec.seed)
    n0 = (spec.n + 1) // 2
    n1 = spec.n - n0
    upper, lower = halfmoon_arcs(n0, n1, rng)
    X = np.vstack([upper, lower]) + rng.normal(0.0, spec.sigma, (spec.n, 2))
    y = np.r_[np.zeros(n0), np.ones(n1)]
    perm = rng.permutation(spec.n)
    return LabeledDataset(X[perm], y[perm])


def sample_analytic(dist: AnalyticDistribution, n: int, seed: int) -> LabeledDataset:
    X, y = dist.sample(n, np.random.default_rng(seed))
    return LabeledDataset(X, y)


def write_csv(data: LabeledDataset, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label"] + [f"f{j}" for j in range(data.d)])
        for xi, yi in zip(data.X, data.y):
            w.writerow([int(yi)] + [format(v, ".17g") for v in xi])


def read_csv(path) -> LabeledDataset:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["label"]:
        raise MalformedRow(f"{path}: line 1: expected header starting with 'label'")
    d = len(rows[0]) - 1
    X = np.empty((len(rows) - 1, d))
    y = np.empty(len(rows) - 1, dtype=np.int64)
    for i, row in enumerate(rows[1:]):
        if len(row) != d + 1:
            raise MalformedRow(f"{path}: line {i + 2}: expected {d + 1} fields, got {len(row)}")
        try:
            y[i] = int(row[0])
            X[i] = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise MalformedRow(f"{path}: line {i + 2}: {exc}") from None
        if y[i] not in (0, 1):
            raise MalformedRow(f"{path}: line {i + 2}: label must be 0 or 1")
    return LabeledDataset(X, y)


def _read_idx(path, magic):
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < 8:
        raise TruncatedFile(f"{path}: too short for an IDX header")
    (got,) = struct.unpack(">I", raw[:4])
    if got != magic:
        raise BadMagic(f"{path}: bad magic number 0x{got:08x}, expected 0x{magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise TruncatedFile(f"{path}: truncated header")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims))
    if len(raw) - header < size:
        raise TruncatedFile(f"{path}: expected {size} payload bytes, found {len(raw) - header}")
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(dims)


def load_idx(images_path, labels_path, keep=(1, 7), per_class=None) -> LabeledDataset:
    """Two-digit subset of an IDX image/label pair.

    Digit ``keep[0]`` becomes label 0 and ``keep[1]`` label 1; pixels are
    scaled to [0, 1].  ``per_class`` caps each digit at its first occurrences
    in file order.
    """
    images = _read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise DimensionMismatch(
            f"{images_path} has {images.shape[0]} images but {labels_path} has {labels.shape[0]} labels"
        )
    a, b = keep
    rows = []
    for digit in (a, b):
        idx = np.flatnonzero(labels == digit)
        if per_class is not None:
            idx = idx[:per_class]
        rows.append(idx)
    idx = np.sort(np.concatenate(rows))
    X = images[idx].reshape(len(idx), -1).astype(np.float64) / 255.0
    y = (labels[idx] == b).astype(np.int64)
    return LabeledDataset(X, y)


def write_idx(path, array: np.ndarray) -> None:
    """Write a uint8 array as an IDX file (used for fixtures)."""
    array = np.asarray(array, dtype=np.uint8)
    magic = 0x00000800 | array.ndim
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", magic))
        fh.write(struct.pack(f">{array.ndim}I", *array.shape))
        fh.write(array.tobytes())


def load_abalone(path) -> LabeledDataset:
    """UCI abalone rows -> 7 measurements, label 1 iff rings + 1.5 > 10.5."""
    path = Path(path)
    X, y = [], []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if lineno == 1 and row[0].strip().lower() == "sex":
                continue
            if len(row) != 9:
                raise MalformedRow(f"{path}: line {lineno}: expected 9 fields, got {len(row)}")
            try:
                feats = [float(v) for v in row[1:8]]
                rings = float(row[8])
            except ValueError as exc:
                raise MalformedRow(f"{path}: line {lineno}: {exc}") from None
            X.append(feats)
            y.append(1 if rings + 1.5 > 10.5 else 0)
    if not X:
        raise MalformedRow(f"{path}: no data rows")
    return LabeledDataset(np.array(X), np.array(y))


def split(data: LabeledDataset, sizes, seed: int) -> list[LabeledDataset]:
    """Random disjoint subsets of the given sizes."""
    if sum(sizes) > data.n:
        raise ValueError(f"requested {sum(sizes)} points from a dataset of {data.n}")
    perm = np.random.default_rng(seed).permutation(data.n)
    out, start = [], 0
    for s in sizes:
        out.append(data.subset(np.sort(perm[start:start + s])))
        start += s
    return out
