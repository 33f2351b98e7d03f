"""Config-driven defense/attack sweeps with CSV results and a JSON manifest.

A run materialises train/test/validation (and a black-box seed set), builds
each defended training set, tunes its defense radius on validation data
against the strongest attack radius, then sweeps every attack radius on the
test set.  Result rows never carry wall-clock data, so identical configs give
identical CSV bytes; timings go to the manifest instead.
"""
from __future__ import annotations

import csv
import json
import logging
import platform
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .attacks import AttackKind, AttackSpec, augment_adversarial, prepare_attack
from .classifiers import KnnClassifier
from .datasets import HalfmoonSpec, gen_halfmoon, load_abalone, load_idx, read_csv, split
from .geometry import LabeledDataset
from .metrics import certified_astuteness, certify_batch, empirical_robust_accuracy
from .robust1nn import RobustParams, confident_labels, robust_1nn_prune

log = logging.getLogger(__name__)

METHODS = ("StandardNN", "RobustNN", "ATNN", "ATNN-all")
DATASETS = ("halfmoon", "mnist", "abalone", "csv")

# seed offsets from the master seed, one per derived stream
TEST_SEED_OFFSET = 1
VALIDATION_SEED_OFFSET = 1000
SEED_SET_SEED_OFFSET = 2000

RESULT_FIELDS = (
    "method", "attack", "radius", "clean_accuracy", "adversarial_accuracy",
    "certified_astuteness", "train_size", "n", "seed", "defense_radius",
)

# per-dataset defaults; attack radii are read off the published curves
DATASET_DEFAULTS = {
    "halfmoon": dict(
        n=2000, test_size=1000, bandwidth=0.1,
        radii=[0.0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
        defense_grid=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
    ),
    "mnist": dict(
        n=2000, test_size=1000, bandwidth=0.1,
        radii=[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
        defense_grid=[0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0],
    ),
    "abalone": dict(
        n=500, test_size=100, bandwidth=0.01,
        radii=[0.0, 0.02, 0.05, 0.1, 0.15, 0.2],
        defense_grid=[0.02, 0.05, 0.1, 0.15, 0.2, 0.3],
    ),
    "csv": dict(
        n=None, test_size=None, bandwidth=0.1,
        radii=[0.0, 0.05, 0.1, 0.2, 0.3],
        defense_grid=[0.1, 0.2, 0.3, 0.5],
    ),
}


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


class ExperimentFailed(RuntimeError):
    """A stage raised; the manifest on disk is flagged incomplete."""


@dataclass
class ExperimentConfig:
    """Everything a run depends on.  Unset sizes/grids take dataset defaults.

    ``dataset`` is one of halfmoon, mnist, abalone, csv.  File datasets read
    ``paths``: mnist wants train_images/train_labels/test_images/test_labels,
    abalone wants data, csv wants train (and optionally test).
    """

    dataset: str = "halfmoon"
    paths: dict = field(default_factory=dict)
    n: int | None = None
    test_size: int | None = None
    sigma: float = 0.2
    digits: tuple = (1, 7)
    methods: tuple = METHODS
    attacks: tuple = ("direct",)
    radii: tuple | None = None
    defense_grid: tuple | None = None
    Delta: float = 0.45
    delta: float = 0.1
    bandwidth: float | None = None
    rounds: int = 2
    step: float = 0.1
    seed_size: int = 200
    toward: bool = True
    norm: str = "l2"
    hidden: tuple = (32, 32)
    epochs: int = 300
    learning_rate: float = 0.05
    seed: int = 0
    output_dir: str = "results"

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise ConfigError(f"dataset must be one of {DATASETS}, got {self.dataset!r}")
        defaults = DATASET_DEFAULTS[self.dataset]
        for key in ("n", "test_size", "bandwidth", "radii", "defense_grid"):
            if getattr(self, key) is None:
                setattr(self, key, defaults[key])
        for key in ("digits", "methods", "attacks", "radii", "defense_grid", "hidden"):
            value = getattr(self, key)
            if isinstance(value, (str, bytes)) or not hasattr(value, "__iter__"):
                raise ConfigError(f"{key} must be a list")
            setattr(self, key, tuple(value))
        self.radii = tuple(float(r) for r in self.radii)
        self.defense_grid = tuple(float(r) for r in self.defense_grid)
        self.paths = dict(self.paths)
        self.validate()

    def validate(self) -> None:
        if not self.radii:
            raise ConfigError("radius sweep is empty")
        if any(r < 0 for r in self.radii) or any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ConfigError("radius sweep must be nonnegative and strictly increasing")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"methods must be a nonempty subset of {METHODS}, got {list(self.methods)}")
        if not self.attacks:
            raise ConfigError("attack list is empty")
        for a in self.attacks:
            try:
                AttackKind(a)
            except ValueError:
                raise ConfigError(f"unknown attack {a!r}") from None
        if any(m != "StandardNN" for m in self.methods):
            if not self.defense_grid:
                raise ConfigError("defense-radius grid is empty")
            if any(r < 0 for r in self.defense_grid):
                raise ConfigError("defense radii must be >= 0")
        if self.dataset != "csv" and (self.n is None or self.n < 2):
            raise ConfigError("n must be >= 2")
        if self.test_size is not None and self.test_size < 1:
            raise ConfigError("test_size must be >= 1")
        if not 0 < self.Delta < 0.5 or not 0 < self.delta < 1:
            raise ConfigError("need 0 < Delta < 1/2 and 0 < delta < 1")
        if self.sigma < 0 or self.bandwidth <= 0 or self.step <= 0 or self.rounds < 0:
            raise ConfigError("sigma >= 0, bandwidth > 0, step > 0, rounds >= 0 required")
        if self.seed_size < 1 or self.epochs < 1 or self.learning_rate <= 0:
            raise ConfigError("seed_size, epochs and learning_rate must be positive")
        if self.norm not in ("l2", "linf"):
            raise ConfigError("norm must be 'l2' or 'linf'")
        if len(self.digits) != 2 or self.digits[0] == self.digits[1]:
            raise ConfigError("digits must name two distinct classes")
        required = {"mnist": ("train_images", "train_labels", "test_images", "test_labels"),
                    "abalone": ("data",), "csv": ("train",)}.get(self.dataset, ())
        missing = [k for k in required if k not in self.paths]
        if missing:
            raise ConfigError(f"dataset {self.dataset!r} needs paths {missing}")

    # --- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_dict(raw)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def attack_spec(self, kind) -> AttackSpec:
        return AttackSpec(
            kind, bandwidth=self.bandwidth, step=self.step, rounds=self.rounds, toward=self.toward,
            norm=self.norm, hidden=self.hidden, epochs=self.epochs,
            learning_rate=self.learning_rate, seed=self.seed,
        )


@dataclass(frozen=True)
class Splits:
    train: LabeledDataset
    test: LabeledDataset
    validation: LabeledDataset
    seed_set: LabeledDataset


def _pool_split(pool: LabeledDataset, val_size: int, seed_size: int, seed: int):
    if pool.n < val_size + 1:
        raise ConfigError(f"only {pool.n} spare points for a validation set of {val_size}")
    seed_size = min(seed_size, pool.n - val_size)
    return split(pool, [val_size, seed_size], seed + VALIDATION_SEED_OFFSET)


def _rest(data: LabeledDataset, used: np.ndarray) -> LabeledDataset:
    mask = np.ones(data.n, dtype=bool)
    mask[used] = False
    return data.subset(np.flatnonzero(mask))


def make_splits(config: ExperimentConfig) -> Splits:
    """Train/test/validation/seed sets; validation has the test set's size."""
    s = config.seed
    if config.dataset == "halfmoon":
        gen = lambda n, off: gen_halfmoon(HalfmoonSpec(n, config.sigma, s + off))  # noqa: E731
        return Splits(gen(config.n, 0), gen(config.test_size, TEST_SEED_OFFSET),
                      gen(config.test_size, VALIDATION_SEED_OFFSET),
                      gen(config.seed_size, SEED_SET_SEED_OFFSET))
    if config.dataset == "mnist":
        per_train = config.n // 2
        per_test = config.test_size // 2
        p = config.paths
        train = load_idx(p["train_images"], p["train_labels"], config.digits, per_train)
        pool = load_idx(p["test_images"], p["test_labels"], config.digits)
        first = np.concatenate([np.flatnonzero(pool.y == c)[:per_test] for c in (0, 1)])
        first.sort()
        test = pool.subset(first)
        val, seed_set = _pool_split(_rest(pool, first), test.n, config.seed_size, s)
        return Splits(train, test, val, seed_set)
    if config.dataset == "abalone":
        data = load_abalone(config.paths["data"])
        if data.n < config.n + config.test_size:
            raise ConfigError(f"abalone file has {data.n} rows, need at least {config.n + config.test_size}")
        perm = np.random.default_rng(s).permutation(data.n)
        train_ids = np.sort(perm[:config.n])
        test_ids = np.sort(perm[config.n:config.n + config.test_size])
        train, test = data.subset(train_ids), data.subset(test_ids)
        val, seed_set = _pool_split(_rest(data, perm[:config.n + config.test_size]),
                                    test.n, config.seed_size, s)
        return Splits(train, test, val, seed_set)
    # csv: an explicit test file, or a seeded split of the training file
    data = read_csv(config.paths["train"])
    if "test" in config.paths:
        test = read_csv(config.paths["test"])
        train_n = config.n or data.n - test.n - min(config.seed_size, data.n // 10)
        if train_n < 2 or train_n + test.n > data.n:
            raise ConfigError("csv training file too small for train + validation")
        perm = np.random.default_rng(s).permutation(data.n)
        train = data.subset(np.sort(perm[:train_n]))
        val, seed_set = _pool_split(_rest(data, perm[:train_n]), test.n, config.seed_size, s)
        return Splits(train, test, val, seed_set)
    test_n = config.test_size or max(1, data.n // 5)
    train_n = config.n or data.n - 2 * test_n - min(config.seed_size, data.n // 10)
    if train_n < 2 or train_n + 2 * test_n > data.n:
        raise ConfigError(f"csv file has {data.n} rows, too few for train/test/validation")
    perm = np.random.default_rng(s).permutation(data.n)
    train = data.subset(np.sort(perm[:train_n]))
    test = data.subset(np.sort(perm[train_n:train_n + test_n]))
    val, seed_set = _pool_split(_rest(data, perm[:train_n + test_n]), test_n, config.seed_size, s)
    return Splits(train, test, val, seed_set)


class DefenseBuilder:
    """Builds defended training sets, caching what does not depend on r."""

    def __init__(self, config: ExperimentConfig, train: LabeledDataset, seed_set: LabeledDataset):
        self.config = config
        self.train = train
        self.seed_set = seed_set
        self._conf = None
        self._cache = {}

    def build(self, method: str, attack: str, r: float) -> LabeledDataset:
        key = (method, attack if method == "ATNN" else "", r)
        if key not in self._cache:
            self._cache[key] = self._build(method, attack, r)
        return self._cache[key]

    def _build(self, method, attack, r):
        c = self.config
        if method == "StandardNN":
            return self.train
        if method == "RobustNN":
            params = RobustParams(r, c.Delta, c.delta)
            if self._conf is None:
                self._conf = confident_labels(self.train, params)
            return robust_1nn_prune(self.train, params, conf=self._conf).data
        specs = [c.attack_spec(attack)] if method == "ATNN" else [c.attack_spec(a) for a in c.attacks]
        return augment_adversarial(self.train, specs, r, seed_data=self.seed_set)


def evaluate_defense(config, defended: LabeledDataset, attack: str, data: LabeledDataset,
                     radii, seed_set: LabeledDataset, certify: bool = True):
    """(clean, [adversarial per radius], [certified per radius]) on ``data``."""
    clf = KnnClassifier(defended, 1)
    att = prepare_attack(config.attack_spec(attack), defended, clf, seed_set)
    clean = float((clf.predict(data.X) == data.y).mean())
    adv = [empirical_robust_accuracy(clf, [att], r, data) for r in radii]
    if certify:
        certs = certify_batch(defended, data.X, clf.index)
        cert = [certified_astuteness(certs, data, r) for r in radii]
    else:
        cert = [float("nan")] * len(radii)
    return clean, adv, cert


def tune_defense_radius(config: ExperimentConfig, method: str = "RobustNN", attack: str | None = None,
                        splits: Splits | None = None, builder: DefenseBuilder | None = None) -> float:
    """Grid radius with the best validation accuracy at the largest attack radius.

    Ties go to the smallest radius.
    """
    grid = sorted(set(config.defense_grid))
    if not grid:
        raise ConfigError("defense-radius grid is empty")
    if len(grid) == 1:
        return grid[0]
    attack = attack or config.attacks[0]
    splits = splits or make_splits(config)
    builder = builder or DefenseBuilder(config, splits.train, splits.seed_set)
    top = max(config.radii)
    best, best_acc = grid[0], -1.0
    for r in grid:
        defended = builder.build(method, attack, r)
        _, adv, _ = evaluate_defense(config, defended, attack, splits.validation, [top],
                                     splits.seed_set, certify=False)
        log.debug("tune %s/%s r=%g val=%.4f", method, attack, r, adv[0])
        if adv[0] > best_acc:
            best, best_acc = r, adv[0]
    return best


@dataclass(frozen=True)
class ResultRow:
    method: str
    attack: str
    radius: float
    clean_accuracy: float
    adversarial_accuracy: float
    certified_astuteness: float
    train_size: int
    n: int
    seed: int
    defense_radius: float | None

    def sort_key(self):
        return (METHODS.index(self.method), self.attack, self.radius)

    def cells(self):
        def num(v):
            return "" if v is None else repr(float(v))
        return [self.method, self.attack, num(self.radius), num(self.clean_accuracy),
                num(self.adversarial_accuracy), num(self.certified_astuteness),
                str(self.train_size), str(self.n), str(self.seed), num(self.defense_radius)]


@dataclass
class ExperimentResult:
    rows: list
    csv_path: Path
    manifest_path: Path
    defense_radii: dict


def write_results(rows, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_FIELDS)
        for row in sorted(rows, key=ResultRow.sort_key):
            w.writerow(row.cells())


def read_results(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def run_experiment(config: ExperimentConfig, output_dir=None) -> ExperimentResult:
    """Run every (method, attack) pair and write results.csv + manifest.json."""
    out = Path(output_dir if output_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, manifest_path = out / "results.csv", out / "manifest.json"
    timings, rows, chosen = {}, [], {}
    manifest = {
        "config": config.to_dict(),
        "seeds": {
            "master": config.seed,
            "test": config.seed + TEST_SEED_OFFSET,
            "validation": config.seed + VALIDATION_SEED_OFFSET,
            "seed_set": config.seed + SEED_SET_SEED_OFFSET,
        },
        "version": __version__,
        "backend": BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "timings": timings,
        "complete": False,
    }

    def stage(name, fn, *args):
        t0 = time.perf_counter()
        try:
            return fn(*args)
        finally:
            timings[name] = round(time.perf_counter() - t0, 6)

    try:
        splits = stage("data", make_splits, config)
        manifest["sizes"] = {k: getattr(splits, k).n for k in ("train", "test", "validation", "seed_set")}
        builder = DefenseBuilder(config, splits.train, splits.seed_set)
        for method in config.methods:
            for attack in config.attacks:
                tag = f"{method}/{attack}"
                r_def = None
                if method != "StandardNN":
                    r_def = stage(f"tune:{tag}", tune_defense_radius, config, method, attack, splits, builder)
                    chosen[tag] = r_def
                defended = stage(f"defend:{tag}", builder.build, method, attack, r_def)
                clean, adv, cert = stage(f"eval:{tag}", evaluate_defense, config, defended, attack,
                                         splits.test, config.radii, splits.seed_set)
                for r, a, c in zip(config.radii, adv, cert):
                    rows.append(ResultRow(method, attack, r, clean, a, c, defended.n,
                                          splits.train.n, config.seed, r_def))
        manifest["complete"] = True
    except Exception as exc:
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        if isinstance(exc, ConfigError):
            raise
        raise ExperimentFailed(manifest["error"]) from exc
    finally:
        manifest["defense_radii"] = chosen
        manifest["rows"] = len(rows)
        write_results(rows, csv_path)
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return ExperimentResult(sorted(rows, key=ResultRow.sort_key), csv_path, manifest_path, chosen)
