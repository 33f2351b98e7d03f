"""Command-line entry point: ``robustnn <subcommand> ...``.

Every stage reads and writes plain files (dataset CSVs, attack CSVs, JSON),
so a pipeline can be resumed or inspected at any step.  Relative output
names land in ``--output-dir`` (default: $ROBUSTNN_OUTPUT_DIR, else ".").

Exit status: 0 success, 1 configuration error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .attacks import AttackKind, augment_adversarial, prepare_attack, write_attack_rows
from .bounds import theory_bounds
from .classifiers import KnnClassifier
from .datasets import HalfmoonSpec, gen_halfmoon, read_csv, sample_analytic, write_csv
from .distributions import constant_eta, linear_eta_1d, smooth_step_2d
from .experiment import METHODS, ConfigError, ExperimentConfig, ExperimentFailed, run_experiment
from .metrics import certified_astuteness, certify_batch, empirical_robust_accuracy
from .robust1nn import RobustParams, robust_1nn_prune

OUTPUT_DIR_ENV = "ROBUSTNN_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

GENERATORS = {
    "halfmoon": None,
    "linear-1d": linear_eta_1d,
    "smooth-step-2d": smooth_step_2d,
    "constant-2d": lambda: constant_eta(0.8, 2),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _out_path(args, name) -> Path:
    p = Path(name)
    if not p.is_absolute():
        p = Path(args.output_dir) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _attack_spec(args, kind):
    cfg = ExperimentConfig(bandwidth=args.bandwidth, rounds=args.rounds, step=args.step,
                           toward=args.toward, norm=args.norm, seed=args.seed)
    return cfg.attack_spec(kind)


def _seed_data(args):
    return read_csv(args.seed_data) if args.seed_data else None


# --- subcommands -----------------------------------------------------------

def cmd_gen(args):
    if args.generator == "halfmoon":
        data = gen_halfmoon(HalfmoonSpec(args.n, args.sigma, args.seed))
    else:
        data = sample_analytic(GENERATORS[args.generator](), args.n, args.seed)
    path = _out_path(args, args.out)
    write_csv(data, path)
    print(f"wrote {data.n} points (d={data.d}) to {path}")


def cmd_prune(args):
    data = read_csv(args.data)
    res = robust_1nn_prune(data, RobustParams(args.r, args.Delta, args.delta))
    path = _out_path(args, args.out)
    write_csv(res.data, path)
    print(f"k_n={res.kn} red={len(res.red)} kept={res.data.n}/{data.n} -> {path}")


def cmd_train(args):
    data = read_csv(args.data)
    if args.method == "StandardNN":
        model = data
    elif args.method == "RobustNN":
        model = robust_1nn_prune(data, RobustParams(args.defense_radius, args.Delta, args.delta)).data
    else:
        kinds = args.attacks[:1] if args.method == "ATNN" else args.attacks
        model = augment_adversarial(data, [_attack_spec(args, k) for k in kinds], args.defense_radius,
                                    seed_data=_seed_data(args))
    path = _out_path(args, args.out)
    write_csv(model, path)
    print(f"{args.method}: {model.n} training points -> {path}")


def cmd_attack(args):
    model, test = read_csv(args.model), read_csv(args.test)
    target = KnnClassifier(model, 1)
    attack = prepare_attack(_attack_spec(args, args.attack), model, target, _seed_data(args))
    path = _out_path(args, args.out)
    write_attack_rows(path, attack, target, test, args.radii)
    print(f"{args.attack}: {test.n * len(args.radii)} rows -> {path}")


def cmd_eval(args):
    model, test = read_csv(args.model), read_csv(args.test)
    clf = KnnClassifier(model, 1)
    attacks = [prepare_attack(_attack_spec(args, k), model, clf, _seed_data(args)) for k in args.attacks]
    certs = certify_batch(model, test.X, clf.index)
    rows = []
    for r in args.radii:
        rows.append({
            "radius": r,
            "adversarial_accuracy": empirical_robust_accuracy(clf, attacks, r, test),
            "certified_astuteness": certified_astuteness(certs, test, r),
        })
    report = {"train_size": model.n, "test_size": test.n, "attacks": list(args.attacks), "rows": rows}
    text = json.dumps(report, indent=2)
    if args.out:
        _out_path(args, args.out).write_text(text + "\n")
    print(text)


def cmd_sweep(args):
    raw = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    for f in dataclasses.fields(ExperimentConfig):
        value = getattr(args, f"cfg_{f.name}", None)
        if value is not None:
            raw[f.name] = value
    if args.path:
        paths = dict(raw.get("paths", {}))
        for item in args.path:
            key, sep, val = item.partition("=")
            if not sep:
                raise ConfigError(f"--path expects KEY=FILE, got {item!r}")
            paths[key] = val
        raw["paths"] = paths
    raw.setdefault("output_dir", args.output_dir)
    config = ExperimentConfig.from_dict(raw)
    result = run_experiment(config)
    print(f"{len(result.rows)} rows -> {result.csv_path}")
    for tag, r in sorted(result.defense_radii.items()):
        print(f"  defense radius {tag}: {r:g}")


def cmd_bounds(args):
    try:
        tb = theory_bounds(args.n, args.d, args.delta, args.Delta, args.k, args.p, args.C0, args.C1, args.C2)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(json.dumps(dataclasses.asdict(tb), indent=2))


# --- parser ------------------------------------------------------------------

def _attack_options(p):
    p.add_argument("--bandwidth", type=float, default=0.1, help="kernel parameter c")
    p.add_argument("--rounds", type=int, default=2, help="substitute augmentation rounds")
    p.add_argument("--step", type=float, default=0.1, help="substitute augmentation step")
    p.add_argument("--toward", action=argparse.BooleanOptionalAction, default=True,
                   help="direct attack moves toward the nearest opposite point")
    p.add_argument("--norm", choices=("l2", "linf"), default="l2")
    p.add_argument("--seed-data", help="dataset CSV used to train black-box substitutes")
    p.add_argument("--seed", type=int, default=0)


def _sweep_options(p):
    """One flag per config key; unset flags leave the config file value alone."""
    lists = {"digits": int, "methods": str, "attacks": str, "radii": float, "defense_grid": float,
             "hidden": int}
    scalars = {"n": int, "test_size": int, "sigma": float, "Delta": float, "delta": float,
               "bandwidth": float, "rounds": int, "step": float, "seed_size": int, "epochs": int,
               "learning_rate": float, "seed": int, "dataset": str, "norm": str}
    for f in dataclasses.fields(ExperimentConfig):
        flag = "--" + f.name.replace("_", "-")
        dest = f"cfg_{f.name}"
        if f.name in lists:
            p.add_argument(flag, dest=dest, type=lists[f.name], nargs="+", default=None)
        elif f.name in scalars:
            p.add_argument(flag, dest=dest, type=scalars[f.name], default=None)
        elif f.name == "toward":
            p.add_argument(flag, dest=dest, action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--path", action="append", metavar="KEY=FILE",
                   help="dataset file, e.g. data=abalone.data or train_images=...")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="robustnn", description="Robust 1-NN defense, attacks and evaluation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--output-dir", default=os.environ.get(OUTPUT_DIR_ENV, "."),
                        help=f"directory for relative outputs (default: ${OUTPUT_DIR_ENV} or .)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    attacks = [k.value for k in AttackKind]

    p = sub.add_parser("gen", help="generate a synthetic dataset CSV")
    p.add_argument("--generator", choices=sorted(GENERATORS), default="halfmoon")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--sigma", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="data.csv")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("prune", help="robust 1-NN pruning of a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--r", type=float, required=True, help="defense radius")
    p.add_argument("--Delta", type=float, default=0.45)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--out", default="pruned.csv")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("train", help="build the 1-NN training set of a defense method")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=METHODS, default="RobustNN")
    p.add_argument("--defense-radius", type=float, default=0.1)
    p.add_argument("--Delta", type=float, default=0.45)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--attacks", nargs="+", choices=attacks, default=["direct"])
    p.add_argument("--out", default="model.csv")
    _attack_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="perturb a test set against a 1-NN model")
    p.add_argument("--model", required=True, help="training-set CSV of the target 1-NN")
    p.add_argument("--test", required=True)
    p.add_argument("--attack", choices=attacks, default="direct")
    p.add_argument("--radii", type=float, nargs="+", default=[0.1])
    p.add_argument("--out", default="attack.csv")
    _attack_options(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("eval", help="adversarial accuracy and certified astuteness")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--attacks", nargs="+", choices=attacks, default=["direct"])
    p.add_argument("--radii", type=float, nargs="+", default=[0.0, 0.1, 0.2, 0.3])
    p.add_argument("--out")
    _attack_options(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="full experiment from a JSON config")
    p.add_argument("--config", help="JSON file; flags below override its keys")
    _sweep_options(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="finite-sample theory quantities")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--Delta", type=float, default=0.45)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--C0", type=float, default=1.0)
    p.add_argument("--C1", type=float, default=1.0)
    p.add_argument("--C2", type=float, default=1.0)
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentFailed as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
