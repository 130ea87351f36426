"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, fields

from . import diagnostics as diag
from .dataset import DatasetError, apply_standardizer, fit_standardizer, load_csv, make_gaussian_imbalanced, write_csv
from .harness import (ConfigError, ExperimentConfig, LATENT_METHODS, METHODS, emit_reports,
                      run_experiment, run_metadata)
from .io import read_augmented_csv, write_augmented_csv
from .latent import dsm, eos, to_latent
from .models import MlpModel, load_model
from .resampling import augment

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("augscope")


class UsageError(Exception):
    pass


_ALIASES = {"methods": ["--method"], "models": ["--model"], "data": ["--dataset"]}


def _flag(parser, name, **kw):
    dashed = name.replace("_", "-")
    opts = [f"--{name}"] if dashed == name else [f"--{name}", f"--{dashed}"]
    opts += _ALIASES.get(name, [])
    parser.add_argument(*opts, dest=name, default=None, **kw)


def _label_col(v):
    try:
        return int(v)
    except ValueError:
        return v


def _bool(v):
    s = str(v).lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {v!r}")


_FIELD_TYPES = {
    "data": str, "label_col": _label_col, "methods": str, "models": str, "repeats": int,
    "train_fraction": float, "seed": int, "k_neighbors": int, "remix_alpha": float,
    "remix_target": int, "svm_c": float, "kernel": str, "gamma": float, "epochs": int,
    "lr": float, "l2": float, "batch_size": int, "head_epochs": int, "top_k": int,
    "out_dir": str, "save_models": _bool, "save_train": _bool,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="augscope", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a full experiment")
    run.add_argument("config", nargs="?", help="YAML or JSON file with experiment fields")
    for f in fields(ExperimentConfig):
        _flag(run, f.name, type=_FIELD_TYPES[f.name])

    aug = sub.add_parser("augment", help="write an augmented training CSV with provenance")
    aug.add_argument("data")
    aug.add_argument("--method", required=True, choices=[m for m in METHODS if m != "cs"])
    aug.add_argument("--out", required=True)
    _flag(aug, "label_col", type=_label_col)
    _flag(aug, "seed", type=int)
    _flag(aug, "k_neighbors", type=int)
    _flag(aug, "remix_alpha", type=float)
    _flag(aug, "remix_target", type=int)
    aug.add_argument("--mlp", help="trained MLP JSON; required for dsm and eos")
    aug.add_argument("--standardize", action="store_true",
                     help="standardize features before augmenting")

    dg = sub.add_parser("diagnose", help="compare two serialized models")
    dg.add_argument("base")
    dg.add_argument("other")
    dg.add_argument("--data", help="CSV used for top-K features")
    _flag(dg, "label_col", type=_label_col)
    _flag(dg, "top_k", type=int)
    dg.add_argument("--train", help="augmented training CSV of OTHER (SVM census)")
    dg.add_argument("--base-train", help="training CSV of BASE (SVM census)")

    gen = sub.add_parser("gen", help="write a Gaussian imbalanced fixture CSV")
    gen.add_argument("--out", required=True)
    gen.add_argument("--n-major", "--n_major", dest="n_major", type=int, default=2464)
    gen.add_argument("--n-minor", "--n_minor", dest="n_minor", type=int, default=72)
    gen.add_argument("--d", type=int, default=20)
    gen.add_argument("--separation", type=float, default=2.0)
    _flag(gen, "seed", type=int)
    return p


def _or(v, default):
    return default if v is None else v


def _cmd_run(args):
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    raw = cfg.to_dict()
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name)
        if v is not None:
            raw[f.name] = v
    cfg = ExperimentConfig.from_dict(raw)
    if cfg.data is None:
        raise UsageError("no dataset: give --data or set data in the config file")
    data = load_csv(cfg.data, cfg.label_col)
    results = run_experiment(cfg, data)
    paths = emit_reports(results, cfg.out_dir, cfg, run_metadata(cfg, data))
    failed = [r for r in results if r.error]
    for r in failed:
        log.warning("cell %s/%s r%d failed: %s", r.method, r.model, r.repeat, r.error)
    print(f"wrote {len(paths)} files to {cfg.out_dir} ({len(results)} cells, {len(failed)} failed)")
    return EXIT_OK


def _cmd_augment(args):
    data = load_csv(args.data, _or(args.label_col, -1))
    if args.standardize:
        data = apply_standardizer(fit_standardizer(data), data)
    seed, k = _or(args.seed, 0), _or(args.k_neighbors, 5)
    if args.method in LATENT_METHODS:
        if not args.mlp:
            raise UsageError(f"--mlp is required for {args.method}")
        model = load_model(args.mlp)
        if not isinstance(model, MlpModel):
            raise UsageError(f"{args.mlp} is not an MLP")
        latent = to_latent(model, data)
        out = (dsm if args.method == "dsm" else eos)(latent, k, seed)
    else:
        out = augment(data, args.method, seed, k, _or(args.remix_alpha, 0.2), args.remix_target)
    write_augmented_csv(out, args.out)
    print(f"wrote {out.data.n} rows ({int(out.provenance.synthetic.sum())} synthetic) to {args.out}")
    return EXIT_OK


def _cmd_diagnose(args):
    base, other = load_model(args.base), load_model(args.other)
    if type(base) is not type(other):
        raise UsageError("models are of different kinds")
    report = {"kind": other.kind}
    if other.kind == "svm":
        if not args.train:
            raise UsageError("--train is required to trace SVM support vectors")
        train = read_augmented_csv(args.train)
        report["sv_census"] = asdict(diag.sv_census(other, train, base))
        if args.base_train:
            report["base_sv_census"] = asdict(diag.sv_census(base, read_augmented_csv(args.base_train)))
    else:
        report["weights"] = asdict(diag.weight_report(other, base))
        report["base_weights"] = asdict(diag.weight_report(base))
        if args.data:
            data = load_csv(args.data, _or(args.label_col, -1))
            K = _or(args.top_k, 10)
            if other.kind == "logreg":
                a = diag.topk_ce(base, data.features, data.labels, K)
                b = diag.topk_ce(other, data.features, data.labels, K)
            else:
                a = diag.topk_input_grad(base, data.features, K, data.labels)
                b = diag.topk_input_grad(other, data.features, K, data.labels)
            report["topk_overlap"] = diag.topk_overlap(a, b)
            report["base_topk"] = [list(map(int, s)) for s in a.top_sets]
            report["other_topk"] = [list(map(int, s)) for s in b.top_sets]
    print(json.dumps(report, indent=1, sort_keys=True))
    return EXIT_OK


def _cmd_gen(args):
    data = make_gaussian_imbalanced(args.n_major, args.n_minor, args.d, args.separation,
                                    _or(args.seed, 0))
    write_csv(data, args.out)
    print(f"wrote {data.n} rows to {args.out}")
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "augment": _cmd_augment, "diagnose": _cmd_diagnose, "gen": _cmd_gen}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, DatasetError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
