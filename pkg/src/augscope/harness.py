"""Experiment runner: split, scale, augment, train, evaluate, diagnose, report.

Within a repeat every method shares the same split and standardizer and is
compared against the base model trained on the untouched training split.
Augmentation seeds depend on (seed, repeat, method) and model seeds on
(seed, repeat, model), so the same augmented rows feed every model type and
base and augmented models of one type start from the same initialisation.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import diagnostics as diag
from .dataset import (Dataset, apply_standardizer, fit_standardizer, imbalance_ratio, load_csv,
                      stratified_splits)
from .io import write_augmented_csv
from .latent import dsm, eos, to_latent
from .metrics import balanced_accuracy, macro_f1
from .models import (MODEL_KINDS, TrainConfig, default_gamma, retrain_head, save_model,
                     train_logreg, train_mlp, train_svm)
from .resampling import AugmentedDataset, augment, class_weights

log = logging.getLogger(__name__)

INPUT_METHODS = ("base", "ros", "cs", "smote", "adasyn", "remix")
LATENT_METHODS = ("dsm", "eos")
METHODS = INPUT_METHODS + LATENT_METHODS


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    data: Optional[str] = None
    label_col: object = -1
    methods: list = field(default_factory=lambda: ["base", "ros", "cs", "smote", "adasyn", "remix"])
    models: list = field(default_factory=lambda: ["logreg", "svm"])
    repeats: int = 5
    train_fraction: float = 0.7
    seed: int = 0
    k_neighbors: int = 5
    remix_alpha: float = 0.2
    remix_target: Optional[int] = None
    svm_c: float = 1.0
    kernel: str = "rbf"
    gamma: Optional[float] = None
    epochs: Optional[int] = None
    lr: Optional[float] = None
    l2: Optional[float] = None
    batch_size: Optional[int] = None
    head_epochs: Optional[int] = None
    top_k: int = 10
    out_dir: str = "augscope_out"
    save_models: bool = False
    save_train: bool = False

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: expected a mapping of config fields")
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self):
        for name in ("methods", "models"):
            v = getattr(self, name)
            if isinstance(v, str):
                setattr(self, name, [s.strip() for s in v.split(",") if s.strip()])
        if not self.methods or not self.models:
            raise ConfigError("methods and models must be non-empty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {list(METHODS)}")
        bad = [m for m in self.models if m not in MODEL_KINDS]
        if bad:
            raise ConfigError(f"unknown models {bad}; choose from {list(MODEL_KINDS)}")
        latent = [m for m in self.methods if m in LATENT_METHODS]
        others = [m for m in self.models if m != "mlp"]
        if latent and others:
            raise ConfigError(
                f"latent-space methods {latent} retrain the MLP's classification layer and "
                f"cannot be combined with models {others}; run them in a separate experiment "
                f"with models: [mlp]")
        if len(set(self.methods)) != len(self.methods) or len(set(self.models)) != len(self.models):
            raise ConfigError("methods and models must not repeat")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must be in (0, 1)")
        if self.kernel not in ("linear", "rbf"):
            raise ConfigError("kernel must be linear or rbf")
        if self.svm_c <= 0 or self.k_neighbors < 1 or self.remix_alpha <= 0 or self.top_k < 1:
            raise ConfigError("svm_c, k_neighbors, remix_alpha and top_k must be positive")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunResult:
    method: str
    model: str
    repeat: int
    bac: Optional[float]
    macro_f1: Optional[float]
    diagnostics: dict
    converged: Optional[bool] = None
    error: Optional[str] = None
    magnitudes: Optional[dict] = None
    wall_clock: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("wall_clock")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        return cls(**d)


def _seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def _train_cfg(cfg: ExperimentConfig, seed: int, head: bool = False) -> TrainConfig:
    return TrainConfig(lr=cfg.lr, epochs=cfg.head_epochs if head else cfg.epochs,
                       batch_size=cfg.batch_size, l2=cfg.l2, seed=seed)


def _fit(kind, train, cfg, seed, weights=None):
    if kind == "logreg":
        return train_logreg(train, weights, _train_cfg(cfg, seed))
    if kind == "svm":
        return train_svm(train, cfg.svm_c, cfg.kernel, cfg.gamma, weights, seed)
    return train_mlp(train, _train_cfg(cfg, seed), weights)


def _converged(model):
    return getattr(model, "converged", None)


def _diagnose(kind, model, base, train_aug, test: Dataset, cfg, base_cache):
    """Diagnostics dict plus per-feature magnitudes for one cell."""
    out, mags = {}, None
    is_base = base is None
    K = min(cfg.top_k, test.feature_count)
    if kind == "svm":
        census = diag.sv_census(model, train_aug, base)
        out["sv_census"] = asdict(census)
    elif kind == "logreg":
        wr = diag.weight_report(model, base)
        rep = diag.topk_ce(model, test.features, test.labels, K)
        if not is_base:
            rep.overlap_I_M = diag.topk_overlap(base_cache["topk"], rep)
        out["weights"] = asdict(wr)
        out["topk"] = _topk_summary(rep)
        mags = _mags(rep)
        if is_base:
            base_cache["topk"] = rep
    else:
        wr = diag.weight_report(model, base)
        rep = diag.topk_input_grad(model, test.features, K, test.labels)
        inst = diag.topk_input_grad(model, test.features, K, mode=diag.PER_INSTANCE)
        if not is_base:
            rep.overlap_I_M = diag.topk_overlap(base_cache["topk"], rep)
            inst.overlap_I_M = diag.topk_overlap(base_cache["topk_inst"], inst)
        out["weights"] = asdict(wr)
        out["topk"] = _topk_summary(rep)
        out["topk_per_instance_overlap"] = inst.overlap_I_M
        mags = _mags(rep)
        if is_base:
            base_cache["topk"] = rep
            base_cache["topk_inst"] = inst
    return out, mags


def _topk_summary(rep: diag.TopKReport) -> dict:
    return {"mode": rep.mode, "K": rep.K, "keys": list(rep.keys),
            "top_sets": [list(map(int, s)) for s in rep.top_sets], "overlap_I_M": rep.overlap_I_M}


def _mags(rep: diag.TopKReport) -> dict:
    return {str(k): [float(v) for v in m] for k, m in zip(rep.keys, rep.magnitudes)}


def _augment_input(method, train: Dataset, cfg, seed) -> AugmentedDataset:
    return augment(train, method, seed, cfg.k_neighbors, cfg.remix_alpha, cfg.remix_target)


def run_experiment(cfg: ExperimentConfig, data: Optional[Dataset] = None,
                   out_dir: Optional[str] = None) -> list:
    """Run every (method, model, repeat) cell and return the :class:`RunResult` list.

    ``data`` overrides ``cfg.data``. Training failures inside a cell are
    recorded on its result instead of aborting the sweep.
    """
    cfg.validate()
    if data is None:
        if cfg.data is None:
            raise ConfigError("no dataset given")
        data = load_csv(cfg.data, cfg.label_col)
    plan = stratified_splits(data, cfg.repeats, cfg.train_fraction, cfg.seed)
    save_dir = Path(out_dir or cfg.out_dir)
    results = []
    for r in range(cfg.repeats):
        raw_train = data.subset(plan.train_indices[r])
        raw_test = data.subset(plan.test_indices[r])
        scaler = fit_standardizer(raw_train)
        train = apply_standardizer(scaler, raw_train)
        test = apply_standardizer(scaler, raw_test)
        # filled lazily so a failing sampler only fails its own cells
        augmented = {}
        for ki, kind in enumerate(cfg.models):
            model_seed = _seed(cfg.seed, r, 2, ki)
            base_cache = {}
            t0 = time.perf_counter()
            try:
                base = _fit(kind, train, cfg, model_seed)
                base_train = AugmentedDataset.from_dataset(train)
                base_diag, base_mags = _diagnose(kind, base, None, base_train, test, cfg,
                                                 base_cache)
                base_err = None
            except Exception as exc:  # recorded, not fatal
                log.exception("base %s failed on repeat %d", kind, r)
                base, base_err = None, f"{type(exc).__name__}: {exc}"
            base_time = time.perf_counter() - t0
            for mi, method in enumerate(cfg.methods):
                t0 = time.perf_counter()
                if base is None:
                    results.append(RunResult(method, kind, r, None, None, {}, None,
                                             f"base model failed: {base_err}"))
                    continue
                if method == "base":
                    res = _score(method, kind, r, base, test, base_diag, base_mags)
                    res.wall_clock = base_time
                    results.append(res)
                    _save(cfg, save_dir, method, kind, r, base, base_train)
                    continue
                try:
                    model, train_aug = _train_cell(method, kind, train, base, cfg, model_seed,
                                                   _seed(cfg.seed, r, 1, mi), augmented)
                    dg, mags = _diagnose(kind, model, base, train_aug, test, cfg, base_cache)
                    dg["base_cell"] = _cell_name("base", kind, r)
                    res = _score(method, kind, r, model, test, dg, mags)
                    _save(cfg, save_dir, method, kind, r, model, train_aug)
                except Exception as exc:  # recorded, not fatal
                    log.exception("%s/%s failed on repeat %d", method, kind, r)
                    res = RunResult(method, kind, r, None, None, {}, None,
                                    f"{type(exc).__name__}: {exc}")
                res.wall_clock = time.perf_counter() - t0
                results.append(res)
                log.info("repeat %d %s/%s BAC=%s (%.2fs)", r, method, kind, res.bac, res.wall_clock)
    return results


def _train_cell(method, kind, train, base, cfg, model_seed, aug_seed, augmented):
    if method == "cs":
        w = class_weights(train)
        return _fit(kind, train, cfg, model_seed, w), AugmentedDataset.from_dataset(train, "cs")
    if method in LATENT_METHODS:
        latent = to_latent(base, train)
        sampler = dsm if method == "dsm" else eos
        lat_aug = sampler(latent, cfg.k_neighbors, aug_seed)
        return retrain_head(base, lat_aug, _train_cfg(cfg, model_seed, head=True)), lat_aug
    if method not in augmented:
        augmented[method] = _augment_input(method, train, cfg, aug_seed)
    aug = augmented[method]
    return _fit(kind, aug, cfg, model_seed), aug


def _score(method, kind, r, model, test, dg, mags) -> RunResult:
    pred = model.predict(test.features)
    dg["test_prediction_counts"] = np.bincount(pred, minlength=test.n_classes).tolist()
    return RunResult(method, kind, r, balanced_accuracy(test.labels, pred),
                     macro_f1(test.labels, pred), dg, _converged(model), None, mags)


def _save(cfg, save_dir, method, kind, r, model, train_aug):
    if cfg.save_models:
        (save_dir / "models").mkdir(parents=True, exist_ok=True)
        save_model(model, save_dir / "models" / f"{_cell_name(method, kind, r)}.json")
    if cfg.save_train and kind == cfg.models[0]:
        (save_dir / "train").mkdir(parents=True, exist_ok=True)
        write_augmented_csv(train_aug, save_dir / "train" / f"{method}__r{r}.csv")


def _cell_name(method, kind, r):
    return f"{method}__{kind}__r{r}"


def flatten_diagnostics(res: RunResult) -> dict:
    """Scalar metrics of one cell, keyed by aggregate-CSV column stem."""
    d = res.diagnostics
    flat = {"bac": res.bac, "macro_f1": res.macro_f1}
    census = d.get("sv_census")
    if census:
        flat["sv_count"] = census["n_support"]
        flat["sv_multiple_vs_base"] = census["sv_multiple_vs_base"]
        flat["class_ratio_maj_min"] = census["class_ratio_maj_min"]
        flat["new_sv_ratio"] = census["new_sv_ratio"]
        flat["synthetic_sv_ratio"] = census["synthetic_sv_ratio"]
        for c, s in enumerate(census["dual_sum_per_class"]):
            flat[f"dual_sum_class{c}"] = s
    w = d.get("weights")
    if w:
        flat["frobenius_total"] = w["frobenius_total"]
        for c, v in enumerate(w["per_class_head_norms"]):
            flat[f"head_norm_class{c}"] = v
        flat["weight_diff_pct"] = w["mean_pct_diff_vs_base"]
    if d.get("topk"):
        flat["topk_overlap"] = d["topk"]["overlap_I_M"]
    if "topk_per_instance_overlap" in d:
        flat["topk_per_instance_overlap"] = d["topk_per_instance_overlap"]
    return flat


def aggregate(results: list, methods: list, models: list) -> list:
    """One row per (method, model) with mean and population std over repeats."""
    rows = []
    for method in methods:
        for kind in models:
            cell = [r for r in results if r.method == method and r.model == kind]
            flats = [flatten_diagnostics(r) for r in cell if r.error is None]
            keys = []
            for f in flats:
                keys += [k for k in f if k not in keys]
            row = {"method": method, "model": kind, "n_repeats": len(flats),
                   "n_failed": len(cell) - len(flats)}
            for k in keys:
                vals = [f[k] for f in flats if f.get(k) is not None]
                vals = [v for v in vals if not (isinstance(v, float) and math.isnan(v))]
                row[f"{k}_mean"] = float(np.mean(vals)) if vals else None
                row[f"{k}_std"] = float(np.std(vals)) if vals else None
            rows.append(row)
    return rows


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def emit_reports(results: list, out_dir, cfg: Optional[ExperimentConfig] = None,
                 metadata: Optional[dict] = None) -> list:
    """Write per-cell JSON, ``aggregate.csv`` and per-feature magnitude CSVs; return the paths."""
    if not results:
        raise ValueError("no results to report")
    out = Path(out_dir)
    (out / "cells").mkdir(parents=True, exist_ok=True)
    (out / "features").mkdir(parents=True, exist_ok=True)
    written = []
    meta = dict(metadata or {})
    for res in results:
        path = out / "cells" / f"{_cell_name(res.method, res.model, res.repeat)}.json"
        payload = {"result": _finite(res.to_dict()), "metadata": meta}
        path.write_text(json.dumps(payload, indent=1, sort_keys=True, allow_nan=False,
                                   default=_json_default), encoding="utf-8")
        written.append(path)
        if res.magnitudes:
            fpath = out / "features" / f"{_cell_name(res.method, res.model, res.repeat)}.csv"
            top = {str(k): set(s) for k, s in zip(res.diagnostics["topk"]["keys"],
                                                  res.diagnostics["topk"]["top_sets"])}
            with fpath.open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["class", "feature", "magnitude", "in_top_k"])
                for cls, mags in res.magnitudes.items():
                    for j, m in enumerate(mags):
                        w.writerow([cls, j, repr(m), int(j in top.get(cls, ()))])
            written.append(fpath)

    methods = list(dict.fromkeys(r.method for r in results))
    models = list(dict.fromkeys(r.model for r in results))
    if cfg is not None:
        methods = [m for m in cfg.methods if m in methods]
        models = [m for m in cfg.models if m in models]
    rows = aggregate(results, methods, models)
    columns = []
    for row in rows:
        columns += [k for k in row if k not in columns]
    apath = out / "aggregate.csv"
    with apath.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_csv_value(row.get(c)) for c in columns])
    written.append(apath)
    if cfg is not None:
        rpath = out / "run.json"
        rpath.write_text(json.dumps({"config": cfg.to_dict(), "metadata": meta}, indent=1,
                                    sort_keys=True, default=_json_default), encoding="utf-8")
        written.append(rpath)
    return written


def _finite(obj):
    """Replace NaN/inf with None so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def load_cell(path) -> RunResult:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return RunResult.from_dict(payload["result"])


def run_metadata(cfg: ExperimentConfig, data: Dataset) -> dict:
    """Choices that are ours rather than fixed by the method descriptions."""
    meta = {
        "label_values": data.metadata.get("label_values"),
        "dataset": data.metadata.get("source"),
        "n": data.n,
        "d": data.feature_count,
        "imbalance_ratio": imbalance_ratio(data),
        "svm_kernel": cfg.kernel,
        "svm_gamma": cfg.gamma if cfg.gamma is not None else "1/(d * mean column variance)",
        "svm_C": cfg.svm_c,
        "k_neighbors": cfg.k_neighbors,
        "remix_alpha": cfg.remix_alpha,
        "remix_undersample_target": cfg.remix_target if cfg.remix_target is not None
        else "geometric mean of class counts",
        "standardizer": "fit on training split only",
        "splits": f"{cfg.repeats} stratified shuffle-splits at {cfg.train_fraction:g} train",
        "f1_zero_division": "class with precision + recall = 0 scores 0",
    }
    return meta


def default_svm_gamma(train: Dataset) -> float:
    return default_gamma(train.features)
