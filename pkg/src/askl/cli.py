"""Command-line interface: ``askl {train,eval,grid,bench,curves,bound}``.

Every command writes its outputs to a staging directory and moves them into
``--out`` only after the run succeeds, so a failed run leaves nothing behind.
A ``manifest.json`` listing the resolved configuration, seeds, dataset and
artifacts is written last.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""
import argparse
import csv
import hashlib
import io
import json
import math
import os
import shutil
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .bounds import bound_report
from .data import REGISTRY_ENV, DataError, ParamGrid, grid_search, read_registry, resolve_dataset, split
from .model import (TraceLog, TraceRecord, TrainConfig, Variant, evaluate, fit, load_model, model_to_dict)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
CONFIG_SCHEMA_VERSION = 1
CURVE_COLUMNS = ("iteration", "objective", "test_metric", "nuclear_norm_w", "feature_frobenius_sq")
DEFAULT_REGISTRY = Path("data") / "registry.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# formatting helpers

def fmt(x):
    """17 significant digits, enough for an exact binary round-trip."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dump_json(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def curves_csv(log, prefix_columns=(), prefix_values=()):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(prefix_columns) + list(CURVE_COLUMNS))
    for rec in log.records:
        w.writerow(list(prefix_values) + [fmt(getattr(rec, c)) for c in CURVE_COLUMNS])
    return buf.getvalue()


def read_curves(path):
    """Parse a curves CSV back into a :class:`TraceLog`."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0][-len(CURVE_COLUMNS):]) != CURVE_COLUMNS:
        raise DataError(f"{path}: not a curves file (header {rows[0] if rows else 'missing'})")
    log = TraceLog()
    skip = len(rows[0]) - len(CURVE_COLUMNS)
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            vals = row[skip:]
            log.append(TraceRecord(int(vals[0]), *(float(v) for v in vals[1:])))
        except (ValueError, IndexError, TypeError) as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
    return log


def curves_svg(runs, column="objective", width=720, height=420):
    """Line chart overlaying ``runs``, a list of ``(label, TraceLog)``."""
    margin_l, margin_r, margin_t, margin_b = 70, 180, 20, 45
    pts = [(lab, log.column("iteration"), log.column(column)) for lab, log in runs]
    xs = np.concatenate([p[1] for p in pts]).astype(float)
    ys = np.concatenate([p[2] for p in pts])
    ys = ys[np.isfinite(ys)]
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = width - margin_l - margin_r, height - margin_t - margin_b

    def sx(v):
        return margin_l + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return margin_t + (1.0 - (v - y0) / (y1 - y0)) * ph

    colours = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="{margin_l}" y="{margin_t}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>',
           f'<text x="{margin_l + pw / 2:.1f}" y="{height - 10}" text-anchor="middle" font-size="12">iteration</text>',
           f'<text x="15" y="{margin_t + ph / 2:.1f}" font-size="12" '
           f'transform="rotate(-90 15 {margin_t + ph / 2:.1f})" text-anchor="middle">{column}</text>']
    for v, anchor in ((x0, "start"), (x1, "end")):
        out.append(f'<text x="{sx(v):.1f}" y="{margin_t + ph + 15}" font-size="10" '
                   f'text-anchor="{anchor}">{v:g}</text>')
    for v in (y0, y1):
        out.append(f'<text x="{margin_l - 5}" y="{sy(v):.1f}" font-size="10" text-anchor="end">{v:.4g}</text>')
    for i, (label, it, val) in enumerate(pts):
        colour = colours[i % len(colours)]
        keep = np.isfinite(val)
        coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(it[keep], val[keep]))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{coords}">'
                   f'<title>{_xml(label)}</title></polyline>')
        ly = margin_t + 15 + 18 * i
        out.append(f'<line x1="{width - margin_r + 10}" y1="{ly}" x2="{width - margin_r + 30}" y2="{ly}" '
                   f'stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text class="legend" x="{width - margin_r + 35}" y="{ly + 4}" font-size="11">'
                   f'{_xml(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _xml(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


# configuration

def load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError("config must be a JSON object")
    version = raw.get("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise UsageError(f"unsupported config schema_version {version}")
    return raw


def _check_keys(raw, allowed, where):
    unknown = set(raw) - set(allowed) - {"schema_version"}
    if unknown:
        raise UsageError(f"unknown keys in {where}: {sorted(unknown)}")


def train_config(raw, **overrides):
    raw = dict(raw or {})
    raw.pop("schema_version", None)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return TrainConfig.from_dict(raw)
    except (TypeError, ValueError, KeyError) as exc:
        raise UsageError(f"invalid model config: {exc}") from None


def _grid_from(raw):
    try:
        return ParamGrid(tuple(raw.get("lambda1_values", (0.0,))), tuple(raw.get("lambda2_values", (0.0,))),
                         tuple(raw.get("sigma_values", (1.0,))), int(raw.get("folds", 5)))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid grid: {exc}") from None


def registry_path():
    env = os.environ.get(REGISTRY_ENV)
    if env:
        return Path(env)
    return DEFAULT_REGISTRY if DEFAULT_REGISTRY.exists() else None


def load_data(ref):
    if ref is None:
        raise UsageError("no dataset given (use --data or a 'dataset' config key)")
    path = registry_path()
    try:
        registry = read_registry(path) if path else {}
        return resolve_dataset(str(ref), registry=registry)
    except json.JSONDecodeError as exc:
        raise DataError(f"dataset registry {path} is not valid JSON: {exc}") from None
    except OSError as exc:
        raise DataError(f"cannot read dataset {ref!r}: {exc}") from None


def file_digest(path):
    h = hashlib.sha256()
    paths = sorted(p for p in Path(path).rglob("*") if p.is_file()) if Path(path).is_dir() else [Path(path)]
    for p in paths:
        h.update(p.read_bytes())
    return h.hexdigest()


# output staging

class Outputs:
    """Collects artifacts in a staging directory and publishes them on commit."""

    def __init__(self, out):
        if out is None:
            raise UsageError("--out is required")
        self.out = Path(out)
        if self.out.exists() and not self.out.is_dir():
            raise UsageError(f"--out {out} exists and is not a directory")
        self.out.parent.mkdir(parents=True, exist_ok=True)
        self.stage = Path(tempfile.mkdtemp(prefix=f".{self.out.name}.", dir=self.out.parent))
        self.files = []

    def write(self, relpath, text):
        p = self.stage / relpath
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
        self.files.append(str(relpath))

    def commit(self, manifest):
        manifest = dict(manifest, artifacts=sorted(self.files + ["manifest.json"]))
        self.write("manifest.json", dump_json(manifest))
        self.out.mkdir(parents=True, exist_ok=True)
        for rel in self.files:
            dest = self.out / rel
            dest.parent.mkdir(parents=True, exist_ok=True)
            os.replace(self.stage / rel, dest)
        self.discard()

    def discard(self):
        shutil.rmtree(self.stage, ignore_errors=True)


def manifest(command, config, seeds, dataset, started, **extra):
    return dict(command=command, config=config, seeds=list(seeds), dataset=dataset,
                wall_clock_seconds=round(time.perf_counter() - started, 3), tool_version=__version__,
                backend=_backend.NAME, **extra)


def _dataset_entry(ds, ref):
    path = registry_path()
    registry = read_registry(path) if path else {}
    src = registry[ref]["path"] if ref in registry else ref
    return {"name": ds.name or str(ref), "ref": str(ref), "path": str(Path(src).resolve()),
            "sha256": file_digest(src), "n": ds.n, "d": ds.d, "task": ds.task}


# commands

TRAIN_KEYS = ("dataset", "test_fraction", "model", "delta")


def _train_and_report(ds, cfg, test_fraction, delta=0.05):
    train, test = split(ds, test_fraction, cfg.seed)
    model, log = fit(train, cfg, test)
    metrics = {"variant": cfg.variant.name if isinstance(cfg.variant, Variant) else "custom",
               "metric": evaluate(model, test).name, "test": evaluate(model, test).value,
               "train": evaluate(model, train).value, "n_train": train.n, "n_test": test.n,
               "iterations": cfg.epochs * -(-train.n // (cfg.batch_size or train.n)),
               "final_objective": log.records[-1].objective if len(log) else None,
               "bound": bound_report(model, train, delta=delta).to_dict()}
    return model, log, metrics


def cmd_train(args, raw):
    _check_keys(raw, TRAIN_KEYS, "train config")
    cfg = train_config(raw.get("model"), seed=args.seed)
    ref = args.data or raw.get("dataset")
    ds = load_data(ref)
    tf = float(raw.get("test_fraction", 0.2))
    started = time.perf_counter()
    out = Outputs(args.out)
    try:
        model, log, metrics = _train_and_report(ds, cfg, tf, float(raw.get("delta", 0.05)))
        metrics["dataset"] = ds.name
        out.write("model.json", json.dumps(model_to_dict(model), sort_keys=True) + "\n")
        out.write("metrics.json", dump_json(metrics))
        out.write("curves.csv", curves_csv(log))
        snapshot = {"schema_version": CONFIG_SCHEMA_VERSION, "dataset": str(ref), "test_fraction": tf,
                    "delta": float(raw.get("delta", 0.05)), "model": cfg.to_dict()}
        out.write("config.json", dump_json(snapshot))
        out.commit(manifest("train", snapshot, [cfg.seed], _dataset_entry(ds, ref), started))
    except BaseException:
        out.discard()
        raise
    print(f"{metrics['metric']} = {metrics['test']:.6g} on {metrics['n_test']} held-out examples")
    return EXIT_OK


def _load_model_arg(path):
    if path is None:
        raise UsageError("--model is required")
    try:
        return load_model(path)
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc}") from None
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"model file {path} is malformed: {exc}") from None


def cmd_eval(args, raw):
    model = _load_model_arg(args.model)
    ref = args.data or raw.get("dataset")
    ds = load_data(ref)
    started = time.perf_counter()
    m = evaluate(model, ds)
    out = Outputs(args.out)
    try:
        out.write("metrics.json", dump_json({"dataset": ds.name, "metric": m.name, "value": m.value, "n": ds.n}))
        out.commit(manifest("eval", {"model": str(Path(args.model).resolve()), "dataset": str(ref)}, [],
                            _dataset_entry(ds, ref), started, model_sha256=file_digest(args.model)))
    except BaseException:
        out.discard()
        raise
    print(f"{m.name} = {m.value:.6g} on {ds.n} examples")
    return EXIT_OK


def cmd_bound(args, raw):
    model = _load_model_arg(args.model)
    ref = args.data or raw.get("dataset")
    ds = load_data(ref)
    started = time.perf_counter()
    rep = bound_report(model, ds, L=args.lipschitz, delta=args.delta)
    out = Outputs(args.out)
    try:
        out.write("metrics.json", dump_json({"dataset": ds.name, "bound": rep.to_dict()}))
        out.commit(manifest("bound", {"model": str(Path(args.model).resolve()), "dataset": str(ref),
                                      "delta": args.delta, "L": args.lipschitz}, [],
                            _dataset_entry(ds, ref), started, model_sha256=file_digest(args.model)))
    except BaseException:
        out.discard()
        raise
    print(f"rademacher = {rep.rademacher:.6g} (envelope {rep.envelope:.6g}), excess risk = {rep.excess_risk:.6g}")
    return EXIT_OK


GRID_KEYS = ("dataset", "test_fraction", "model", "grid")


def cmd_grid(args, raw):
    _check_keys(raw, GRID_KEYS, "grid config")
    base = train_config(raw.get("model"), seed=args.seed)
    grid = _grid_from(raw.get("grid", {}))
    ref = args.data or raw.get("dataset")
    ds = load_data(ref)
    tf = float(raw.get("test_fraction", 0.2))
    started = time.perf_counter()
    out = Outputs(args.out)
    try:
        train, _ = split(ds, tf, base.seed)
        best, cells = grid_search(train, grid, base, threads=args.threads)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda1", "lambda2", "sigma", "mean_metric"]
                   + [f"fold{k}" for k in range(grid.folds)] + ["failed"])
        for c in cells:
            folds = [fmt(v) for v in c.fold_metrics] + [""] * (grid.folds - len(c.fold_metrics))
            w.writerow([fmt(c.lambda1), fmt(c.lambda2), fmt(c.sigma), fmt(c.mean_metric)] + folds + [c.failed])
        out.write("grid.csv", buf.getvalue())
        model, log, metrics = _train_and_report(ds, best, tf)
        metrics.update(dataset=ds.name, best={"lambda1": best.lambda1, "lambda2": best.lambda2,
                                              "sigma": best.sigma})
        out.write("model.json", json.dumps(model_to_dict(model), sort_keys=True) + "\n")
        out.write("metrics.json", dump_json(metrics))
        out.write("curves.csv", curves_csv(log))
        snapshot = {"schema_version": CONFIG_SCHEMA_VERSION, "dataset": str(ref), "test_fraction": tf,
                    "model": base.to_dict(), "grid": {"lambda1_values": grid.lambda1_values,
                                                      "lambda2_values": grid.lambda2_values,
                                                      "sigma_values": grid.sigma_values, "folds": grid.folds}}
        out.write("config.json", dump_json(snapshot))
        out.commit(manifest("grid", snapshot, [base.seed], _dataset_entry(ds, ref), started,
                            threads=args.threads))
    except BaseException:
        out.discard()
        raise
    print(f"best lambda1={best.lambda1:g} lambda2={best.lambda2:g} sigma={best.sigma:g}: "
          f"{metrics['metric']} = {metrics['test']:.6g}")
    return EXIT_OK


# benchmark

BENCH_KEYS = ("datasets", "variants", "seeds", "epochs", "test_fraction", "model", "overrides", "tuning")


def _bench_run(job):
    """One (dataset, variant, seed) run; numerical failures are returned, not raised."""
    ds, cfg, tf = job
    train, test = split(ds, tf, cfg.seed)
    try:
        model, log = fit(train, cfg, test)
        m = evaluate(model, test)
        return m.name, m.value, log, ""
    except ArithmeticError as exc:
        return "", float("nan"), TraceLog(), f"{type(exc).__name__}: {exc}"


def _tune(job):
    ds, base, tuning, tf = job
    train, _ = split(ds, tf, base.seed)
    grid = ParamGrid(tuple(tuning.get("lambda1_values", (base.lambda1,))),
                     tuple(tuning.get("lambda2_values", (base.lambda2,))),
                     tuple(tuning.get("sigma_values", (base.sigma,))), int(tuning.get("folds", 3)))
    try:
        best, _ = grid_search(train, grid, base)
    except RuntimeError:
        return base
    return best


def _map(fn, jobs, threads):
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def cmd_bench(args, raw):
    _check_keys(raw, BENCH_KEYS, "bench config")
    datasets = raw.get("datasets") or ([args.data] if args.data else None)
    if args.data and raw.get("datasets"):
        datasets = [args.data]
    if not datasets:
        raise UsageError("bench config needs a non-empty 'datasets' list")
    try:
        variants = [Variant[v] for v in raw.get("variants", [v.name for v in Variant])]
    except KeyError as exc:
        raise UsageError(f"unknown variant {exc}") from None
    seeds = raw.get("seeds", 5)
    first = args.seed if args.seed is not None else 0
    seeds = list(range(first, first + int(seeds))) if isinstance(seeds, int) else [int(s) for s in seeds]
    tf = float(raw.get("test_fraction", 0.2))
    model_raw = dict(raw.get("model", {}))
    if "epochs" in raw:
        model_raw["epochs"] = raw["epochs"]
    overrides = raw.get("overrides", {})
    tuning = raw.get("tuning")
    if tuning is not None:
        _check_keys(tuning, ("sigma_values", "lambda1_values", "lambda2_values", "folds"), "tuning")
        _grid_from(tuning)
    loaded = [(ref, load_data(ref)) for ref in datasets]
    started = time.perf_counter()

    bases = {}
    for ref, ds in loaded:
        for v in variants:
            cell_raw = dict(model_raw, variant=v.name, **overrides.get(v.name, {}))
            bases[ref, v] = train_config(cell_raw, seed=seeds[0])
    if tuning is not None:
        keys = list(bases)
        tuned = _map(_tune, [(dict(loaded)[r], bases[r, v], tuning, tf) for r, v in keys], args.threads)
        bases = dict(zip(keys, tuned))

    jobs, keys = [], []
    for ref, ds in loaded:
        for v in variants:
            for s in seeds:
                jobs.append((ds, replace(bases[ref, v], seed=s), tf))
                keys.append((ref, ds.name, v, s))
    results = _map(_bench_run, jobs, args.threads)

    out = Outputs(args.out)
    try:
        runs = io.StringIO()
        rw = csv.writer(runs, lineterminator="\n")
        rw.writerow(["dataset", "variant", "seed", "metric", "value", "sigma", "lambda1", "lambda2", "status"])
        curves = io.StringIO()
        cw = csv.writer(curves, lineterminator="\n")
        cw.writerow(["dataset", "variant", "seed"] + list(CURVE_COLUMNS))
        per_cell, n_failed = {}, 0
        for (ref, name, v, s), (metric, value, log, failure), (_, cfg, _) in zip(keys, results, jobs):
            per_cell.setdefault((name, v), []).append((metric, value, failure))
            n_failed += bool(failure)
            rw.writerow([name, v.name, s, metric, fmt(value), fmt(cfg.sigma), fmt(cfg.lambda1),
                         fmt(cfg.lambda2), failure or "ok"])
            for rec in log.records:
                cw.writerow([name, v.name, s] + [fmt(getattr(rec, c)) for c in CURVE_COLUMNS])
            out.write(f"curves/{name}_{v.name}_seed{s}.csv", curves_csv(log))
        out.write("bench_runs.csv", runs.getvalue())
        out.write("curves.csv", curves.getvalue())
        out.write("bench_table.csv", _bench_table([ds.name for _, ds in loaded], variants, per_cell))
        snapshot = {"schema_version": CONFIG_SCHEMA_VERSION, "datasets": list(datasets),
                    "variants": [v.name for v in variants], "seeds": seeds, "test_fraction": tf,
                    "model": model_raw, "overrides": overrides, "tuning": tuning,
                    "resolved": {f"{ds.name}/{v.name}": bases[ref, v].to_dict()
                                 for ref, ds in loaded for v in variants}}
        out.write("config.json", dump_json({k: v for k, v in snapshot.items() if k != "resolved"}))
        out.commit(manifest("bench", snapshot, seeds, [_dataset_entry(ds, ref) for ref, ds in loaded],
                            started, threads=args.threads, failed_runs=n_failed))
    except BaseException:
        out.discard()
        raise
    if n_failed:
        print(f"warning: {n_failed} of {len(jobs)} runs failed; see bench_runs.csv", file=sys.stderr)
        if n_failed == len(jobs):
            return EXIT_NUMERIC
    print(Path(args.out) / "bench_table.csv")
    return EXIT_OK


def _bench_table(names, variants, per_cell):
    """Datasets as rows, ``<variant>_mean`` / ``<variant>_std`` columns (sample std over seeds)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["dataset", "metric"]
    for v in variants:
        header += [f"{v.name}_mean", f"{v.name}_std", f"{v.name}_n"]
    w.writerow(header + ["failures"])
    for name in names:
        metric = next((m for v in variants for m, _, f in per_cell[name, v] if not f), "")
        row, failures = [name, metric], []
        for v in variants:
            vals = np.array([val for _, val, f in per_cell[name, v] if not f])
            mean = vals.mean() if vals.size else float("nan")
            std = vals.std(ddof=1) if vals.size > 1 else float("nan")
            row += [fmt(mean), fmt(std), str(vals.size)]
            bad = sum(1 for _, _, f in per_cell[name, v] if f)
            if bad:
                failures.append(f"{v.name}:{bad}")
        w.writerow(row + [";".join(failures)])
    return buf.getvalue()


# curves

CURVES_KEYS = ("runs", "test_fraction")


def cmd_curves(args, raw):
    """Re-export curves of existing runs, or train the runs listed in the config."""
    started = time.perf_counter()
    runs, snapshot, seeds, data_entries = [], {}, [], []
    if args.runs:
        for d in args.runs:
            p = Path(d)
            p = p / "curves.csv" if p.is_dir() else p
            if not p.exists():
                raise DataError(f"no curves file at {p}")
            label = p.parent.name if p.name == "curves.csv" else p.stem
            runs.append((label, read_curves(p)))
        snapshot = {"runs": [str(Path(d).resolve()) for d in args.runs]}
    else:
        _check_keys(raw, CURVES_KEYS, "curves config")
        specs = raw.get("runs")
        if not specs:
            raise UsageError("give run directories or a config with a 'runs' list")
        tf = float(raw.get("test_fraction", 0.2))
        resolved = []
        for i, spec in enumerate(specs):
            spec = dict(spec)
            ref = spec.pop("dataset", args.data)
            label = spec.pop("label", None)
            cfg = train_config(spec, seed=args.seed)
            ds = load_data(ref)
            train, test = split(ds, tf, cfg.seed)
            _, log = fit(train, cfg, test)
            runs.append((label or f"{ds.name}_{cfg.variant.name}_seed{cfg.seed}", log))
            resolved.append(dict(cfg.to_dict(), dataset=str(ref), label=runs[-1][0]))
            seeds.append(cfg.seed)
            data_entries.append(_dataset_entry(ds, ref))
        snapshot = {"schema_version": CONFIG_SCHEMA_VERSION, "test_fraction": tf, "runs": resolved}
    for label, log in runs:
        if len(log) == 0:
            raise DataError(f"run {label!r} has an empty trace log")
    labels = [lab for lab, _ in runs]
    if len(set(labels)) != len(labels):
        raise UsageError(f"run labels must be unique, got {labels}")
    out = Outputs(args.out)
    try:
        for label, log in runs:
            out.write(f"{label}.csv", curves_csv(log))
        if not args.no_svg:
            out.write("curves.svg", curves_svg(runs, args.column))
        out.commit(manifest("curves", snapshot, seeds, data_entries, started))
    except BaseException:
        out.discard()
        raise
    print(f"wrote {len(runs)} curve files to {args.out}")
    return EXIT_OK


# entry point

def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--data", help=f"dataset name in the registry (${REGISTRY_ENV}) or a LIBSVM path")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for grid and bench")
    parser = _Parser(prog="askl", description="Spectral kernel learning with random Fourier features.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("train", parents=[common], help="train one model on an 80/20 split")
    p = sub.add_parser("eval", parents=[common], help="evaluate a saved model on a dataset")
    p.add_argument("--model", help="model artifact written by train")
    sub.add_parser("grid", parents=[common], help="k-fold grid search, then train the best config")
    sub.add_parser("bench", parents=[common], help="datasets x variants x seeds comparison table")
    p = sub.add_parser("curves", parents=[common], help="export training curves as CSV and SVG")
    p.add_argument("runs", nargs="*", help="run directories (or curves.csv files) to re-export")
    p.add_argument("--column", default="objective", choices=CURVE_COLUMNS[1:], help="column drawn in the SVG")
    p.add_argument("--no-svg", action="store_true", help="skip the SVG chart")
    p = sub.add_parser("bound", parents=[common], help="Rademacher estimate and excess-risk bound of a model")
    p.add_argument("--model", help="model artifact written by train")
    p.add_argument("--delta", type=float, default=0.05, help="confidence parameter in (0, 1)")
    p.add_argument("--lipschitz", type=float, help="loss Lipschitz constant (default depends on the loss)")
    return parser


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "grid": cmd_grid, "bench": cmd_bench,
            "curves": cmd_curves, "bound": cmd_bound}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        return COMMANDS[args.command](args, load_config(args.config))
    except UsageError as exc:
        print(f"askl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"askl: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ArithmeticError as exc:
        print(f"askl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"askl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
