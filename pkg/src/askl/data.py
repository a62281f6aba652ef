"""LIBSVM ingestion, standardisation, splits and cross-validated grid search."""
import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .rng import make_rng

CLASSIFICATION = "classification"
REGRESSION = "regression"
REGISTRY_ENV = "ASKL_DATASET_REGISTRY"


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class Dataset:
    """Dense inputs with class indices (classification) or an n x K target array.

    ``label_names[c]`` is the original LIBSVM label text of class ``c``.
    """

    X: np.ndarray
    y: np.ndarray
    task: str
    n_outputs: int
    name: str = ""
    label_names: tuple = ()

    def __post_init__(self):
        if self.task not in (CLASSIFICATION, REGRESSION):
            raise DataError(f"unknown task {self.task!r}")
        if self.X.ndim != 2 or self.X.shape[0] < 1:
            raise DataError(f"X must be a non-empty n x d array, got {self.X.shape}")
        if not np.all(np.isfinite(self.X)):
            raise DataError("features contain NaN or Inf")
        n = self.X.shape[0]
        if self.task == CLASSIFICATION:
            if self.y.shape != (n,) or self.y.min() < 0 or self.y.max() >= self.n_outputs:
                raise DataError(f"class indices must be {n} values in [0, {self.n_outputs})")
        elif self.y.shape != (n, self.n_outputs):
            raise DataError(f"targets must have shape {(n, self.n_outputs)}, got {self.y.shape}")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.intp)
        return replace(self, X=self.X[idx], y=self.y[idx])


def _label_sort_key(text):
    try:
        return (0, float(text), text)
    except ValueError:
        return (1, 0.0, text)


def parse_libsvm(lines, task=CLASSIFICATION, d_hint=None, name=""):
    """Parse ``<label> <index>:<value> ...`` lines into a dense :class:`Dataset`.

    Indices are 1-based and must strictly increase within a line.  Class
    labels are remapped to ``0..K-1`` in sorted order of the label text's
    numeric value.
    """
    labels, rows = [], []
    width = 0
    for lineno, raw in enumerate(lines, start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        tokens = text.split()
        entries = {}
        last = 0
        for tok in tokens[1:]:
            idx_text, sep, val_text = tok.partition(":")
            try:
                idx = int(idx_text)
                val = float(val_text)
            except ValueError:
                raise DataError(f"line {lineno}: malformed feature {tok!r}") from None
            if not sep or idx < 1:
                raise DataError(f"line {lineno}: malformed feature {tok!r}")
            if idx <= last:
                raise DataError(f"line {lineno}: feature indices must strictly increase ({idx} after {last})")
            if not math.isfinite(val):
                raise DataError(f"line {lineno}: non-finite feature value {val_text!r}")
            entries[idx] = val
            last = idx
        if task == REGRESSION:
            try:
                target = float(tokens[0])
            except ValueError:
                raise DataError(f"line {lineno}: regression target {tokens[0]!r} is not a number") from None
            if not math.isfinite(target):
                raise DataError(f"line {lineno}: non-finite target")
            labels.append(target)
        else:
            labels.append(tokens[0])
        rows.append(entries)
        width = max(width, last)
    if not rows:
        raise DataError("no data lines found")
    d = width if d_hint is None else int(d_hint)
    if d < width:
        raise DataError(f"feature index {width} exceeds d_hint={d}")
    X = np.zeros((len(rows), max(d, 1)))
    for i, entries in enumerate(rows):
        for idx, val in entries.items():
            X[i, idx - 1] = val
    if task == REGRESSION:
        return Dataset(X, np.array(labels, dtype=np.float64)[:, None], REGRESSION, 1, name)
    names = sorted(set(labels), key=_label_sort_key)
    lookup = {lab: c for c, lab in enumerate(names)}
    y = np.array([lookup[lab] for lab in labels], dtype=np.intp)
    return Dataset(X, y, CLASSIFICATION, len(names), name, tuple(names))


def format_libsvm(ds):
    """Inverse of :func:`parse_libsvm`; zero features are omitted."""
    out = []
    for i in range(ds.n):
        if ds.task != CLASSIFICATION:
            label = repr(float(ds.y[i, 0]))
        else:
            label = ds.label_names[ds.y[i]] if ds.label_names else str(int(ds.y[i]))
        feats = [f"{j + 1}:{float(v)!r}" for j, v in enumerate(ds.X[i]) if v != 0.0]
        out.append(" ".join([label, *feats]))
    return out


def load_libsvm(path, task=CLASSIFICATION, d_hint=None, name=None):
    """Read one LIBSVM file, or every regular file of a directory in name order."""
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.is_file())
    else:
        files = [path]
    lines = []
    for f in files:
        with open(f, encoding="utf-8") as fh:
            lines.extend(fh.read().splitlines())
    return parse_libsvm(lines, task, d_hint, name or path.stem)


def read_registry(path=None):
    """Map of dataset name to ``{"path": absolute path, "task": ...}``."""
    path = path or os.environ.get(REGISTRY_ENV)
    if not path:
        return {}
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    out = {}
    for name, entry in raw.items():
        if isinstance(entry, str):
            entry = {"path": entry}
        p = Path(entry["path"])
        if not p.is_absolute():
            p = path.parent / p
        out[name] = {"path": str(p), "task": entry.get("task", CLASSIFICATION),
                     "d": entry.get("d")}
    return out


def resolve_dataset(ref, task=None, registry=None):
    """Load a dataset from a registry name or a filesystem path."""
    registry = read_registry() if registry is None else registry
    if ref in registry:
        entry = registry[ref]
        return load_libsvm(entry["path"], task or entry["task"], entry.get("d"), ref)
    if not Path(ref).exists():
        raise FileNotFoundError(f"dataset {ref!r} is neither a registry name nor an existing path")
    return load_libsvm(ref, task or CLASSIFICATION)


@dataclass(frozen=True)
class StandardizationSpec:
    """Affine transforms fitted on training data only.

    Features are z-scored (``scale_features=False`` stores the identity);
    regression targets map the training range onto [0, 100].
    """

    feature_means: np.ndarray
    feature_stds: np.ndarray
    zero_variance: np.ndarray
    target_scale: float = 1.0
    target_offset: float = 0.0

    def apply_X(self, X):
        return (np.asarray(X, dtype=np.float64) - self.feature_means) / self.feature_stds

    def apply_y(self, y):
        return self.target_scale * np.asarray(y, dtype=np.float64) + self.target_offset

    def apply(self, ds):
        y = self.apply_y(ds.y) if ds.task == REGRESSION else ds.y
        return replace(ds, X=self.apply_X(ds.X), y=y)

    def to_dict(self):
        return {
            "feature_means": self.feature_means.tolist(),
            "feature_stds": self.feature_stds.tolist(),
            "zero_variance": self.zero_variance.tolist(),
            "target_scale": self.target_scale,
            "target_offset": self.target_offset,
        }

    @classmethod
    def from_dict(cls, raw):
        return cls(np.array(raw["feature_means"], dtype=np.float64),
                   np.array(raw["feature_stds"], dtype=np.float64),
                   np.array(raw["zero_variance"], dtype=bool),
                   float(raw["target_scale"]), float(raw["target_offset"]))

    def __eq__(self, other):
        return (isinstance(other, StandardizationSpec)
                and np.array_equal(self.feature_means, other.feature_means)
                and np.array_equal(self.feature_stds, other.feature_stds)
                and np.array_equal(self.zero_variance, other.zero_variance)
                and self.target_scale == other.target_scale
                and self.target_offset == other.target_offset)

    __hash__ = None


def fit_standardization(train, scale_features=True):
    d = train.d
    if scale_features:
        means = train.X.mean(axis=0)
        stds = train.X.std(axis=0)
        zero = stds == 0.0
        stds = np.where(zero, 1.0, stds)
    else:
        means, stds, zero = np.zeros(d), np.ones(d), np.zeros(d, dtype=bool)
    scale, offset = 1.0, 0.0
    if train.task == REGRESSION:
        lo, hi = float(train.y.min()), float(train.y.max())
        if not hi > lo:
            raise DataError(f"training targets have a degenerate range [{lo}, {hi}]")
        scale = 100.0 / (hi - lo)
        offset = -lo * scale
    return StandardizationSpec(means, stds, zero, scale, offset)


def standardize(train, apply_to, scale_features=True):
    """Fit the spec on ``train`` and return ``(transformed apply_to, spec)``."""
    spec = fit_standardization(train, scale_features)
    return spec.apply(apply_to), spec


def split_indices(n, test_fraction, seed):
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    perm = make_rng(seed, 2).permutation(n)
    n_train = math.ceil(n * (1.0 - test_fraction))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def split(ds, test_fraction, seed):
    train_idx, test_idx = split_indices(ds.n, test_fraction, seed)
    return ds.subset(train_idx), ds.subset(test_idx)


def kfold_indices(n, folds, seed):
    """``folds`` disjoint index arrays covering ``range(n)``, sizes within 1."""
    if folds < 2 or folds > n:
        raise ValueError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    perm = make_rng(seed, 3).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


@dataclass(frozen=True)
class ParamGrid:
    lambda1_values: tuple
    lambda2_values: tuple
    sigma_values: tuple
    folds: int = 5

    def __post_init__(self):
        for name in ("lambda1_values", "lambda2_values", "sigma_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, vals)
        if any(v < 0 for v in self.lambda1_values + self.lambda2_values):
            raise ValueError("regularisation values must be non-negative")
        if any(not s > 0 for s in self.sigma_values):
            raise ValueError("sigma values must be positive")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")

    @classmethod
    def paper_defaults(cls, folds=5):
        lam = tuple(10.0 ** e for e in range(-10, 0))
        return cls(lam, lam, tuple(2.0 ** e for e in range(-10, 11)), folds)


@dataclass
class GridCell:
    lambda1: float
    lambda2: float
    sigma: float
    fold_metrics: list = field(default_factory=list)
    failed: str = ""

    @property
    def mean_metric(self):
        return float(np.mean(self.fold_metrics)) if self.fold_metrics and not self.failed else float("nan")


def _run_cell(args):
    from .model import TrainingDiverged, evaluate, fit

    dataset, folds, config = args
    metrics = []
    try:
        for k, val_idx in enumerate(folds):
            train_idx = np.concatenate([f for j, f in enumerate(folds) if j != k])
            model, _ = fit(dataset.subset(train_idx), config)
            metrics.append(evaluate(model, dataset.subset(val_idx)).value)
    except (TrainingDiverged, ArithmeticError) as exc:
        return metrics, str(exc)
    return metrics, ""


def grid_search(dataset, grid, base, threads=1):
    """k-fold grid search over ``(lambda1, lambda2, sigma)``.

    Returns the best config and the list of :class:`GridCell` rows in grid
    order.  Accuracy is maximised and RMSE minimised; ties go to the smaller
    lambda1, then lambda2, then sigma.  Cells whose training diverges are
    kept in the table with ``failed`` set and never selected.
    """
    folds = kfold_indices(dataset.n, grid.folds, base.seed)
    cells, jobs = [], []
    for lam1 in grid.lambda1_values:
        for lam2 in grid.lambda2_values:
            for sigma in grid.sigma_values:
                cells.append(GridCell(lam1, lam2, sigma))
                jobs.append((dataset, folds, replace(base, lambda1=lam1, lambda2=lam2, sigma=sigma)))
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(job) for job in jobs]
    for cell, (metrics, failure) in zip(cells, results):
        cell.fold_metrics, cell.failed = metrics, failure
    ok = [c for c in cells if not c.failed]
    if not ok:
        raise RuntimeError("every grid cell failed to train")
    sign = -1.0 if dataset.task == CLASSIFICATION else 1.0
    best = min(ok, key=lambda c: (sign * c.mean_metric, c.lambda1, c.lambda2, c.sigma))
    return replace(base, lambda1=best.lambda1, lambda2=best.lambda2, sigma=best.sigma), cells
