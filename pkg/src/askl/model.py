"""The linear-in-features estimator ``f(x) = W^T phi(x)`` and its training loop."""
import enum
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import numerics
from .data import CLASSIFICATION, REGRESSION, StandardizationSpec, fit_standardization
from .losses import LossKind, batch_loss
from .optim import AdamState, adam_step, batch_gradients, sgd_step, svt_prox
from .rng import make_rng
from .spectral import FrequencyPack, MapMode, features, init_frequencies

FORMAT_VERSION = 1
CONFIG_SCHEMA_VERSION = 1


class TrainingDiverged(ArithmeticError):
    def __init__(self, iteration, what):
        super().__init__(f"training diverged at iteration {iteration}: non-finite {what}")
        self.iteration = iteration


@dataclass(frozen=True)
class VariantSpec:
    stationary: bool
    train_frequencies: bool
    trace_norm: bool           # ||W||_* (prox) instead of ||W||_F^2
    feature_regularizer: bool  # lambda2 * mean ||phi(x)||^2

    @property
    def mode(self):
        return MapMode.StationaryCos if self.stationary else MapMode.NonStationaryCos


class Variant(enum.Enum):
    SK = VariantSpec(stationary=True, train_frequencies=False, trace_norm=False, feature_regularizer=False)
    NSK = VariantSpec(stationary=False, train_frequencies=False, trace_norm=False, feature_regularizer=False)
    SKL = VariantSpec(stationary=True, train_frequencies=True, trace_norm=False, feature_regularizer=False)
    NSKL = VariantSpec(stationary=False, train_frequencies=True, trace_norm=False, feature_regularizer=False)
    ASKL = VariantSpec(stationary=False, train_frequencies=True, trace_norm=True, feature_regularizer=True)

    @property
    def spec(self):
        return self.value


def _variant_spec(variant):
    return variant.spec if isinstance(variant, Variant) else variant


@dataclass(frozen=True)
class TrainConfig:
    """Hyper-parameters of one training run.

    ``train_frequencies=None`` defers to the variant; ``False`` freezes the
    frequencies of a learned variant.  ``optimizer`` is ``"adam"`` or
    ``"sgd"``; ``batch_size=None`` means full batch.
    """

    variant: Variant = Variant.ASKL
    D: int = 2000
    lambda1: float = 0.0
    lambda2: float = 0.0
    sigma: float = 1.0
    eta: float = 1e-2
    batch_size: int | None = 32
    epochs: int = 30
    seed: int = 0
    checkpoint_every: int = 200
    optimizer: str = "adam"
    train_frequencies: bool | None = None
    standardize_features: bool = True
    debug_checks: bool = False

    def __post_init__(self):
        if isinstance(self.variant, str):
            object.__setattr__(self, "variant", Variant[self.variant])
        if self.D < 1 or self.epochs < 0 or self.checkpoint_every < 1:
            raise ValueError("D and checkpoint_every must be >= 1 and epochs >= 0")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda1 and lambda2 must be non-negative")
        if not self.sigma > 0 or not self.eta > 0:
            raise ValueError("sigma and eta must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")

    @property
    def spec(self):
        return _variant_spec(self.variant)

    @property
    def learns_frequencies(self):
        if self.train_frequencies is None:
            return self.spec.train_frequencies
        return self.train_frequencies

    def to_dict(self):
        out = asdict(self)
        out["variant"] = self.variant.name if isinstance(self.variant, Variant) else asdict(self.variant)
        out["schema_version"] = CONFIG_SCHEMA_VERSION
        return out

    @classmethod
    def from_dict(cls, raw):
        raw = dict(raw)
        version = raw.pop("schema_version", CONFIG_SCHEMA_VERSION)
        if version != CONFIG_SCHEMA_VERSION:
            raise ValueError(f"unsupported config schema_version {version}")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if isinstance(raw.get("variant"), dict):
            raw["variant"] = VariantSpec(**raw["variant"])
        return cls(**raw)


@dataclass(frozen=True)
class TrainedModel:
    W: np.ndarray
    pack: FrequencyPack
    variant: Variant
    task: str
    standardization: StandardizationSpec
    label_names: tuple = ()

    @property
    def mode(self):
        return _variant_spec(self.variant).mode

    @property
    def n_outputs(self):
        return self.W.shape[1]


@dataclass
class TraceRecord:
    iteration: int
    objective: float
    test_metric: float
    nuclear_norm_w: float
    feature_frobenius_sq: float


@dataclass
class TraceLog:
    records: list = field(default_factory=list)

    def append(self, record):
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError("trace iterations must strictly increase")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])


@dataclass(frozen=True)
class Metrics:
    name: str    # "accuracy" or "rmse"
    value: float


def loss_kind(task):
    return LossKind.MulticlassHinge if task == CLASSIFICATION else LossKind.Squared


def predict_scores(model, X):
    """Scores for raw (unstandardised) rows of ``X``; n x K."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.pack.d:
        raise ValueError(f"expected inputs with {model.pack.d} columns, got shape {X.shape}")
    Phi = features(model.standardization.apply_X(X), model.pack, model.mode)
    return Phi @ model.W


def predict(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"x must be a vector, got shape {x.shape}")
    return predict_scores(model, x[None, :])[0]


def predict_labels(model, X):
    """Class indices (argmax, lowest index on ties)."""
    return np.argmax(predict_scores(model, X), axis=1)


def _metric(task, scores, y):
    if task == CLASSIFICATION:
        return Metrics("accuracy", float(np.mean(np.argmax(scores, axis=1) == y)))
    return Metrics("rmse", float(math.sqrt(np.mean((scores - y) ** 2))))


def evaluate(model, dataset):
    """Accuracy for classification, RMSE in standardised target units for regression."""
    if dataset.task != model.task:
        raise ValueError(f"model is for {model.task}, dataset is {dataset.task}")
    if dataset.n_outputs != model.n_outputs:
        raise ValueError(f"model has {model.n_outputs} outputs, dataset {dataset.n_outputs}")
    y = model.standardization.apply_y(dataset.y) if dataset.task == REGRESSION else dataset.y
    return _metric(dataset.task, predict_scores(model, dataset.X), y)


def objective_parts(W, pack, data, config):
    """``(mean loss, weight regulariser, feature regulariser, ||phi(X)||_F^2)``.

    ``data`` must already be standardised.
    """
    spec = config.spec
    Phi = features(data.X, pack, spec.mode)
    if Phi.shape[1] != W.shape[0]:
        raise ValueError(f"W has {W.shape[0]} rows but the feature map has {Phi.shape[1]}")
    mean_loss = float(batch_loss(loss_kind(data.task), Phi @ W, data.y).mean())
    if spec.trace_norm:
        r_w = config.lambda1 * numerics.nuclear_norm(W)
    else:
        r_w = config.lambda1 * numerics.frobenius_norm_sq(W)
    feat_sq = numerics.frobenius_norm_sq(Phi)
    r_phi = config.lambda2 * feat_sq / data.n if spec.feature_regularizer else 0.0
    return mean_loss, r_w, r_phi, feat_sq


def objective(W, pack, data, config):
    """Mean loss plus weight and feature regularisers on standardised ``data``."""
    mean_loss, r_w, r_phi, _ = objective_parts(W, pack, data, config)
    return mean_loss + r_w + r_phi


def initial_pack(d, config):
    pack = init_frequencies(d, config.D, 1.0 / config.sigma, config.seed)
    return pack.tied() if config.spec.stationary else pack


def fit(dataset, config, eval_set=None):
    """Train W (and, for learned variants, the frequencies) by mini-batch descent.

    Each iteration takes one optimiser step on W, then for trace-norm
    variants applies singular value thresholding at ``lambda1 * eta``;
    squared-Frobenius variants add ``2 * lambda1 * W`` to the gradient
    instead.  Frequencies get their own optimiser steps when learned.

    Returns ``(TrainedModel, TraceLog)``; the log has one record per
    ``checkpoint_every`` iterations, measured on the full training set
    (objective) and on ``eval_set`` (test metric, NaN when absent).

    Raises
    ------
    TrainingDiverged
        If any parameter becomes non-finite.
    """
    spec = config.spec
    kind = loss_kind(dataset.task)
    std = fit_standardization(dataset, config.standardize_features)
    train = std.apply(dataset)
    held_out = std.apply(eval_set) if eval_set is not None else None
    n, K = train.n, dataset.n_outputs
    batch = n if config.batch_size is None else config.batch_size
    if batch > n:
        raise ValueError(f"batch_size {batch} exceeds the {n} training examples")

    pack = initial_pack(train.d, config)
    omega, omega_prime = pack.omega.copy(), pack.omega_prime.copy()
    W = np.zeros((config.D, K))
    use_adam = config.optimizer == "adam"
    learn = config.learns_frequencies
    lam2 = config.lambda2 if spec.feature_regularizer else 0.0
    states = {key: AdamState.zeros_like(p) for key, p in (("W", W), ("omega", omega), ("omega_prime", omega_prime))}

    def step(key, param, grad):
        if use_adam:
            param, states[key] = adam_step(states[key], param, grad, config.eta)
            return param
        return sgd_step(param, grad, config.eta)

    log = TraceLog()
    iteration = 0
    # divergence is detected explicitly below
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(config.epochs):
            order = make_rng(config.seed, 1, epoch).permutation(n)
            for start in range(0, n, batch):
                idx = order[start:start + batch]
                g = batch_gradients(train.X[idx], train.y[idx], W, pack, spec.mode, kind, lam2, learn)
                gW = g.W if spec.trace_norm else g.W + (2.0 * config.lambda1) * W
                Q = step("W", W, gW)
                if not np.isfinite(Q).all():
                    raise TrainingDiverged(iteration + 1, "weights")
                if spec.trace_norm:
                    W = svt_prox(Q, config.lambda1 * config.eta)
                    if config.debug_checks:
                        _check_shrinkage(W, Q, iteration + 1)
                else:
                    W = Q
                if learn:
                    omega = step("omega", omega, g.omega)
                    if spec.stationary:
                        omega_prime = omega
                    else:
                        omega_prime = step("omega_prime", omega_prime, g.omega_prime)
                    if not (np.isfinite(omega).all() and np.isfinite(omega_prime).all()):
                        raise TrainingDiverged(iteration + 1, "frequencies")
                    pack = pack.replace(omega=omega, omega_prime=omega_prime)
                iteration += 1
                if iteration % config.checkpoint_every == 0:
                    log.append(_checkpoint(iteration, W, pack, train, held_out, config))


    model = TrainedModel(W, pack, config.variant, dataset.task, std, dataset.label_names)
    return model, log


def _check_shrinkage(W, Q, iteration):
    after, before = numerics.nuclear_norm(W), numerics.nuclear_norm(Q)
    if after > before * (1.0 + 1e-12) + 1e-12:
        raise RuntimeError(f"iteration {iteration}: SVT grew the nuclear norm ({before} -> {after})")


def _checkpoint(iteration, W, pack, train, held_out, config):
    mean_loss, r_w, r_phi, feat_sq = objective_parts(W, pack, train, config)
    metric = float("nan")
    if held_out is not None:
        scores = features(held_out.X, pack, config.spec.mode) @ W
        metric = _metric(held_out.task, scores, held_out.y).value
    return TraceRecord(iteration, mean_loss + r_w + r_phi, metric, numerics.nuclear_norm(W), feat_sq)


def model_to_dict(model):
    spec = _variant_spec(model.variant)
    return {
        "format": "askl-model",
        "format_version": FORMAT_VERSION,
        "variant": model.variant.name if isinstance(model.variant, Variant) else asdict(spec),
        "map_mode": spec.mode.value,
        "task": model.task,
        "shapes": {"d": model.pack.d, "D": model.pack.D, "K": model.n_outputs},
        "W": model.W.tolist(),
        "omega": model.pack.omega.tolist(),
        "omega_prime": model.pack.omega_prime.tolist(),
        "phase_b": model.pack.phase_b.tolist(),
        "phase_b_prime": model.pack.phase_b_prime.tolist(),
        "standardization": model.standardization.to_dict(),
        "label_names": list(model.label_names),
    }


def model_from_dict(raw):
    if raw.get("format") != "askl-model" or raw.get("format_version") != FORMAT_VERSION:
        raise ValueError("not an askl model artifact of a supported version")
    variant = raw["variant"]
    variant = Variant[variant] if isinstance(variant, str) else VariantSpec(**variant)
    pack = FrequencyPack(np.array(raw["omega"]), np.array(raw["omega_prime"]),
                         np.array(raw["phase_b"]), np.array(raw["phase_b_prime"]))
    W = np.array(raw["W"], dtype=np.float64).reshape(raw["shapes"]["D"], raw["shapes"]["K"])
    return TrainedModel(W, pack, variant, raw["task"],
                        StandardizationSpec.from_dict(raw["standardization"]),
                        tuple(raw["label_names"]))


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
