"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (or ``python tests/test_acceptance.py``).
Criteria 7 to 9 train on the bundled ``segment`` and ``letter`` datasets and
take several minutes on one core.
"""
import csv
import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from askl import cli
from askl.bounds import rademacher_estimate
from askl.data import REGISTRY_ENV, REGRESSION, Dataset, fit_standardization
from askl.losses import LossKind
from askl.model import TrainConfig, Variant, fit, initial_pack
from askl.optim import svt_prox
from askl.spectral import FrequencyPack, MapMode, features, init_frequencies, kernel_estimate

from gradcheck import check_instance, random_instance

REPO = Path(__file__).resolve().parents[1]
REGISTRY = Path(os.environ.get(REGISTRY_ENV, REPO / "data" / "registry.json"))


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


# 1. gradients against central differences

def test_criterion_1_gradient_fidelity(report):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = {}
    for kind in LossKind:
        errs = []
        for i in range(50):
            lam2 = (0.0, 0.01)[i % 2]
            X, y, W, pack = random_instance(rng, kind, lam2)
            errs.extend(check_instance(X, y, W, pack, kind, lam2))
        worst[kind.value] = float(f"{max(errs):.2e}")
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-5 and elapsed < 10
    report(1, ok, f"max rel err {worst} (tol 1e-5), {elapsed:.2f}s (< 10s)")


# 2. singular value thresholding

def prox_objective(Z, Q, tau):
    return 0.5 * np.sum((Z - Q) ** 2) + tau * np.linalg.svd(Z, compute_uv=False).sum()


def test_criterion_2_svt(report):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    diag_ok = np.array_equal(svt_prox(np.diag([3.0, 1.0]), 1.0), np.diag([2.0, 0.0]))
    beaten, norm_err = 0, 0.0
    for _ in range(100):
        m, k = rng.integers(1, 9), rng.integers(1, 6)
        Q = rng.standard_normal((m, k)) * rng.uniform(0.2, 3)
        tau = rng.uniform(0.0, 2.0)
        Z = svt_prox(Q, tau)
        s = np.linalg.svd(Q, compute_uv=False)
        norm_err = max(norm_err, abs(np.linalg.svd(Z, compute_uv=False).sum() - np.maximum(s - tau, 0).sum()))
        best = prox_objective(Z, Q, tau)
        P = rng.standard_normal((1000, m, k))
        P *= 1e-3 / np.linalg.norm(P, axis=(1, 2), keepdims=True)
        beaten += sum(prox_objective(Z + p, Q, tau) < best for p in P)
    elapsed = time.perf_counter() - t0
    ok = diag_ok and beaten == 0 and norm_err <= 1e-10 and elapsed < 5
    report(2, ok, f"diag exact={diag_ok}, perturbations beating SVT {beaten}/100000, "
                  f"nuclear-norm err {norm_err:.1e} (tol 1e-10), {elapsed:.2f}s (< 5s)")


# 3. Monte Carlo kernel approximation, stationary sub-case

def test_criterion_3_kernel_approximation(report):
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    d, gamma = 3, 0.7
    pairs = []
    for _ in range(100):
        x = rng.standard_normal(d)
        u = rng.standard_normal(d)
        pairs.append((x, x + u / np.linalg.norm(u) * rng.uniform(0, 3 / gamma)))
    est = np.zeros(100)
    for seed in range(20):
        pack = init_frequencies(d, 4096, gamma, seed).tied()
        est += [kernel_estimate(x, x2, pack) for x, x2 in pairs]
    est /= 20
    exact = np.array([math.exp(-gamma ** 2 * np.sum((x - x2) ** 2) / 2) for x, x2 in pairs])
    dev = np.max(np.abs(est - exact))
    elapsed = time.perf_counter() - t0
    report(3, dev <= 0.05 and elapsed < 30, f"max |estimate - Gaussian| = {dev:.4f} (tol 0.05), {elapsed:.2f}s")


# 4. random-phase map vs sin/cos map

def test_criterion_4_phase_expectation(report):
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    draws, worst = 10 ** 5, 0.0
    for _ in range(10):
        d, D = rng.integers(1, 5), rng.integers(1, 5)
        pack = init_frequencies(d, D, rng.uniform(0.5, 2), int(rng.integers(1 << 30)))
        x, x2 = rng.standard_normal((2, d))
        psi = features(np.stack([x, x2]), pack, MapMode.NonStationarySinCos)
        target = psi[0] @ psi[1]
        # D * draws columns with shared phases b' = b: the scaled inner product
        # is exactly the mean of the per-draw inner products
        b = rng.uniform(0, 2 * np.pi, (draws, D)).ravel()
        big = FrequencyPack(np.tile(pack.omega, draws), np.tile(pack.omega_prime, draws), b, b)
        phi = features(np.stack([x, x2]), big, MapMode.NonStationaryCos)
        worst = max(worst, abs(phi[0] @ phi[1] - target))
    elapsed = time.perf_counter() - t0
    report(4, worst <= 0.02 and elapsed < 30, f"max |mean<phi,phi> - <psi,psi>| = {worst:.4f} (tol 0.02), "
                                              f"{elapsed:.2f}s")


# 5. Rademacher envelope

def test_criterion_5_rademacher_envelope(report):
    rng = np.random.default_rng(5)
    stat_err, over, not_strict = 0.0, 0, 0
    for i in range(100):
        d, D, n, K = rng.integers(1, 6), rng.integers(1, 10), rng.integers(1, 30), rng.integers(1, 5)
        X = rng.standard_normal((n, d))
        W = rng.standard_normal((D, K))
        pack = init_frequencies(d, D, rng.uniform(0.1, 3), i)
        B, rad = rademacher_estimate(W, pack.tied(), X)
        env = B * math.sqrt(K / n)
        stat_err = max(stat_err, abs(rad - env))
        B, rad = rademacher_estimate(W, pack, X)
        over += rad > env
        cos = np.cos(X @ (pack.omega - pack.omega_prime))
        if np.any(cos < 1 - 1e-9) and not rad < env:
            not_strict += 1
    ok = stat_err <= 1e-12 and over == 0 and not_strict == 0
    report(5, ok, f"stationary |est - B*sqrt(K/n)| max {stat_err:.1e} (tol 1e-12); non-stationary "
                  f"above envelope {over}/100, not strictly below {not_strict}/100")


# 6. monotone descent on the convex subproblem

def test_criterion_6_convex_monotonicity(report):
    rng = np.random.default_rng(6)
    X = rng.uniform(-2, 2, (80, 3))
    y = np.column_stack([np.sin(X[:, 0]) + X[:, 1] * X[:, 2], np.cos(X.sum(axis=1))])
    ds = Dataset(X, y + 0.05 * rng.standard_normal(y.shape), REGRESSION, 2)
    details, total = [], 0
    for variant, lam1 in ((Variant.SKL, 1e-2), (Variant.SK, 1e-2)):
        cfg = TrainConfig(variant=variant, D=40, sigma=1.5, lambda1=lam1, optimizer="sgd",
                          train_frequencies=False, batch_size=None, epochs=500, checkpoint_every=1)
        std = fit_standardization(ds)
        Phi = features(std.apply_X(ds.X), initial_pack(3, cfg), variant.spec.mode)
        L = 2 * np.linalg.eigvalsh(Phi.T @ Phi / ds.n).max()
        if not variant.spec.trace_norm:
            L += 2 * lam1
        _, log = fit(ds, TrainConfig(**{**cfg.__dict__, "eta": 1.0 / L}))
        obj = log.column("objective")
        # relative 1e-12 slack for rounding in the objective evaluation
        bad = int(np.sum(obj[1:] > obj[:-1] * (1 + 1e-12)))
        total += bad
        details.append(f"{variant.name}: {len(obj)} iters, {bad} increases, {obj[0]:.4g} -> {obj[-1]:.4g}")
    report(6, total == 0, "; ".join(details))


# 7 and 8. desk-scale benchmark and curve protocol

BENCH_MODEL = {"D": 500, "eta": 0.01, "batch_size": 32, "checkpoint_every": 200}
BENCHES = {
    "segment": {"datasets": ["segment"], "variants": ["SK", "ASKL"], "seeds": 5, "epochs": 30,
                "model": dict(BENCH_MODEL, lambda1=1e-4, lambda2=1e-4),
                "tuning": {"sigma_values": [0.5, 1, 2, 4], "folds": 3}},
    "letter": {"datasets": ["letter"], "variants": ["SK", "SKL"], "seeds": 5, "epochs": 30,
               "model": dict(BENCH_MODEL, lambda1=1e-5, lambda2=1e-5),
               "tuning": {"sigma_values": [1, 2, 4], "folds": 3}},
}


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def bench_runs(tmp_path_factory):
    if not REGISTRY.exists():
        pytest.fail(f"dataset registry {REGISTRY} not found; run scripts/prepare_keel_data.py")
    root = tmp_path_factory.mktemp("bench")
    old = os.environ.get(REGISTRY_ENV)
    os.environ[REGISTRY_ENV] = str(REGISTRY)
    out = {}
    try:
        for name, body in BENCHES.items():
            cfg = root / f"{name}.json"
            cfg.write_text(json.dumps(dict(schema_version=1, **body)))
            t0 = time.perf_counter()
            code = cli.main(["bench", "--config", str(cfg), "--out", str(root / name)])
            out[name] = (code, root / name, time.perf_counter() - t0)
    finally:
        if old is None:
            os.environ.pop(REGISTRY_ENV, None)
        else:
            os.environ[REGISTRY_ENV] = old
    return out


def medians(run_dir):
    runs = read_rows(run_dir / "bench_runs.csv")
    by = {}
    for r in runs:
        by.setdefault(r["variant"], []).append(float(r["value"]))
    sigma = {r["variant"]: float(r["sigma"]) for r in runs}
    return {v: float(np.median(vals)) for v, vals in by.items()}, sigma


@pytest.mark.slow
def test_criterion_7_table_trends(report, bench_runs):
    (c1, seg, t1), (c2, let, t2) = bench_runs["segment"], bench_runs["letter"]
    assert c1 == 0 and c2 == 0
    ms, ss = medians(seg)
    ml, sl = medians(let)
    seg_ok = ms["ASKL"] >= ms["SK"] + 0.02 and ms["ASKL"] >= 0.90
    let_ok = ml["SKL"] >= ml["SK"] + 0.10
    report(7, seg_ok and let_ok,
           f"segment median ASKL {100 * ms['ASKL']:.2f} vs SK {100 * ms['SK']:.2f} "
           f"(need +2, ASKL >= 90; sigma ASKL={ss['ASKL']:g} SK={ss['SK']:g}) -> {'ok' if seg_ok else 'not met'}; "
           f"letter median SKL {100 * ml['SKL']:.2f} vs SK {100 * ml['SK']:.2f} "
           f"(need +10; sigma SKL={sl['SKL']:g} SK={sl['SK']:g}) -> {'ok' if let_ok else 'not met'}; "
           f"{(t1 + t2) / 60:.1f} min")


@pytest.mark.slow
def test_criterion_8_curve_protocol(report, bench_runs):
    code, seg, _ = bench_runs["segment"]
    assert code == 0
    runs = read_rows(seg / "bench_runs.csv")
    n_train = 2310 - math.ceil(2310 * 0.2)
    total = 30 * math.ceil(n_train / 32)
    expected = list(range(200, total + 1, 200))
    lowered, spacing_ok = 0, True
    for r in (r for r in runs if r["variant"] == "ASKL"):
        log = cli.read_curves(seg / "curves" / f"segment_ASKL_seed{r['seed']}.csv")
        spacing_ok &= log.column("iteration").tolist() == expected
        obj = log.column("objective")
        lowered += obj[-1] < obj[0]
    ok = spacing_ok and lowered == 5
    report(8, ok, f"checkpoints at {expected[0]}..{expected[-1]} step 200: {spacing_ok}; "
                  f"final < first objective for {lowered}/5 ASKL seeds")


# 9. determinism

@pytest.mark.slow
def test_criterion_9_bench_determinism(report, tmp_path, monkeypatch):
    if not REGISTRY.exists():
        pytest.fail(f"dataset registry {REGISTRY} not found")
    monkeypatch.setenv(REGISTRY_ENV, str(REGISTRY))
    body = {"schema_version": 1, "datasets": ["segment"], "variants": ["SK", "ASKL"], "seeds": 2, "epochs": 4,
            "model": {"D": 60, "lambda1": 1e-4, "lambda2": 1e-4}, "tuning": {"sigma_values": [1, 2], "folds": 2}}
    (tmp_path / "bench.json").write_text(json.dumps(body))
    assert cli.main(["bench", "--config", str(tmp_path / "bench.json"), "--out", str(tmp_path / "a")]) == 0
    # second run replays the config snapshot recorded by the first
    replay = tmp_path / "a" / "config.json"
    assert cli.main(["bench", "--config", str(replay), "--out", str(tmp_path / "b")]) == 0
    same = {name: (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
            for name in ("bench_table.csv", "curves.csv")}
    report(9, all(same.values()), f"byte-identical: {same}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
