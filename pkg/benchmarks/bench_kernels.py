"""Compare the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--out timings.csv]

Times the Jacobi SVD on a few shapes, the batched multiclass hinge and one
training epoch of ASKL on synthetic data, under each backend, and checks
that both backends produce the same numbers.
"""
import argparse
import csv
import sys
import time
from contextlib import contextmanager

import numpy as np

from askl import _backend, _purepy, numerics
from askl.data import CLASSIFICATION, Dataset
from askl.losses import LossKind, batch_loss_and_grad
from askl.model import TrainConfig, Variant, fit

try:
    from askl import _kernels
except ImportError:
    _kernels = None


@contextmanager
def backend(module):
    saved = _backend.kernels
    _backend.kernels = module
    try:
        yield
    finally:
        _backend.kernels = saved


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(rng):
    for shape in ((32, 8), (200, 26), (500, 26), (2000, 7)):
        M = rng.standard_normal(shape)
        yield f"svd {shape[0]}x{shape[1]}", lambda M=M: numerics.thin_svd(M).singular_values
    F = rng.standard_normal((4096, 26))
    y = rng.integers(0, 26, 4096)
    yield "hinge 4096x26", lambda: batch_loss_and_grad(LossKind.MulticlassHinge, F, y)[1]
    X = rng.standard_normal((640, 10))
    ds = Dataset(X, rng.integers(0, 7, 640), CLASSIFICATION, 7)
    cfg = TrainConfig(variant=Variant.ASKL, D=200, epochs=1, lambda1=1e-3, lambda2=1e-4)
    yield "ASKL epoch n=640 D=200", lambda: fit(ds, cfg)[0].W


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--out", help="optional CSV of the timings")
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback can be timed", file=sys.stderr)
    rows = []
    for name, fn in cases(np.random.default_rng(0)):
        with backend(_purepy):
            t_py, ref = best_of(fn, args.repeat)
        t_cy, agree = float("nan"), ""
        if _kernels is not None:
            with backend(_kernels):
                t_cy, got = best_of(fn, args.repeat)
            agree = f"{float(np.max(np.abs(np.asarray(got) - np.asarray(ref)))):.1e}"
        rows.append((name, t_py, t_cy, t_py / t_cy, agree))
    print(f"{'case':<26}{'python ms':>12}{'cython ms':>12}{'speedup':>10}{'max diff':>11}")
    for name, t_py, t_cy, ratio, agree in rows:
        print(f"{name:<26}{1e3 * t_py:>12.2f}{1e3 * t_cy:>12.2f}{ratio:>10.1f}{agree:>11}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["case", "python_seconds", "cython_seconds", "speedup", "max_abs_diff"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
