"""Data-dependent Rademacher complexity estimate and excess-risk bound value."""
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import numerics
from .data import CLASSIFICATION
from .spectral import self_kernel_diagonal

HINGE_LIPSCHITZ = 2.0
CONFIDENCE_CONSTANT = 1.0


@dataclass(frozen=True)
class BoundReport:
    B: float
    rademacher: float
    excess_risk: float
    L: float
    delta: float
    n: int
    K: int
    envelope: float               # B * sqrt(K / n)
    lipschitz_source: str = "supplied"
    confidence_term_note: str = "indicative, constant fixed at 1"

    def to_dict(self):
        return asdict(self)


def rademacher_estimate(W, pack, X, K=None):
    """``(B, estimate)`` with ``B = ||W||_*`` and estimate ``B/n * sqrt(K * trace)``.

    The trace is that of the sin/cos feature kernel on the rows of ``X``,
    which is at most n (and exactly n for a stationary pack).
    """
    W = numerics.as_matrix(W, "W")
    X = numerics.as_matrix(X, "X")
    if W.shape[0] != pack.D:
        raise ValueError(f"W has {W.shape[0]} rows, pack has D={pack.D}")
    K = W.shape[1] if K is None else int(K)
    n = X.shape[0]
    if n < 1:
        raise ValueError("need at least one sample")
    B = numerics.nuclear_norm(W)
    trace = float(self_kernel_diagonal(X, pack).sum())
    return B, B / n * math.sqrt(K * trace)


def excess_risk_value(rademacher, L, n, delta):
    """``4 sqrt(2) L R + sqrt(log(1/delta) / n)`` with the O(.) constant set to 1."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not L > 0 or n < 1 or rademacher < 0:
        raise ValueError("need L > 0, n >= 1 and a non-negative complexity")
    return 4.0 * math.sqrt(2.0) * L * rademacher + CONFIDENCE_CONSTANT * math.sqrt(math.log(1.0 / delta) / n)


def bound_report(model, dataset, L=None, delta=0.05):
    """Bound for ``model`` on the (raw) samples of ``dataset``.

    Without ``L`` the hinge loss uses 2; the squared loss uses twice the
    largest residual norm on ``dataset``, a data-dependent estimate.
    """
    X = model.standardization.apply_X(dataset.X)
    K = model.n_outputs
    source = "supplied"
    if L is None:
        if model.task == CLASSIFICATION:
            L, source = HINGE_LIPSCHITZ, "hinge default"
        else:
            from .model import predict_scores

            resid = predict_scores(model, dataset.X) - model.standardization.apply_y(dataset.y)
            L = 2.0 * float(np.sqrt((resid ** 2).sum(axis=1)).max())
            L, source = max(L, np.finfo(float).tiny), "estimated: 2 * max residual norm"
    B, rad = rademacher_estimate(model.W, model.pack, X, K)
    n = dataset.n
    return BoundReport(B, rad, excess_risk_value(rad, L, n, delta), float(L), delta, n, K,
                       B * math.sqrt(K / n), source)
