"""Multiclass hinge and squared losses with (sub)gradients in the scores.

Labels are class indices for the hinge loss and real target vectors for
the squared loss.  The batch functions take an m x K score array.
"""
import enum

import numpy as np

from . import _backend


class LossKind(enum.Enum):
    MulticlassHinge = "hinge"
    Squared = "squared"


def _batch_args(kind, F, y):
    F = np.ascontiguousarray(F, dtype=np.float64)
    if F.ndim != 2:
        raise ValueError(f"scores must be m x K, got shape {F.shape}")
    m, K = F.shape
    if kind is LossKind.MulticlassHinge:
        if K < 2:
            raise ValueError("multiclass hinge needs K >= 2")
        y = np.ascontiguousarray(y, dtype=np.intp).reshape(-1)
        if y.shape != (m,) or (m and (y.min() < 0 or y.max() >= K)):
            raise ValueError(f"class indices must be {m} values in [0, {K})")
    elif kind is LossKind.Squared:
        y = np.asarray(y, dtype=np.float64).reshape(m, -1)
        if y.shape != (m, K):
            raise ValueError(f"targets must be {m} x {K}, got {y.shape}")
    else:
        raise ValueError(f"unknown loss {kind!r}")
    return F, y


def batch_loss_and_grad(kind, F, y):
    """Per-row losses (length m) and gradients dl/df (m x K)."""
    F, y = _batch_args(kind, F, y)
    if kind is LossKind.MulticlassHinge:
        return _backend.kernels.hinge_batch(F, y)
    R = F - y
    return np.einsum("ij,ij->i", R, R), 2.0 * R


def batch_loss(kind, F, y):
    return batch_loss_and_grad(kind, F, y)[0]


def _single(kind, f, y):
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1:
        raise ValueError(f"f must be a vector, got shape {f.shape}")
    if kind is LossKind.MulticlassHinge:
        y = np.array([int(y)])
    else:
        y = np.asarray(y, dtype=np.float64).reshape(1, -1)
    return f[None, :], y


def loss_value(kind, f, y):
    """Loss of one score vector ``f`` against label ``y``."""
    F, Y = _single(kind, f, y)
    return float(batch_loss(kind, F, Y)[0])


def loss_gradient(kind, f, y):
    F, Y = _single(kind, f, y)
    return batch_loss_and_grad(kind, F, Y)[1][0]
