"""Objective gradients, the trace-norm proximal step, and update rules.

Batch inputs are row-major: ``X`` is m x d and feature arrays are m x D.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

from .losses import batch_loss_and_grad
from .numerics import as_matrix, thin_svd
from .spectral import MapMode


class Which(enum.Enum):
    Primary = "omega"
    Prime = "omega_prime"


@dataclass(frozen=True)
class BatchGradients:
    loss: float          # mean loss over the batch
    feature_sq: float    # mean squared feature norm over the batch
    W: np.ndarray
    omega: np.ndarray
    omega_prime: np.ndarray


def _check_shapes(a, b, what):
    if a.shape != b.shape:
        raise ValueError(f"{what}: shape {a.shape} does not match {b.shape}")


def batch_gradients(X, y, W, pack, mode, kind, lambda2=0.0, with_frequencies=True):
    """Mean loss plus gradients in W, Omega and Omega' for one batch.

    The frequency gradients include ``lambda2`` times the gradient of the
    batch-mean squared feature norm.  In ``StationaryCos`` mode the two
    frequency matrices are the same parameter and ``omega`` carries the
    whole gradient (``omega_prime`` is returned as zeros).
    """
    X = as_matrix(X, "batch inputs")
    m = X.shape[0]
    D = pack.D
    if X.shape[1] != pack.d or W.shape[0] != D:
        raise ValueError(f"shape mismatch: X {X.shape}, W {W.shape}, pack d={pack.d} D={D}")
    Z = X @ pack.omega + pack.phase_b
    if mode is MapMode.StationaryCos:
        scale = math.sqrt(2.0 / D)
        Phi = scale * np.cos(Z)
    elif mode is MapMode.NonStationaryCos:
        scale = 1.0 / math.sqrt(2.0 * D)
        Zp = X @ pack.omega_prime + pack.phase_b_prime
        Phi = scale * (np.cos(Z) + np.cos(Zp))
    else:
        raise ValueError(f"training is not defined for map mode {mode}")
    losses, G = batch_loss_and_grad(kind, Phi @ W, y)
    gW = Phi.T @ G / m
    zeros = np.zeros_like(pack.omega)
    g_omega, g_omega_prime = zeros, zeros
    if with_frequencies:
        # upstream gradient w.r.t. each feature
        upstream = G @ W.T
        if lambda2:
            upstream = upstream + (2.0 * lambda2) * Phi
        g_omega = X.T @ (-scale * np.sin(Z) * upstream) / m
        if mode is MapMode.NonStationaryCos:
            g_omega_prime = X.T @ (-scale * np.sin(Zp) * upstream) / m
    return BatchGradients(
        loss=float(losses.mean()),
        feature_sq=float(np.einsum("ij,ij->", Phi, Phi) / m),
        W=gW,
        omega=g_omega,
        omega_prime=g_omega_prime,
    )


def grad_w(features, W, y, kind):
    """Gradient of the mean batch loss in W, given m x D batch features."""
    Phi = as_matrix(features, "features")
    W = as_matrix(W, "W")
    if Phi.shape[1] != W.shape[0]:
        raise ValueError(f"features have {Phi.shape[1]} columns but W has {W.shape[0]} rows")
    _, G = batch_loss_and_grad(kind, Phi @ W, y)
    return Phi.T @ G / Phi.shape[0]


def grad_omega(X, y, W, pack, mode, kind, lambda2=0.0, which=Which.Primary):
    """Gradient of mean loss plus ``lambda2`` times mean squared feature norm."""
    if mode is MapMode.StationaryCos and which is Which.Prime:
        raise ValueError("stationary maps have a single frequency matrix; use Which.Primary")
    g = batch_gradients(X, y, as_matrix(W, "W"), pack, mode, kind, lambda2)
    return g.omega if which is Which.Primary else g.omega_prime


def svt_prox(Q, tau):
    """Singular value soft-thresholding, the prox of ``tau * ||.||_*``."""
    if not tau >= 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    svd = thin_svd(Q)
    shrunk = np.maximum(svd.singular_values - tau, 0.0)
    return (svd.U * shrunk) @ svd.V.T


def sgd_step(param, grad, eta):
    _check_shapes(param, grad, "sgd_step")
    if not eta > 0:
        raise ValueError(f"learning rate must be positive, got {eta}")
    return param - eta * grad


@dataclass(frozen=True)
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def zeros_like(cls, param, **hyper):
        return cls(np.zeros_like(param, dtype=np.float64), np.zeros_like(param, dtype=np.float64), 0, **hyper)


def adam_step(state, param, grad, eta):
    """One bias-corrected Adam update; returns ``(new_param, new_state)``."""
    _check_shapes(param, grad, "adam_step")
    _check_shapes(state.first_moment, param, "adam_step state")
    if not eta > 0:
        raise ValueError(f"learning rate must be positive, got {eta}")
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * (grad * grad)
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    new_param = param - eta * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return new_param, AdamState(m, v, t, state.beta1, state.beta2, state.epsilon)
