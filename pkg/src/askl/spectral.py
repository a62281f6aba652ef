"""Stationary and non-stationary random Fourier feature maps.

A :class:`FrequencyPack` holds two d x D frequency matrices and two phase
vectors.  Three maps are built from it:

``StationaryCos``
    ``sqrt(2/D) * cos(Omega^T x + b)``, the classic random Fourier features.
``NonStationaryCos``
    ``(cos(Omega^T x + b) + cos(Omega'^T x + b')) / sqrt(2D)``, length D.
``NonStationarySinCos``
    ``[cos(Omega^T x) + cos(Omega'^T x); sin(Omega^T x) + sin(Omega'^T x)] / sqrt(4D)``,
    length 2D, whose inner product is exactly the Monte Carlo kernel estimate.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

from .rng import make_rng, polar_normal

TWO_PI = 2.0 * math.pi


class MapMode(enum.Enum):
    StationaryCos = "stationary_cos"
    NonStationaryCos = "nonstationary_cos"
    NonStationarySinCos = "nonstationary_sincos"

    def output_dim(self, D):
        return 2 * D if self is MapMode.NonStationarySinCos else D


@dataclass(frozen=True)
class FrequencyPack:
    omega: np.ndarray
    omega_prime: np.ndarray
    phase_b: np.ndarray
    phase_b_prime: np.ndarray

    def __post_init__(self):
        for name in ("omega", "omega_prime", "phase_b", "phase_b_prime"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.omega.ndim != 2 or self.omega.shape != self.omega_prime.shape:
            raise ValueError("omega and omega_prime must share a d x D shape")
        D = self.omega.shape[1]
        if self.phase_b.shape != (D,) or self.phase_b_prime.shape != (D,):
            raise ValueError(f"phase vectors must have length D={D}")

    @property
    def d(self):
        return self.omega.shape[0]

    @property
    def D(self):
        return self.omega.shape[1]

    def tied(self):
        """Copy with the primed frequencies and phases set to the unprimed ones."""
        return FrequencyPack(self.omega, self.omega, self.phase_b, self.phase_b)

    def replace(self, **changes):
        fields = dict(omega=self.omega, omega_prime=self.omega_prime,
                      phase_b=self.phase_b, phase_b_prime=self.phase_b_prime)
        fields.update(changes)
        return FrequencyPack(**fields)

    def is_stationary(self):
        return (np.array_equal(self.omega, self.omega_prime)
                and np.array_equal(self.phase_b, self.phase_b_prime))


def init_frequencies(d, D, gamma, seed):
    """Gaussian frequencies with standard deviation ``gamma``, uniform phases.

    Draw order is fixed (omega, omega_prime, b, b_prime) from one Philox
    stream, so a seed always yields the same pack bit for bit.
    """
    if int(d) != d or int(D) != D or d < 1 or D < 1:
        raise ValueError(f"d and D must be positive integers, got d={d}, D={D}")
    if not gamma > 0 or not math.isfinite(gamma):
        raise ValueError(f"gamma must be positive and finite, got {gamma}")
    rng = make_rng(seed, 0)
    omega = gamma * polar_normal(rng, (d, D))
    omega_prime = gamma * polar_normal(rng, (d, D))
    b = np.mod(TWO_PI * rng.random(D), TWO_PI)
    b_prime = np.mod(TWO_PI * rng.random(D), TWO_PI)
    return FrequencyPack(omega, omega_prime, b, b_prime)


def _check_inputs(X, pack):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != pack.d:
        raise ValueError(f"inputs must have {pack.d} columns, got shape {X.shape}")
    return X


def features(X, pack, mode):
    """Row-wise feature map: an n x d input gives an n x dim array."""
    X = _check_inputs(X, pack)
    D = pack.D
    if mode is MapMode.StationaryCos:
        return math.sqrt(2.0 / D) * np.cos(X @ pack.omega + pack.phase_b)
    if mode is MapMode.NonStationaryCos:
        return (np.cos(X @ pack.omega + pack.phase_b)
                + np.cos(X @ pack.omega_prime + pack.phase_b_prime)) / math.sqrt(2.0 * D)
    if mode is MapMode.NonStationarySinCos:
        Z, Zp = X @ pack.omega, X @ pack.omega_prime
        return np.hstack([np.cos(Z) + np.cos(Zp), np.sin(Z) + np.sin(Zp)]) / math.sqrt(4.0 * D)
    raise ValueError(f"unknown map mode {mode!r}")


def feature_map(x, pack, mode):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"x must be a vector, got shape {x.shape}")
    return features(x[None, :], pack, mode)[0]


def feature_matrix(X, pack, mode):
    """Features as a dim x n matrix, one column per input row."""
    return features(X, pack, mode).T


def kernel_estimate(x, x2, pack):
    """Monte Carlo estimate of the symmetrised non-stationary kernel."""
    x = np.asarray(x, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x.shape != (pack.d,) or x2.shape != (pack.d,):
        raise ValueError(f"inputs must have length {pack.d}")
    a, ap = x @ pack.omega, x @ pack.omega_prime
    c, cp = x2 @ pack.omega, x2 @ pack.omega_prime
    total = np.cos(a - cp) + np.cos(ap - c) + np.cos(a - c) + np.cos(ap - cp)
    return float(total.sum() / (4.0 * pack.D))


def self_kernel_diagonal(X, pack):
    """``<psi(x_i), psi(x_i)>`` for each row, via the frequency-difference identity."""
    X = _check_inputs(X, pack)
    return (1.0 + np.cos(X @ (pack.omega - pack.omega_prime))).sum(axis=1) / (2.0 * pack.D)
