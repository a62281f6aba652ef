"""Dense linear algebra used by the proximal step: norms and a thin SVD."""
from dataclasses import dataclass

import numpy as np

from . import _backend

MAX_SWEEPS = 100
ORTHO_TOL = 1e-12


class SvdConvergenceError(ArithmeticError):
    """Raised when Jacobi sweeps hit the cap without orthogonalising."""

    def __init__(self, sweeps, residual):
        super().__init__(
            f"Jacobi SVD did not converge after {sweeps} sweeps "
            f"(largest relative off-diagonal {residual:.3e})"
        )
        self.sweeps = sweeps
        self.residual = residual


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``M = U @ diag(singular_values) @ V.T``.

    ``U`` is m x r, ``V`` is n x r with r = min(m, n); singular values are
    sorted in non-increasing order.
    """

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    def reconstruct(self):
        return (self.U * self.singular_values) @ self.V.T


def as_matrix(M, name="matrix"):
    """Return ``M`` as a finite 2-d float64 array or raise ``ValueError``."""
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def _complete_basis(U, filled):
    """Overwrite the columns of ``U`` not in ``filled`` with an orthonormal completion."""
    m, r = U.shape
    basis = [U[:, j] for j in range(r) if filled[j]]
    missing = [j for j in range(r) if not filled[j]]
    for e in range(m):
        if not missing:
            break
        v = np.zeros(m)
        v[e] = 1.0
        for _ in range(2):
            for b in basis:
                v -= (b @ v) * b
        norm = np.linalg.norm(v)
        if norm > 0.5:
            v /= norm
            j = missing.pop(0)
            U[:, j] = v
            basis.append(v)
    return U


def thin_svd(M):
    """Thin singular value decomposition by one-sided Jacobi rotations.

    Rotations act on the columns of ``M`` (or of ``M.T`` when ``M`` is wide)
    so the Gram side is the smaller dimension.  Columns that shrink to a norm
    of at most ``ORTHO_TOL * ||M||_F`` are treated as exact zeros: their
    singular value is reported as 0 and their left vector is replaced by an
    orthonormal completion.

    Raises
    ------
    SvdConvergenceError
        If the columns are not mutually orthogonal after ``MAX_SWEEPS``.
    """
    A = as_matrix(M)
    m, n = A.shape
    if min(m, n) < 1:
        raise ValueError(f"thin_svd needs a non-empty matrix, got shape {A.shape}")
    wide = n > m
    if wide:
        A = A.T
        m, n = n, m
    work = np.array(A.T, order="C")
    vt = np.eye(n)
    floor = ORTHO_TOL * np.sqrt(np.einsum("ij,ij->", A, A))
    converged, sweeps, residual = _backend.kernels.jacobi_sweeps(work, vt, ORTHO_TOL, floor * floor, MAX_SWEEPS)
    if not converged:
        raise SvdConvergenceError(sweeps, residual)

    sigma = np.sqrt(np.einsum("ij,ij->i", work, work))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    U = work[order].T.copy()
    V = vt[order].T.copy()
    filled = sigma > floor
    sigma[~filled] = 0.0
    U[:, filled] /= sigma[filled]
    if not filled.all():
        U = _complete_basis(U, filled)
    if wide:
        U, V = V, U
    return SvdResult(U, sigma, V)


def frobenius_norm_sq(M):
    A = as_matrix(M)
    return float(np.einsum("ij,ij->", A, A))


def nuclear_norm(M):
    """Sum of singular values."""
    return float(thin_svd(M).singular_values.sum())
