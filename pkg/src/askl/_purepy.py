"""Pure numpy implementations of the hot kernels.

Each function here mirrors one in ``_kernels.pyx`` argument for argument.
They are selected when the compiled extension is unavailable or when
``ASKL_PURE_PYTHON=1`` is set.
"""
import math

import numpy as np


def jacobi_sweeps(work, vt, tol, floor_sq, max_sweeps):
    """Cyclic one-sided Jacobi rotations on the rows of ``work``, in place.

    ``work`` is n x m (each row one column of the matrix being decomposed)
    and ``vt`` accumulates the same rotations.  A pair of rows is rotated
    while ``|<u_p, u_q>| > tol * ||u_p|| ||u_q||``; rows whose squared norm
    is at most ``floor_sq`` count as zero and are never rotated.

    Returns ``(converged, sweeps, residual)`` where ``residual`` is the
    largest relative inner product seen in the final sweep.
    """
    n = work.shape[0]
    residual = 0.0
    for sweep in range(1, max_sweeps + 1):
        residual = 0.0
        rotated = False
        for p in range(n - 1):
            up = work[p]
            for q in range(p + 1, n):
                uq = work[q]
                alpha = float(up @ up)
                beta = float(uq @ uq)
                gamma = float(up @ uq)
                if gamma == 0.0 or alpha <= floor_sq or beta <= floor_sq:
                    continue
                scale = math.sqrt(alpha * beta)
                rel = abs(gamma) / scale
                if rel > residual:
                    residual = rel
                if rel <= tol:
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                tmp = up.copy()
                up *= c
                up -= s * uq
                uq *= c
                uq += s * tmp
                vp = vt[p].copy()
                vt[p] *= c
                vt[p] -= s * vt[q]
                vt[q] *= c
                vt[q] += s * vp
        if not rotated:
            return True, sweep, residual
    return False, max_sweeps, residual


def hinge_batch(scores, labels):
    """Multiclass hinge losses and subgradients for a batch of score rows.

    The runner-up class is the lowest-index maximiser among the other
    classes; a margin of exactly 1 yields a zero subgradient.
    """
    m, k = scores.shape
    rows = np.arange(m)
    masked = scores.copy()
    masked[rows, labels] = -np.inf
    rival = np.argmax(masked, axis=1)
    margin = scores[rows, labels] - scores[rows, rival]
    losses = np.maximum(0.0, 1.0 - margin)
    grads = np.zeros((m, k))
    active = margin < 1.0
    grads[rows[active], rival[active]] = 1.0
    grads[rows[active], labels[active]] = -1.0
    return losses, grads
