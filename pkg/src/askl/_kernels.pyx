# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_purepy`` for the reference versions."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, copysign, INFINITY

cnp.import_array()


cdef inline double _dot(double[:, ::1] a, Py_ssize_t p, Py_ssize_t q, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(m):
        acc += a[p, i] * a[q, i]
    return acc


cdef inline void _rotate(double[:, ::1] a, Py_ssize_t p, Py_ssize_t q, Py_ssize_t m,
                         double c, double s) noexcept nogil:
    cdef Py_ssize_t i
    cdef double x, y
    for i in range(m):
        x = a[p, i]
        y = a[q, i]
        a[p, i] = c * x - s * y
        a[q, i] = s * x + c * y


def jacobi_sweeps(double[:, ::1] work, double[:, ::1] vt, double tol, double floor_sq, int max_sweeps):
    cdef Py_ssize_t n = work.shape[0]
    cdef Py_ssize_t m = work.shape[1]
    cdef Py_ssize_t nv = vt.shape[1]
    cdef Py_ssize_t p, q
    cdef int sweep
    cdef bint rotated
    cdef double alpha, beta, gamma, rel, zeta, t, c, s
    cdef double residual = 0.0
    cdef bint converged = False
    with nogil:
        for sweep in range(1, max_sweeps + 1):
            residual = 0.0
            rotated = False
            for p in range(n - 1):
                for q in range(p + 1, n):
                    alpha = _dot(work, p, p, m)
                    beta = _dot(work, q, q, m)
                    gamma = _dot(work, p, q, m)
                    if gamma == 0.0 or alpha <= floor_sq or beta <= floor_sq:
                        continue
                    rel = fabs(gamma) / sqrt(alpha * beta)
                    if rel > residual:
                        residual = rel
                    if rel <= tol:
                        continue
                    rotated = True
                    zeta = (beta - alpha) / (2.0 * gamma)
                    t = copysign(1.0, zeta) / (fabs(zeta) + sqrt(1.0 + zeta * zeta))
                    c = 1.0 / sqrt(1.0 + t * t)
                    s = c * t
                    _rotate(work, p, q, m, c, s)
                    _rotate(vt, p, q, nv, c, s)
            if not rotated:
                converged = True
                break
    return bool(converged), (sweep if converged else max_sweeps), residual


def hinge_batch(double[:, ::1] scores, cnp.intp_t[::1] labels):
    cdef Py_ssize_t m = scores.shape[0]
    cdef Py_ssize_t k = scores.shape[1]
    cdef Py_ssize_t i, j, c, rival
    cdef double best, margin
    losses_arr = np.zeros(m)
    grads_arr = np.zeros((m, k))
    cdef double[::1] losses = losses_arr
    cdef double[:, ::1] grads = grads_arr
    with nogil:
        for i in range(m):
            c = labels[i]
            best = -INFINITY
            rival = -1
            for j in range(k):
                if j != c and scores[i, j] > best:
                    best = scores[i, j]
                    rival = j
            if rival < 0:
                rival = 1 if c == 0 else 0
                best = scores[i, rival]
            margin = scores[i, c] - best
            if margin < 1.0:
                losses[i] = 1.0 - margin
                grads[i, rival] = 1.0
                grads[i, c] = -1.0
    return losses_arr, grads_arr
