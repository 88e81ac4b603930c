# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; drop-in replacement for venuetrace.kernels.pure."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


cdef inline double _sigmoid(double z) nogil:
    cdef double t
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    t = exp(z)
    return t / (1.0 + t)


def logreg_fit(idx, int n_features, y, double learning_rate, int iterations,
               double l2, w0=None, double b0=0.0):
    """Full-batch gradient descent on L2-regularized logistic loss.

    Deterministic given inputs; starts from zeros unless warm-started.
    """
    cdef cnp.int32_t[:, ::1] idx_v = np.ascontiguousarray(idx, dtype=np.int32)
    cdef double[::1] y_v = np.ascontiguousarray(y, dtype=np.float64)
    cdef cnp.ndarray w_arr
    if w0 is None:
        w_arr = np.zeros(n_features, dtype=np.float64)
    else:
        w_arr = np.array(w0, dtype=np.float64, copy=True)
    cdef double[::1] w = w_arr
    cdef double[::1] gw = np.zeros(n_features, dtype=np.float64)
    cdef Py_ssize_t n = idx_v.shape[0]
    cdef Py_ssize_t groups = idx_v.shape[1]
    cdef double b = b0
    cdef double gb, z, r
    cdef Py_ssize_t it, i, j, k

    with nogil:
        for it in range(iterations):
            for k in range(n_features):
                gw[k] = 0.0
            gb = 0.0
            for i in range(n):
                z = b
                for j in range(groups):
                    z += w[idx_v[i, j]]
                r = _sigmoid(z) - y_v[i]
                gb += r
                for j in range(groups):
                    gw[idx_v[i, j]] += r
            for k in range(n_features):
                w[k] -= learning_rate * (gw[k] + l2 * w[k]) / n
            b -= learning_rate * gb / n
    return w_arr, b


def logreg_margins(idx, w, double b):
    """Pre-sigmoid scores w.x + b for one-hot index rows."""
    cdef cnp.int32_t[:, ::1] idx_v = np.ascontiguousarray(idx, dtype=np.int32)
    cdef double[::1] w_v = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = idx_v.shape[0]
    cdef Py_ssize_t groups = idx_v.shape[1]
    cdef cnp.ndarray out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double z
    with nogil:
        for i in range(n):
            z = b
            for j in range(groups):
                z += w_v[idx_v[i, j]]
            out[i] = z
    return out_arr


def logreg_predict(idx, w, double b):
    cdef cnp.ndarray margins = logreg_margins(idx, w, b)
    cdef double[::1] m = margins
    cdef Py_ssize_t i
    for i in range(m.shape[0]):
        m[i] = _sigmoid(m[i])
    return margins
