# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Cython implementations of the hot kernels.

Loop-based float64 versions of the functions in ``mixbal._kernels_py``.
Each training step is a handful of small dense ops; fusing the loops here
avoids the temporaries and dispatch overhead of the numpy path.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()

NAME = "cython"


def linear_forward(const double[:, ::1] x, const double[:, ::1] w, const double[::1] b):
    cdef Py_ssize_t m = x.shape[0], d = x.shape[1], k = w.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((m, k))
    cdef double[:, ::1] z = out
    cdef Py_ssize_t i, j, t
    cdef double acc
    for i in range(m):
        for j in range(k):
            acc = b[j]
            for t in range(d):
                acc += x[i, t] * w[t, j]
            z[i, j] = acc
    return out


def mlp_forward(const double[:, ::1] x, const double[:, ::1] w1, const double[::1] b1,
                const double[:, ::1] w2, const double[::1] b2):
    cdef Py_ssize_t m = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t nh = w1.shape[1], k = w2.shape[1]
    cdef cnp.ndarray[double, ndim=2] h_arr = np.empty((m, nh))
    cdef cnp.ndarray[double, ndim=2] z_arr = np.empty((m, k))
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] z = z_arr
    cdef Py_ssize_t i, j, t
    cdef double acc
    for i in range(m):
        for j in range(nh):
            acc = b1[j]
            for t in range(d):
                acc += x[i, t] * w1[t, j]
            h[i, j] = acc if acc > 0.0 else 0.0
        for j in range(k):
            acc = b2[j]
            for t in range(nh):
                acc += h[i, t] * w2[t, j]
            z[i, j] = acc
    return h_arr, z_arr


def softmax_xent(const double[:, ::1] logits, const double[:, ::1] targets,
                 const double[::1] row_weights):
    cdef Py_ssize_t m = logits.shape[0], k = logits.shape[1]
    cdef cnp.ndarray[double, ndim=2] d_arr = np.empty((m, k))
    cdef double[:, ::1] dlogits = d_arr
    cdef Py_ssize_t i, j
    cdef double zmax, sum_exp, dot, loss, w, p
    loss = 0.0
    for i in range(m):
        zmax = logits[i, 0]
        for j in range(1, k):
            if logits[i, j] > zmax:
                zmax = logits[i, j]
        sum_exp = 0.0
        dot = 0.0
        for j in range(k):
            sum_exp += exp(logits[i, j] - zmax)
            dot += targets[i, j] * (logits[i, j] - zmax)
        w = row_weights[i]
        loss += w * (log(sum_exp) - dot)
        for j in range(k):
            p = exp(logits[i, j] - zmax) / sum_exp
            dlogits[i, j] = w * (p - targets[i, j])
    return loss, d_arr


def linear_backward(const double[:, ::1] x, const double[:, ::1] dlogits):
    cdef Py_ssize_t m = x.shape[0], d = x.shape[1], k = dlogits.shape[1]
    cdef cnp.ndarray[double, ndim=2] dw_arr = np.zeros((d, k))
    cdef cnp.ndarray[double, ndim=1] db_arr = np.zeros(k)
    cdef double[:, ::1] dw = dw_arr
    cdef double[::1] db = db_arr
    cdef Py_ssize_t i, j, t
    for i in range(m):
        for j in range(k):
            db[j] += dlogits[i, j]
            for t in range(d):
                dw[t, j] += x[i, t] * dlogits[i, j]
    return dw_arr, db_arr


def mlp_backward(const double[:, ::1] x, const double[:, ::1] h, const double[:, ::1] w2,
                 const double[:, ::1] dlogits):
    cdef Py_ssize_t m = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t nh = h.shape[1], k = dlogits.shape[1]
    cdef cnp.ndarray[double, ndim=2] dw1_arr = np.zeros((d, nh))
    cdef cnp.ndarray[double, ndim=1] db1_arr = np.zeros(nh)
    cdef cnp.ndarray[double, ndim=2] dw2_arr = np.zeros((nh, k))
    cdef cnp.ndarray[double, ndim=1] db2_arr = np.zeros(k)
    cdef double[:, ::1] dw1 = dw1_arr
    cdef double[::1] db1 = db1_arr
    cdef double[:, ::1] dw2 = dw2_arr
    cdef double[::1] db2 = db2_arr
    cdef Py_ssize_t i, j, t
    cdef double g
    for i in range(m):
        for j in range(k):
            g = dlogits[i, j]
            db2[j] += g
            for t in range(nh):
                dw2[t, j] += h[i, t] * g
        for t in range(nh):
            if h[i, t] > 0.0:
                g = 0.0
                for j in range(k):
                    g += dlogits[i, j] * w2[t, j]
                db1[t] += g
                for j in range(d):
                    dw1[j, t] += x[i, j] * g
    return dw1_arr, db1_arr, dw2_arr, db2_arr


def pairwise_sqdist(const double[:, ::1] a, const double[:, ::1] b):
    # Sequential accumulation over coordinates, matching a naive loop
    # bit for bit (same guarantee as the numpy backend).
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], d = a.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((n, m))
    cdef double[:, ::1] dist = out
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for t in range(d):
                diff = a[i, t] - b[j, t]
                acc += diff * diff
            dist[i, j] = acc
    return out
