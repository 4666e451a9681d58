# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot numerical kernels (see _ops_py for the contract)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport log

cnp.import_array()

BACKEND = "compiled"


def pairwise_sq_dists(X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] Xv = X
    cdef Py_ssize_t n = Xv.shape[0]
    cdef Py_ssize_t d = Xv.shape[1]
    D = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] Dv = D
    cdef Py_ssize_t i, j, k
    cdef double acc, diff
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(d):
                diff = Xv[i, k] - Xv[j, k]
                acc += diff * diff
            Dv[i, j] = acc
            Dv[j, i] = acc
    return D


def tsne_grad_kl(P, Y):
    P = np.ascontiguousarray(P, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    cdef double[:, ::1] Pv = P
    cdef double[:, ::1] Yv = Y
    cdef Py_ssize_t n = Yv.shape[0]
    cdef Py_ssize_t m = Yv.shape[1]
    W = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] Wv = W
    grad = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] Gv = grad
    cdef Py_ssize_t i, j, k
    cdef double acc, diff, z, q, coef, kl, p

    z = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for k in range(m):
                diff = Yv[i, k] - Yv[j, k]
                acc += diff * diff
            acc = 1.0 / (1.0 + acc)
            Wv[i, j] = acc
            Wv[j, i] = acc
            z += 2.0 * acc

    kl = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            q = Wv[i, j] / z
            coef = 4.0 * (Pv[i, j] - q) * Wv[i, j]
            for k in range(m):
                Gv[i, k] += coef * (Yv[i, k] - Yv[j, k])
            p = Pv[i, j]
            if p > 0.0:
                if q < 1e-300:
                    q = 1e-300
                kl += p * log(p / q)
    return grad, kl
