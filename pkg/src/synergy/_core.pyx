# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for tree split search and coordinate descent.

Every routine here has a numpy twin in ``_fallback.py`` that performs the same
floating-point operations in the same order.
"""
import numpy as np

from libc.math cimport fabs, INFINITY


def best_split(const double[:, ::1] X, const double[::1] y,
               const Py_ssize_t[::1] samples, const Py_ssize_t[::1] features,
               Py_ssize_t min_leaf):
    cdef Py_ssize_t n = samples.shape[0]
    cdef Py_ssize_t i, k, f, nl, nr
    cdef double total, sl, sr, score, thr
    cdef double best_score = -INFINITY
    cdef double best_thr = 0.0
    cdef Py_ssize_t best_feat = -1

    vals_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] vals = vals_arr
    cdef double[::1] vs = np.empty(n, dtype=np.float64)
    cdef double[::1] ys = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t[::1] order

    if n < 2:
        return best_feat, best_thr, best_score

    for k in range(features.shape[0]):
        f = features[k]
        for i in range(n):
            vals[i] = X[samples[i], f]
        order = np.argsort(vals_arr, kind="stable").astype(np.intp)
        with nogil:
            for i in range(n):
                vs[i] = vals[order[i]]
                ys[i] = y[samples[order[i]]]
            total = 0.0
            for i in range(n):
                total += ys[i]
            sl = 0.0
            for i in range(n - 1):
                sl += ys[i]
                if not (vs[i] < vs[i + 1]):
                    continue
                nl = i + 1
                nr = n - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                sr = total - sl
                score = sl * sl / <double>nl + sr * sr / <double>nr
                if score > best_score:
                    best_score = score
                    best_feat = f
                    thr = 0.5 * (vs[i] + vs[i + 1])
                    if thr >= vs[i + 1]:
                        thr = vs[i]
                    best_thr = thr
    return best_feat, best_thr, best_score


cdef inline double _soft(double z, double t) nogil:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def cd_sweeps(const double[::1, :] X, double[::1] beta, double[::1] resid,
              const double[::1] col_sq, double l1, double l2, double tol,
              Py_ssize_t max_sweeps):
    """Cyclic coordinate descent on centered data; returns sweeps performed."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t sweep, j, i
    cdef double old, new, rho, delta, max_change
    cdef Py_ssize_t done = max_sweeps
    with nogil:
        for sweep in range(max_sweeps):
            max_change = 0.0
            for j in range(p):
                if col_sq[j] == 0.0:
                    continue
                old = beta[j]
                rho = 0.0
                for i in range(n):
                    rho += X[i, j] * resid[i]
                rho = rho / n + col_sq[j] * old
                new = _soft(rho, l1) / (col_sq[j] + l2)
                delta = new - old
                if delta != 0.0:
                    for i in range(n):
                        resid[i] -= X[i, j] * delta
                    beta[j] = new
                    if fabs(delta) > max_change:
                        max_change = fabs(delta)
            if max_change < tol:
                done = sweep + 1
                break
    return done
