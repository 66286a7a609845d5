# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pair-scan kernels.

Same contract as ``_kernels_py``; see that module for semantics.  These are
plain C loops over float64 buffers, O(1) extra memory per scan.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, log2, pow, sqrt

cnp.import_array()

BACKEND = "cython"


def holder_profile(const double[::1] times, const double[:, ::1] values, double alpha):
    cdef Py_ssize_t n = times.shape[0]
    cdef Py_ssize_t d = values.shape[1]
    out_arr = np.empty(n - 1)
    cdef double[::1] out = out_arr
    cdef double best = 0.0, s, diff, ratio, tj, xj0, xj1
    cdef Py_ssize_t i, j, e
    for j in range(1, n):
        tj = times[j]
        if d == 1:
            xj0 = values[j, 0]
            for i in range(j):
                diff = xj0 - values[i, 0]
                ratio = sqrt(diff * diff) / pow(tj - times[i], alpha)
                if ratio > best:
                    best = ratio
        elif d == 2:
            xj0 = values[j, 0]
            xj1 = values[j, 1]
            for i in range(j):
                diff = xj0 - values[i, 0]
                s = diff * diff
                diff = xj1 - values[i, 1]
                s += diff * diff
                ratio = sqrt(s) / pow(tj - times[i], alpha)
                if ratio > best:
                    best = ratio
        else:
            for i in range(j):
                s = 0.0
                for e in range(d):
                    diff = values[j, e] - values[i, e]
                    s += diff * diff
                ratio = sqrt(s) / pow(tj - times[i], alpha)
                if ratio > best:
                    best = ratio
        out[j - 1] = best
    return out_arr


def pvar_dp(const double[:, ::1] values, double p):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t d = values.shape[1]
    best_arr = np.zeros(n)
    cdef double[::1] best = best_arr
    cdef double s, diff, cand, top, xj0, xj1
    cdef Py_ssize_t i, j, e
    for j in range(1, n):
        top = -1.0
        if d == 1:
            xj0 = values[j, 0]
            for i in range(j):
                diff = xj0 - values[i, 0]
                cand = best[i] + pow(sqrt(diff * diff), p)
                if cand > top:
                    top = cand
        elif d == 2:
            xj0 = values[j, 0]
            xj1 = values[j, 1]
            for i in range(j):
                diff = xj0 - values[i, 0]
                s = diff * diff
                diff = xj1 - values[i, 1]
                s += diff * diff
                cand = best[i] + pow(sqrt(s), p)
                if cand > top:
                    top = cand
        else:
            for i in range(j):
                s = 0.0
                for e in range(d):
                    diff = values[j, e] - values[i, e]
                    s += diff * diff
                cand = best[i] + pow(sqrt(s), p)
                if cand > top:
                    top = cand
        best[j] = top
    return best_arr


def max_increment_dyadic(const double[::1] times, const double[:, ::1] values, Py_ssize_t n_levels):
    cdef Py_ssize_t n = times.shape[0]
    cdef Py_ssize_t d = values.shape[1]
    cdef double span = times[n - 1] - times[0]
    raw_arr = np.zeros(n_levels)
    cdef double[::1] raw = raw_arr
    cdef double s, diff, gap, norm, ti, xi0, xi1
    cdef Py_ssize_t i, j, e
    cdef long k
    for i in range(n - 1):
        ti = times[i]
        xi0 = values[i, 0]
        xi1 = values[i, 1] if d > 1 else 0.0
        for j in range(i + 1, n):
            gap = times[j] - ti
            k = <long>floor(log2(span / gap))
            if k < 0:
                continue
            if k >= n_levels:
                k = n_levels - 1
            if d == 1:
                diff = values[j, 0] - xi0
                s = diff * diff
            elif d == 2:
                diff = values[j, 0] - xi0
                s = diff * diff
                diff = values[j, 1] - xi1
                s += diff * diff
            else:
                s = 0.0
                for e in range(d):
                    diff = values[j, e] - values[i, e]
                    s += diff * diff
            norm = sqrt(s)
            if norm > raw[k]:
                raw[k] = norm
    cdef Py_ssize_t lev
    for lev in range(n_levels - 2, -1, -1):
        if raw[lev + 1] > raw[lev]:
            raw[lev] = raw[lev + 1]
    return raw_arr


def crossing_times(const double[::1] times, const double[::1] norms, const double[::1] radii):
    cdef Py_ssize_t n = times.shape[0]
    cdef Py_ssize_t m = radii.shape[0]
    out_arr = np.full(m, np.nan)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k = 0
    for i in range(n):
        while k < m and norms[i] >= radii[k]:
            out[k] = times[i]
            k += 1
        if k == m:
            break
    return out_arr
