# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Same signatures as :mod:`dwsim._pykernels`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, M_PI

cnp.import_array()


def sliding_mean(const double[::1] x, Py_ssize_t width):
    # running sum with Kahan compensation: O(n) and no drift over long records
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = n - width + 1
    cdef Py_ssize_t i
    cdef double acc = 0.0, comp = 0.0, term, tmp
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] y = out
    for i in range(width):
        term = x[i] - comp
        tmp = acc + term
        comp = (tmp - acc) - term
        acc = tmp
    y[0] = acc / width
    for i in range(1, m):
        term = (x[i + width - 1] - x[i - 1]) - comp
        tmp = acc + term
        comp = (tmp - acc) - term
        acc = tmp
        y[i] = acc / width
    return out


def block_mean(const double[::1] x, Py_ssize_t width):
    cdef Py_ssize_t nblocks = x.shape[0] // width
    cdef Py_ssize_t k, j, base
    cdef double acc
    out = np.empty(nblocks, dtype=np.float64)
    cdef double[::1] y = out
    for k in range(nblocks):
        acc = 0.0
        base = k * width
        for j in range(width):
            acc += x[base + j]
        y[k] = acc / width
    return out


def demod_block_mean(const double[::1] x, double fs, double freq, double phase,
                     double t0, Py_ssize_t width):
    cdef Py_ssize_t nblocks = x.shape[0] // width
    cdef Py_ssize_t k, j, idx
    cdef double acc, t
    cdef double w = 2.0 * M_PI * freq
    out = np.empty(nblocks, dtype=np.float64)
    cdef double[::1] y = out
    for k in range(nblocks):
        acc = 0.0
        for j in range(width):
            idx = k * width + j
            t = t0 + idx / fs
            acc += 2.0 * x[idx] * sin(w * t + phase)
        y[k] = acc / width
    return out


def window_moments(const double[::1] s, const double[::1] r):
    cdef Py_ssize_t n = s.shape[0]
    cdef Py_ssize_t i
    cdef double ss = 0.0, sr = 0.0, ssr = 0.0, srr = 0.0, sss = 0.0
    if r.shape[0] != n:
        raise ValueError("length mismatch")
    for i in range(n):
        ss += s[i]
        sr += r[i]
        ssr += s[i] * r[i]
        srr += r[i] * r[i]
        sss += s[i] * s[i]
    return ss, sr, ssr, srr, sss
