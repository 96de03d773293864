# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled row sweeps; same contract as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, fabs

cnp.import_array()


def toda_hirota_row(u0, u1, double a2, double tol=1e-12, int max_sweeps=100, double twist=0.0):
    cdef cnp.ndarray[double, ndim=1] r0 = np.ascontiguousarray(u0, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] r1 = np.ascontiguousarray(u1, dtype=np.float64)
    cdef Py_ssize_t n_sites = r1.shape[0]
    cdef cnp.ndarray[double, ndim=1] r2 = 2 * r1 - r0
    cdef Py_ssize_t n
    cdef int sweep
    cdef double change, arg, new, left, right
    for sweep in range(1, max_sweeps + 1):
        change = 0.0
        for n in range(n_sites):
            if n > 0:
                left = r2[n - 1]
            else:
                left = r2[n_sites - 1] - twist
            if n < n_sites - 1:
                right = r0[n + 1]
            else:
                right = r0[0] + twist
            arg = exp(r0[n] - r1[n]) - a2 * exp(left - r1[n]) + a2 * exp(r1[n] - right)
            if arg <= 0.0:
                return r2, -1
            new = r1[n] - log(arg)
            if fabs(new - r2[n]) > change:
                change = fabs(new - r2[n])
            r2[n] = new
        if change < tol:
            return r2, sweep
    return r2, -1


def hietarinta_row(u0, double e1, double e2, double o1, double o2, double tol=1e-12, int max_sweeps=100):
    cdef cnp.ndarray[double, ndim=1] r0 = np.ascontiguousarray(u0, dtype=np.float64)
    cdef Py_ssize_t n_sites = r0.shape[0]
    cdef cnp.ndarray[double, ndim=1] r1 = r0.copy()
    cdef Py_ssize_t n, k
    cdef int sweep
    cdef double change, u, u10, u01, q, den, new
    for sweep in range(1, max_sweeps + 1):
        change = 0.0
        for n in range(n_sites):
            k = (n + 1) % n_sites
            u = r0[n]
            u10 = r0[k]
            u01 = r1[n]
            q = (1 + e2 * u10) / (1 + o1 * u10) * (1 + o2 * u01) / (1 + e1 * u01) * (1 + e1 * u) / (1 + e2 * u)
            den = o2 - q * o1
            if den == 0.0:
                return r1, -1
            new = (q - 1) / den
            if fabs(new - r1[k]) > change:
                change = fabs(new - r1[k])
            r1[k] = new
        if change < tol:
            return r1, sweep
    return r1, -1
