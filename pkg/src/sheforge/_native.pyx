# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures mirror :mod:`sheforge._fallback`."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def spwm_levels(const double[::1] ref, const double[::1] carrier, int s):
    """Phase-disposition comparison of a reference (in level units) against 2s stacked carriers."""
    cdef Py_ssize_t n = ref.shape[0], i
    cdef int k, level
    cdef double r, c
    if carrier.shape[0] != n:
        raise ValueError("ref and carrier must have equal length")
    out = np.empty(n, dtype=np.int8)
    cdef cnp.int8_t[::1] lv = out
    for i in range(n):
        r = ref[i]
        c = carrier[i]
        level = 0
        for k in range(s):
            if r > <double>k + c:
                level += 1
            if r < c - <double>(k + 1):
                level -= 1
        lv[i] = level
    return out


def project_harmonics(const double[::1] x, const double[::1] cos_table,
                      const double[::1] sin_table, long long n_cycles, int max_order):
    """Correlate x against cos/sin at orders 1..max_order via exact phase indexing.

    cos_table[j] = cos(2*pi*j/L) for a record of L samples spanning n_cycles cycles.
    Returns (a, b) with x ~ sum a_n cos + b_n sin.
    """
    cdef Py_ssize_t L = x.shape[0], i
    cdef long long step, k
    cdef int n
    cdef double sa, sb, xi
    if cos_table.shape[0] != L or sin_table.shape[0] != L:
        raise ValueError("tables must match record length")
    a = np.zeros(max_order, dtype=np.float64)
    b = np.zeros(max_order, dtype=np.float64)
    cdef double[::1] av = a, bv = b
    for n in range(1, max_order + 1):
        step = (n * n_cycles) % L
        k = 0
        sa = 0.0
        sb = 0.0
        for i in range(L):
            xi = x[i]
            sa += xi * cos_table[k]
            sb += xi * sin_table[k]
            k += step
            if k >= L:
                k -= L
        av[n - 1] = 2.0 * sa / L
        bv[n - 1] = 2.0 * sb / L
    return a, b
