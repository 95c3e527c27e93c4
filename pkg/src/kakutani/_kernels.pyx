# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled word-tree kernels; see ``_pykernels`` for the semantics."""
import numpy as np

from libc.math cimport sin, M_PI
from libc.stdlib cimport malloc, realloc, free


cdef inline double _value(double p, double l, int conj, double eps, int point_mode) nogil:
    if conj == 0:
        return l
    if point_mode:
        return (1.0 + eps * sin(2.0 * M_PI * p)) * l
    return l + (eps / M_PI) * sin(M_PI * (2.0 * p + l)) * sin(M_PI * l)


cdef struct Walk:
    long long count
    long long visited
    int overflow
    double *values
    long long nvalues
    long long cap_values


cdef int _walk(double[::1] offs, double[::1] rats, double a0, double L0, double off,
               double scale, double denom, double lam, double rtol, int conj, double eps,
               int point_mode, double hi_g, long long max_nodes, int keep, Walk *w) except -1:
    cdef Py_ssize_t m = rats.shape[0]
    cdef Py_ssize_t cap = 1024, top = 0, i
    cdef double thr = lam * (1.0 - rtol)
    cdef double a, L, Lc, val
    cdef double *sa = <double *> malloc(cap * sizeof(double))
    cdef double *sl = <double *> malloc(cap * sizeof(double))
    cdef double *tmp
    if sa == NULL or sl == NULL:
        free(sa)
        free(sl)
        raise MemoryError()
    sa[0] = a0
    sl[0] = L0
    top = 1
    try:
        while top > 0:
            top -= 1
            a = sa[top]
            L = sl[top]
            w.visited += 1
            if w.visited > max_nodes:
                w.overflow = 1
                return 0
            val = _value(off + scale * a, scale * L, conj, eps, point_mode) / denom
            if val >= thr:
                w.count += 1
                if keep:
                    if w.nvalues == w.cap_values:
                        w.cap_values = 2 * w.cap_values if w.cap_values else 4096
                        tmp = <double *> realloc(w.values, w.cap_values * sizeof(double))
                        if tmp == NULL:
                            raise MemoryError()
                        w.values = tmp
                    w.values[w.nvalues] = val
                    w.nvalues += 1
            if top + m > cap:
                cap = 2 * (top + m)
                tmp = <double *> realloc(sa, cap * sizeof(double))
                if tmp == NULL:
                    raise MemoryError()
                sa = tmp
                tmp = <double *> realloc(sl, cap * sizeof(double))
                if tmp == NULL:
                    raise MemoryError()
                sl = tmp
            for i in range(m - 1, -1, -1):
                Lc = rats[i] * L
                if hi_g * scale * Lc / denom >= thr:
                    sa[top] = offs[i] + rats[i] * a
                    sl[top] = Lc
                    top += 1
    finally:
        free(sa)
        free(sl)
    return 0


def count_tree(offsets, ratios, double a0, double L0, double off, double scale, double denom,
               double lam, double rtol, int conj, double eps, int point_mode, double hi_g,
               long long max_nodes):
    """Return ``(count, visited, overflow)``."""
    cdef double[::1] offs = np.ascontiguousarray(offsets, dtype=np.float64)
    cdef double[::1] rats = np.ascontiguousarray(ratios, dtype=np.float64)
    cdef Walk w
    w.count = 0
    w.visited = 0
    w.overflow = 0
    w.values = NULL
    w.nvalues = 0
    w.cap_values = 0
    _walk(offs, rats, a0, L0, off, scale, denom, lam, rtol, conj, eps, point_mode, hi_g,
          max_nodes, 0, &w)
    return w.count, w.visited, bool(w.overflow)


def collect_tree(offsets, ratios, double a0, double L0, double off, double scale, double denom,
                 double lam, double rtol, int conj, double eps, int point_mode, double hi_g,
                 long long max_nodes):
    """Return ``(values, visited, overflow)`` with the values of counted nodes."""
    cdef double[::1] offs = np.ascontiguousarray(offsets, dtype=np.float64)
    cdef double[::1] rats = np.ascontiguousarray(ratios, dtype=np.float64)
    cdef Walk w
    cdef long long k
    w.count = 0
    w.visited = 0
    w.overflow = 0
    w.values = NULL
    w.nvalues = 0
    w.cap_values = 0
    try:
        _walk(offs, rats, a0, L0, off, scale, denom, lam, rtol, conj, eps, point_mode, hi_g,
              max_nodes, 1, &w)
        out = np.empty(w.nvalues, dtype=np.float64)
        for k in range(w.nvalues):
            out[k] = w.values[k]
    finally:
        free(w.values)
    return out, w.visited, bool(w.overflow)
