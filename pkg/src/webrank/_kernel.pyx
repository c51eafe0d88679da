# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernel: executes expression programs over points.

Mirrors the contract of `_kernel_py`; see `program` for the instruction set.
"""

from libc.math cimport cos, exp, fabs, isfinite, log, pow, sin, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef int _CONST = 0, _VAR = 1, _ADD = 2, _SUB = 3, _MUL = 4, _DIV = 5, _NEG = 6
cdef int _POWI = 7, _POWG = 8, _EXP = 9, _LOG = 10, _SQRT = 11, _SIN = 12, _COS = 13


cdef double _ipow(double base, long long k) nogil:
    cdef double r = 1.0
    cdef double b = base
    cdef long long n = k
    if n < 0:
        b = 1.0 / b
        n = -n
    while n:
        if n & 1:
            r *= b
        b *= b
        n >>= 1
    return r


cdef long long _eval(const int[::1] ops, const int[::1] a, const int[::1] b,
                     const long long[::1] iaux, const double[::1] faux,
                     double x, double y, double[::1] out) nogil:
    cdef Py_ssize_t n = ops.shape[0]
    cdef Py_ssize_t i
    cdef int op
    cdef double v, base, den, arg
    for i in range(n):
        op = ops[i]
        if op == _CONST:
            v = faux[i]
        elif op == _VAR:
            v = x if iaux[i] == 0 else y
        elif op == _ADD:
            v = out[a[i]] + out[b[i]]
        elif op == _SUB:
            v = out[a[i]] - out[b[i]]
        elif op == _MUL:
            v = out[a[i]] * out[b[i]]
        elif op == _DIV:
            den = out[b[i]]
            if den == 0.0:
                return i
            v = out[a[i]] / den
        elif op == _NEG:
            v = -out[a[i]]
        elif op == _POWI:
            base = out[a[i]]
            if base == 0.0 and iaux[i] < 0:
                return i
            v = _ipow(base, iaux[i])
        elif op == _POWG:
            base = out[a[i]]
            if base <= 0.0:
                return i
            v = pow(base, out[b[i]])
        elif op == _EXP:
            v = exp(out[a[i]])
        elif op == _LOG:
            arg = out[a[i]]
            if arg <= 0.0:
                return i
            v = log(arg)
        elif op == _SQRT:
            arg = out[a[i]]
            if arg < 0.0:
                return i
            v = sqrt(arg)
        elif op == _SIN:
            v = sin(out[a[i]])
        else:
            v = cos(out[a[i]])
        if not isfinite(v):
            return i
        out[i] = v
    return -1


cdef extern from "math.h":
    long double expl(long double) nogil
    long double logl(long double) nogil
    long double sqrtl(long double) nogil
    long double sinl(long double) nogil
    long double cosl(long double) nogil
    long double powl(long double, long double) nogil
    bint isfinite_l "isfinite"(long double) nogil


cdef long double _ipow_l(long double base, long long k) nogil:
    cdef long double r = 1.0
    cdef long double b = base
    cdef long long n = k
    if n < 0:
        b = 1.0 / b
        n = -n
    while n:
        if n & 1:
            r *= b
        b *= b
        n >>= 1
    return r


cdef long long _eval_long(const int[::1] ops, const int[::1] a, const int[::1] b,
                          const long long[::1] iaux, const long double[::1] faux,
                          long double x, long double y, long double[::1] out) nogil:
    cdef Py_ssize_t n = ops.shape[0]
    cdef Py_ssize_t i
    cdef int op
    cdef long double v, base, den, arg
    for i in range(n):
        op = ops[i]
        if op == _CONST:
            v = faux[i]
        elif op == _VAR:
            v = x if iaux[i] == 0 else y
        elif op == _ADD:
            v = out[a[i]] + out[b[i]]
        elif op == _SUB:
            v = out[a[i]] - out[b[i]]
        elif op == _MUL:
            v = out[a[i]] * out[b[i]]
        elif op == _DIV:
            den = out[b[i]]
            if den == 0.0:
                return i
            v = out[a[i]] / den
        elif op == _NEG:
            v = -out[a[i]]
        elif op == _POWI:
            base = out[a[i]]
            if base == 0.0 and iaux[i] < 0:
                return i
            v = _ipow_l(base, iaux[i])
        elif op == _POWG:
            base = out[a[i]]
            if base <= 0.0:
                return i
            v = powl(base, out[b[i]])
        elif op == _EXP:
            v = expl(out[a[i]])
        elif op == _LOG:
            arg = out[a[i]]
            if arg <= 0.0:
                return i
            v = logl(arg)
        elif op == _SQRT:
            arg = out[a[i]]
            if arg < 0.0:
                return i
            v = sqrtl(arg)
        elif op == _SIN:
            v = sinl(out[a[i]])
        else:
            v = cosl(out[a[i]])
        if not isfinite_l(v):
            return i
        out[i] = v
    return -1


def eval_values(ops, a, b, iaux, faux, double x, double y, out):
    """All instruction values at one point; returns -1 or the failing index."""
    return _eval(ops, a, b, iaux, faux, x, y, out)


def eval_values_long(ops, a, b, iaux, faux_l, x, y, out):
    """Extended-precision twin of eval_values (long double)."""
    return _eval_long(ops, a, b, iaux, faux_l, <long double> x, <long double> y, out)


def eval_roots(ops, a, b, iaux, faux, xs, ys, roots, status):
    """Root value at many points; per-point status as in eval_values."""
    cdef const double[::1] xv = xs
    cdef const double[::1] yv = ys
    cdef double[::1] rv = roots
    cdef long long[::1] sv = status
    cdef double[::1] scratch = np.empty(len(ops), dtype=np.float64)
    cdef Py_ssize_t p, n = xv.shape[0]
    cdef long long st
    cdef const int[::1] opsv = ops
    cdef const int[::1] av = a
    cdef const int[::1] bv = b
    cdef const long long[::1] iv = iaux
    cdef const double[::1] fv = faux
    cdef Py_ssize_t last = opsv.shape[0] - 1
    with nogil:
        for p in range(n):
            st = _eval(opsv, av, bv, iv, fv, xv[p], yv[p], scratch)
            sv[p] = st
            rv[p] = scratch[last] if st < 0 else 0.0
