# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled period-pairing kernel; see ``_pykernel`` for the reference."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log1p, atan2, exp, cos, sin, log, hypot, fabs, M_PI

cnp.import_array()


cdef inline int _eval(int kind, int n, double eps, double t, int mode,
                      double xi, double *out) noexcept nogil:
    """Write the requested part of exp(-t eta(xi)) to out[0]; 1 on branch error."""
    cdef double a, b, na, v, er, ei, mag, arg, damp
    cdef int k
    if kind == 0:
        # u_1 = log(1 - i xi)
        a = 0.5 * log1p(xi * xi)
        b = atan2(-xi, 1.0)
        for k in range(n - 1):
            if 1.0 + a <= 0.0:
                return 1
            na = 0.5 * log1p(2.0 * a + a * a + b * b)
            b = atan2(b, 1.0 + a)
            a = na
        if eps != 1.0:
            mag = hypot(a, b)
            if mag == 0.0:
                er = 0.0
                ei = 0.0
            else:
                arg = atan2(b, a)
                mag = exp(eps * log(mag))
                er = mag * cos(eps * arg)
                ei = mag * sin(eps * arg)
        else:
            er = a
            ei = b
    else:
        if kind == 1:
            v = fabs(xi)
        else:
            v = xi * xi
        for k in range(n):
            v = log1p(v)
        if eps != 1.0 and v > 0.0:
            v = exp(eps * log(v))
        er = v
        ei = 0.0
    damp = exp(-t * er)
    if ei == 0.0:
        # real symbol: no phase
        if mode == 0:
            out[0] = damp
        elif mode == 1:
            out[0] = 0.0
        else:
            out[0] = damp / xi
        return 0
    if mode == 0:
        out[0] = damp * cos(t * ei)
    elif mode == 1:
        out[0] = -damp * sin(t * ei)
    else:
        out[0] = damp * cos(t * ei) / xi
    return 0


def integrand(int kind, int n, double eps, double t, int mode, xi):
    cdef cnp.ndarray[double, ndim=1] x = np.ascontiguousarray(np.ravel(xi), dtype=float)
    cdef cnp.ndarray[double, ndim=1] res = np.empty(x.shape[0])
    cdef Py_ssize_t i, m = x.shape[0]
    cdef int bad = 0
    cdef double val
    with nogil:
        for i in range(m):
            if _eval(kind, n, eps, t, mode, x[i], &val):
                bad = 1
                break
            res[i] = val
    if bad:
        from .errors import BranchError
        raise BranchError("Re(1 + u_k) <= 0 in the symbol recursion")
    return res.reshape(np.shape(xi))


def paired_blocks(int kind, int n, double eps, double t, int mode, double inv_s,
                  double base, long k0, long k1, nodes, weights):
    cdef cnp.ndarray[double, ndim=1] u = np.ascontiguousarray(nodes, dtype=float)
    cdef cnp.ndarray[double, ndim=1] w = np.ascontiguousarray(weights, dtype=float)
    cdef Py_ssize_t q = u.shape[0], j
    cdef long nk = k1 - k0 if k1 > k0 else 0
    cdef cnp.ndarray[double, ndim=1] res = np.empty(nk)
    cdef cnp.ndarray[double, ndim=1] wc = np.empty(q)
    cdef long k
    cdef double a, acc, f1, f2, f3, f4
    cdef int bad = 0
    for j in range(q):
        wc[j] = w[j] * cos(u[j])
    with nogil:
        for k in range(nk):
            a = base + 2.0 * M_PI * <double>(k0 + k)
            acc = 0.0
            for j in range(q):
                bad |= _eval(kind, n, eps, t, mode, (a + u[j]) * inv_s, &f1)
                bad |= _eval(kind, n, eps, t, mode, (a + M_PI - u[j]) * inv_s, &f2)
                bad |= _eval(kind, n, eps, t, mode, (a + M_PI + u[j]) * inv_s, &f3)
                bad |= _eval(kind, n, eps, t, mode, (a + 2.0 * M_PI - u[j]) * inv_s, &f4)
                acc += wc[j] * ((f1 - f2) - (f3 - f4))
            res[k] = 2.0 * acc
            if bad:
                break
    if bad:
        from .errors import BranchError
        raise BranchError("Re(1 + u_k) <= 0 in the symbol recursion")
    return res
