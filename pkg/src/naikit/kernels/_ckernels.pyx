# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for nested B-function evaluation and kernel sums.

Activation codes follow ``naikit.kernels.ACTIVATION_CODES``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, log1p, tanh, atan, erfc, pow, fabs, sqrt, INFINITY

cnp.import_array()

cdef double SQRT1_2 = 0.7071067811865476


cdef inline double _expit(double x) noexcept nogil:
    cdef double e
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef inline double _softplus(double x) noexcept nogil:
    if x > 0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline double _algebraic(double x, double p) noexcept nogil:
    cdef double ax = fabs(x)
    cdef double r
    if ax > 1.0:
        r = 1.0 / pow(1.0 + pow(ax, -p), 1.0 / p)
        if x < 0:
            r = -r
    else:
        r = x / pow(1.0 + pow(ax, p), 1.0 / p)
    return 0.5 + 0.5 * r


cdef inline double act(int code, const double* p, double x) noexcept nogil:
    cdef int q
    cdef double e, n
    if code == 0:
        if x < 0:
            return 0.0
        q = <int>p[0]
        if q == 0:
            return 1.0
        return pow(x, q)
    elif code == 1:
        return _expit(x)
    elif code == 2:
        return tanh(x)
    elif code == 3:
        return _softplus(x)
    elif code == 4:
        return atan(x)
    elif code == 5:
        return p[1] + (p[0] - p[1]) * _expit(x)
    elif code == 6:
        return p[1] + (p[0] - p[1]) * _algebraic(x, p[2])
    elif code == 7:
        if x > 0:
            return x
        return p[0] * expm1(x)
    elif code == 8:
        return x * 0.5 * erfc(-x * SQRT1_2)
    elif code == 9:
        return x * _expit(x)
    elif code == 10:
        # tanh(softplus(x)) = n / (n + 2) with n = e^x (e^x + 2)
        if x > 20.0:
            return x
        e = exp(x)
        n = e * (e + 2.0)
        return x * n / (n + 2.0)
    elif code == 11:
        return exp(-x * x)
    return 0.0


cdef inline double nested(int code, const double* p, const double* coefs,
                          const double* offsets, Py_ssize_t nterms,
                          const double* x, Py_ssize_t n, double inv_theta,
                          const double* shift) noexcept nogil:
    cdef double h = 1.0
    cdef double v, xd
    cdef Py_ssize_t d, i
    for d in range(n):
        if shift != NULL:
            xd = (x[d] - shift[d]) * inv_theta
        else:
            xd = x[d]
        if h == 0.0 and nterms > 1:
            return 0.0
        v = 0.0
        for i in range(nterms):
            v += coefs[i] * act(code, p, xd + offsets[i] * h)
        h = v
    return h


def composed_eval(int code, const double[::1] params, const double[::1] coefs,
                  const double[::1] offsets, const double[:, ::1] X):
    """Nested composition at every row of ``X`` (shape ``(M, n)``)."""
    cdef Py_ssize_t M = X.shape[0]
    cdef Py_ssize_t n = X.shape[1]
    cdef Py_ssize_t m
    out = np.empty(M, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for m in range(M):
            o[m] = nested(code, &params[0], &coefs[0], &offsets[0],
                          coefs.shape[0], &X[m, 0], n, 1.0, NULL)
    return out


def kernel_sum(int code, const double[::1] params, const double[::1] coefs,
               const double[::1] offsets, const double[:, ::1] X, const double[:, ::1] C,
               const double[::1] weights, double inv_theta, const double[::1] radius):
    """``sum_j weights[j] * nested((X[m] - C[j]) * inv_theta)`` for every row.

    Terms with any scaled coordinate beyond ``radius`` are skipped, which is
    exact for kernels supported inside that box.
    """
    cdef Py_ssize_t M = X.shape[0]
    cdef Py_ssize_t n = X.shape[1]
    cdef Py_ssize_t N = C.shape[0]
    cdef Py_ssize_t m, j, d
    cdef double acc, comp, y, t, u
    cdef bint skip
    out = np.empty(M, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for m in range(M):
            acc = 0.0
            comp = 0.0
            for j in range(N):
                if weights[j] == 0.0:
                    continue
                skip = False
                for d in range(n):
                    u = fabs(X[m, d] - C[j, d]) * inv_theta
                    if u > radius[d]:
                        skip = True
                        break
                if skip:
                    continue
                # Kahan summation keeps the result independent of N's magnitude
                y = weights[j] * nested(code, &params[0], &coefs[0], &offsets[0],
                                        coefs.shape[0], &X[m, 0], n, inv_theta,
                                        &C[j, 0]) - comp
                t = acc + y
                comp = (t - acc) - y
                acc = t
            o[m] = acc
    return out
