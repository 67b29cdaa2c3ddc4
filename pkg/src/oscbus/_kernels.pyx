# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the closed-form propagator.

Semantics match ``_kernels_py`` exactly; see that module for documentation.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, sqrt, exp, fabs, log, lgamma

cnp.import_array()

cdef double ZERO_RATE = 1e-12
cdef double SERIES_RATE = 1e-3


cdef inline double _area_kernel(double x) nogil:
    cdef double ax = fabs(x)
    cdef double x2
    if ax < ZERO_RATE:
        return 0.0
    if ax < SERIES_RATE:
        x2 = x * x
        return x * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 / 5040.0))
    return (x - sin(x)) / (x * x)


def accumulate_batch(eig, coef):
    cdef double[:, :, ::1] e = np.ascontiguousarray(eig, dtype=np.float64)
    cdef double[:, ::1] k = np.ascontiguousarray(coef, dtype=np.float64)
    cdef Py_ssize_t ntup = e.shape[0]
    cdef Py_ssize_t nseg = k.shape[0]
    out_arr = np.zeros((ntup, 5))
    verts_arr = np.zeros((ntup, nseg + 1, 2))
    cdef double[:, ::1] out = out_arr
    cdef double[:, :, ::1] verts = verts_arr
    cdef Py_ssize_t i, j
    cdef double R, V, W, S, drift
    cdef double al, be, x, h, sinc, mid, ic, is_, f, dV, dW, j_cs, j_sc, T
    with nogil:
        for i in range(ntup):
            R = 0.0
            V = 0.0
            W = 0.0
            S = 0.0
            drift = 0.0
            for j in range(nseg):
                T = k[j, 4]
                al = k[j, 0] * e[i, j, 0]
                be = k[j, 1] * e[i, j, 1]
                x = k[j, 2] * e[i, j, 2] * T
                h = 0.5 * x
                if fabs(x) < ZERO_RATE:
                    sinc = 1.0
                else:
                    sinc = sin(h) / h
                mid = R + h
                ic = T * cos(mid) * sinc
                is_ = T * sin(mid) * sinc
                f = T * T * _area_kernel(x)
                dV = al * ic - be * is_
                dW = be * ic + al * is_
                j_cs = 0.5 * (ic * is_ + f)
                j_sc = 0.5 * (ic * is_ - f)
                S -= V * dW + (0.5 * al * be * ic * ic + al * al * j_cs - be * be * j_sc - 0.5 * al * be * is_ * is_)
                V += dV
                W += dW
                R += x
                drift += k[j, 3] * e[i, j, 3] * T
                verts[i, j + 1, 0] = W
                verts[i, j + 1, 1] = V
            out[i, 0] = R
            out[i, 1] = V
            out[i, 2] = W
            out[i, 3] = S
            out[i, 4] = drift
    return out_arr, verts_arr


def displacement_matrix(alpha, Py_ssize_t dim):
    cdef double complex a = complex(alpha)
    cdef double x = a.real * a.real + a.imag * a.imag
    cdef double complex phase = 1.0
    if x > 0:
        phase = a / sqrt(x)
    out_arr = np.zeros((dim, dim), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t k, n
    cdef double f, fm, fn, scale
    cdef double complex below, above
    cdef double complex neg_conj = -phase.conjugate()
    with nogil:
        below = 1.0
        above = 1.0
        for k in range(dim):
            if x == 0.0:
                f = 1.0 if k == 0 else 0.0
            else:
                f = exp(0.5 * k * log(x) - 0.5 * x - 0.5 * lgamma(k + 1.0))
            fm = 0.0
            for n in range(dim - k):
                out[n + k, n] = f * below
                if k:
                    out[n, n + k] = f * above
                scale = sqrt(<double>((n + 1) * (n + k + 1)))
                fn = ((2 * n + k + 1 - x) * f - sqrt(<double>(n * (n + k))) * fm) / scale
                fm = f
                f = fn
            below = below * phase
            above = above * neg_conj
    return out_arr
