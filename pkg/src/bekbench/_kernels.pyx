# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled cyclic Jacobi kernel for complex Hermitian matrices.

Mirrors _kernels_py.jacobi_sweeps operation for operation; both backends must
produce the same floating point stream on identical input.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def jacobi_sweeps(double complex[:, ::1] a, double complex[:, ::1] v,
                  double off_tol, int max_sweeps):
    """In-place Jacobi diagonalization; returns sweeps used or -1."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q, i, sweep
    cdef double off2, m, app, aqq, tau, t, c, s
    cdef double complex apq, f, fc, xp, xq
    cdef double skip

    if n <= 1:
        return 0
    skip = off_tol / (4.0 * n * n)
    for sweep in range(max_sweeps):
        off2 = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off2 += (a[p, q].real * a[p, q].real
                             + a[p, q].imag * a[p, q].imag)
        if sqrt(off2) <= off_tol:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                m = sqrt(apq.real * apq.real + apq.imag * apq.imag)
                if m <= skip:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * m)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                f = apq / m
                fc = f.conjugate()
                for i in range(n):
                    xp = a[i, p]
                    xq = a[i, q]
                    a[i, p] = c * xp - (s * fc) * xq
                    a[i, q] = s * xp + (c * fc) * xq
                for i in range(n):
                    xp = a[p, i]
                    xq = a[q, i]
                    a[p, i] = c * xp - (s * f) * xq
                    a[q, i] = s * xp + (c * f) * xq
                a[p, p] = app - t * m
                a[q, q] = aqq + t * m
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(n):
                    xp = v[i, p]
                    xq = v[i, q]
                    v[i, p] = c * xp - (s * fc) * xq
                    v[i, q] = s * xp + (c * fc) * xq
    off2 = 0.0
    for p in range(n):
        for q in range(n):
            if p != q:
                off2 += (a[p, q].real * a[p, q].real
                         + a[p, q].imag * a[p, q].imag)
    if sqrt(off2) <= off_tol:
        return max_sweeps
    return -1
