# Compiled counterparts of the reference kernels.  Same array conventions:
# two ghost layers per side, interior point j at padded index j + 2, leapfrog
# buffers advanced in place with the caller tracking parity.

import numpy as np

cimport cython
from libc.math cimport fabs, fmax

DEF BLOWUP = 1e300


cdef inline void _ghosts_1d(double[::1] u) noexcept nogil:
    cdef Py_ssize_t n = u.shape[0] - 4
    u[0] = u[n]
    u[1] = u[n + 1]
    u[n + 2] = u[2]
    u[n + 3] = u[3]


cdef inline void _ghosts_2d(double[:, ::1] u, bint periodic0, bint periodic1) noexcept nogil:
    cdef Py_ssize_t n, j
    if periodic0:
        n = u.shape[0] - 4
        for j in range(u.shape[1]):
            u[0, j] = u[n, j]
            u[1, j] = u[n + 1, j]
            u[n + 2, j] = u[2, j]
            u[n + 3, j] = u[3, j]
    if periodic1:
        n = u.shape[1] - 4
        for j in range(u.shape[0]):
            u[j, 0] = u[j, n]
            u[j, 1] = u[j, n + 1]
            u[j, n + 2] = u[j, 2]
            u[j, n + 3] = u[j, 3]


cdef inline double _stencil_1d(double[::1] u, double[::1] a_int, double[::1] a_half,
                               double c1, double c2, Py_ssize_t p) noexcept nogil:
    return c1 * (a_half[p] * (u[p + 1] - u[p]) - a_half[p - 1] * (u[p] - u[p - 1])) \
        - c2 * (a_int[p + 1] * (u[p + 2] - u[p]) - a_int[p - 1] * (u[p] - u[p - 2]))


def refresh_ghosts_1d(double[::1] u, bint periodic):
    if periodic:
        with nogil:
            _ghosts_1d(u)


def refresh_ghosts_2d(double[:, ::1] u, bint periodic0, bint periodic1):
    with nogil:
        _ghosts_2d(u, periodic0, periodic1)


def apply_hetero_1d(double[::1] u, double[::1] a_int, double[::1] a_half,
                    double dx, double[::1] out):
    cdef Py_ssize_t n = out.shape[0]
    cdef double c1 = 4.0 / (3.0 * dx * dx)
    cdef double c2 = 1.0 / (12.0 * dx * dx)
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            out[i] = _stencil_1d(u, a_int, a_half, c1, c2, i + 2)


def apply_hetero_2d(double[:, ::1] u, double[:, ::1] a0_int, double[:, ::1] a0_half,
                    double[:, ::1] a1_int, double[:, ::1] a1_half,
                    double dx0, double dx1, double[:, ::1] out):
    cdef Py_ssize_t n0 = out.shape[0], n1 = out.shape[1]
    cdef double c10 = 4.0 / (3.0 * dx0 * dx0)
    cdef double c20 = 1.0 / (12.0 * dx0 * dx0)
    cdef double c11 = 4.0 / (3.0 * dx1 * dx1)
    cdef double c21 = 1.0 / (12.0 * dx1 * dx1)
    cdef Py_ssize_t i, j, p, q
    cdef double l0, l1
    with nogil:
        for i in range(n0):
            p = i + 2
            for j in range(n1):
                q = j + 2
                l0 = c10 * (a0_half[p, j] * (u[p + 1, q] - u[p, q])
                            - a0_half[p - 1, j] * (u[p, q] - u[p - 1, q])) \
                    - c20 * (a0_int[p + 1, j] * (u[p + 2, q] - u[p, q])
                             - a0_int[p - 1, j] * (u[p, q] - u[p - 2, q]))
                l1 = c11 * (a1_half[i, q] * (u[p, q + 1] - u[p, q])
                            - a1_half[i, q - 1] * (u[p, q] - u[p, q - 1])) \
                    - c21 * (a1_int[i, q + 1] * (u[p, q + 2] - u[p, q])
                             - a1_int[i, q - 1] * (u[p, q] - u[p, q - 2]))
                out[i, j] = l0 + l1


def advance_hetero_1d(double[::1] u_prev, double[::1] u_curr,
                      double[::1] a_int, double[::1] a_half,
                      double dx, double dt, Py_ssize_t n_steps, bint periodic):
    cdef Py_ssize_t n = u_curr.shape[0] - 4
    cdef double c1 = 4.0 / (3.0 * dx * dx)
    cdef double c2 = 1.0 / (12.0 * dx * dx)
    cdef double dt2 = dt * dt
    cdef double[::1] a = u_prev, b = u_curr, tmp
    cdef Py_ssize_t s, i, p
    cdef double v, m
    for s in range(n_steps):
        m = 0.0
        with nogil:
            if periodic:
                _ghosts_1d(b)
            for i in range(n):
                p = i + 2
                v = 2.0 * b[p] - a[p] + dt2 * _stencil_1d(b, a_int, a_half, c1, c2, p)
                a[p] = v
                m = fmax(m, fabs(v))
        tmp = a
        a = b
        b = tmp
        if not m < BLOWUP:
            return s + 1, False
    return n_steps, True


def advance_hetero_2d(double[:, ::1] u_prev, double[:, ::1] u_curr,
                      double[:, ::1] a0_int, double[:, ::1] a0_half,
                      double[:, ::1] a1_int, double[:, ::1] a1_half,
                      double dx0, double dx1, double dt, Py_ssize_t n_steps,
                      bint periodic0, bint periodic1):
    cdef Py_ssize_t n0 = u_curr.shape[0] - 4, n1 = u_curr.shape[1] - 4
    cdef double c10 = 4.0 / (3.0 * dx0 * dx0)
    cdef double c20 = 1.0 / (12.0 * dx0 * dx0)
    cdef double c11 = 4.0 / (3.0 * dx1 * dx1)
    cdef double c21 = 1.0 / (12.0 * dx1 * dx1)
    cdef double dt2 = dt * dt
    cdef double[:, ::1] a = u_prev, b = u_curr, tmp
    cdef Py_ssize_t s, i, j, p, q
    cdef double v, m, l0, l1
    for s in range(n_steps):
        m = 0.0
        with nogil:
            _ghosts_2d(b, periodic0, periodic1)
            for i in range(n0):
                p = i + 2
                for j in range(n1):
                    q = j + 2
                    l0 = c10 * (a0_half[p, j] * (b[p + 1, q] - b[p, q])
                                - a0_half[p - 1, j] * (b[p, q] - b[p - 1, q])) \
                        - c20 * (a0_int[p + 1, j] * (b[p + 2, q] - b[p, q])
                                 - a0_int[p - 1, j] * (b[p, q] - b[p - 2, q]))
                    l1 = c11 * (a1_half[i, q] * (b[p, q + 1] - b[p, q])
                                - a1_half[i, q - 1] * (b[p, q] - b[p, q - 1])) \
                        - c21 * (a1_int[i, q + 1] * (b[p, q + 2] - b[p, q])
                                 - a1_int[i, q - 1] * (b[p, q] - b[p, q - 2]))
                    v = 2.0 * b[p, q] - a[p, q] + dt2 * (l0 + l1)
                    a[p, q] = v
                    m = fmax(m, fabs(v))
        tmp = a
        a = b
        b = tmp
        if not m < BLOWUP:
            return s + 1, False
    return n_steps, True
