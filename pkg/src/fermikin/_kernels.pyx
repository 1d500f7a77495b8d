# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled collision sums.  Same contracts as ``_kernels_py``."""

from cython.parallel cimport prange
from libc.math cimport exp, log, sqrt, M_PI

import numpy as np

cdef double TINY = 1e-300
cdef double INV_SQRT_2PI = 1.0 / sqrt(2.0 * M_PI)


cdef inline double _delta(double x, double eps, int kind) noexcept nogil:
    if kind == 0:
        return exp(-0.5 * (x / eps) * (x / eps)) * INV_SQRT_2PI / eps
    return eps / (M_PI * (x * x + eps * eps))


cdef inline double _pv(double x, double eps) noexcept nogil:
    return x / (x * x + eps * eps)


cdef inline double _logratio(double x, double y) noexcept nogil:
    if x < TINY:
        x = TINY
    if y < TINY:
        y = TINY
    return log(x) - log(y)


def scalar_collision(const double[::1] W, const double[::1] omega, const double[::1] vhat,
                     const long[:, ::1] add, const long[:, ::1] sub, double eps,
                     int kind=0, int threads=1):
    cdef Py_ssize_t N = W.shape[0]
    cdef Py_ssize_t k0, k1, k2, k3
    cdef double acc, dw, kern, w0, wt0, a, b
    out = np.empty(N)
    cdef double[::1] res = out
    for k0 in prange(N, nogil=True, num_threads=threads, schedule="static"):
        acc = 0.0
        w0 = W[k0]
        wt0 = 1.0 - w0
        for k1 in range(N):
            for k2 in range(N):
                k3 = add[k0, sub[k1, k2]]
                dw = omega[k0] + omega[k1] - omega[k2] - omega[k3]
                a = vhat[sub[k1, k2]] - vhat[sub[k2, k0]]
                kern = a * a
                if kern == 0.0:
                    continue
                b = (wt0 * (1.0 - W[k1]) * W[k2] * W[k3]
                     - w0 * W[k1] * (1.0 - W[k2]) * (1.0 - W[k3]))
                acc = acc + kern * _delta(dw, eps, kind) * b
        res[k0] = acc
    return out


def scalar_entropy_production(const double[::1] W, const double[::1] omega,
                              const double[::1] vhat, const long[:, ::1] add,
                              const long[:, ::1] sub, double eps, int kind=0, int threads=1):
    cdef Py_ssize_t N = W.shape[0]
    cdef Py_ssize_t k0, k1, k2, k3
    cdef double dw, kern, x, y, a, acc
    # per-row partial sums keep the result independent of the thread count
    rows_out = np.zeros(N)
    cdef double[::1] rows = rows_out
    for k0 in prange(N, nogil=True, num_threads=threads, schedule="static"):
        acc = 0.0
        for k1 in range(N):
            for k2 in range(N):
                k3 = add[k0, sub[k1, k2]]
                a = vhat[sub[k1, k2]] - vhat[sub[k2, k0]]
                kern = a * a
                if kern == 0.0:
                    continue
                dw = omega[k0] + omega[k1] - omega[k2] - omega[k3]
                x = (1.0 - W[k0]) * (1.0 - W[k1]) * W[k2] * W[k3]
                y = W[k0] * W[k1] * (1.0 - W[k2]) * (1.0 - W[k3])
                acc = acc + kern * _delta(dw, eps, kind) * (x - y) * _logratio(x, y)
        rows[k0] = acc
    return float(np.sum(rows_out))


cdef inline void _mul(const double complex* a, const double complex* b, double complex* c) noexcept nogil:
    c[0] = a[0] * b[0] + a[1] * b[2]
    c[1] = a[0] * b[1] + a[1] * b[3]
    c[2] = a[2] * b[0] + a[3] * b[2]
    c[3] = a[2] * b[1] + a[3] * b[3]


cdef inline void _mul_adj(const double complex* a, const double complex* b, double complex* c) noexcept nogil:
    # c = adj(a @ b) where adj(m) = trace(m) * 1 - m
    cdef double complex m0, m1, m2, m3
    m0 = a[0] * b[0] + a[1] * b[2]
    m1 = a[0] * b[1] + a[1] * b[3]
    m2 = a[2] * b[0] + a[3] * b[2]
    m3 = a[2] * b[1] + a[3] * b[3]
    c[0] = m3
    c[1] = -m1
    c[2] = -m2
    c[3] = m0


cdef void _hubbard_row(Py_ssize_t k0, const double complex[:, ::1] W, const double complex[:, ::1] Wt,
                       const double[::1] omega, const long[:, ::1] add, const long[:, ::1] sub,
                       double eps_delta, double eps_pv, int kind, bint with_pv,
                       double complex[:, ::1] A, double complex[:, ::1] B,
                       double complex[:, ::1] P) noexcept nogil:
    # scratch lives on this call's stack, so rows can run on different threads
    cdef Py_ssize_t N = W.shape[0]
    cdef Py_ssize_t k1, k2, k3
    cdef int i
    cdef double dw, dl, pv
    cdef double complex t[4]
    cdef double complex x[4]
    cdef double complex y[4]
    cdef double complex sa[4]
    cdef double complex sb[4]
    cdef double complex sp[4]
    for i in range(4):
        sa[i] = 0
        sb[i] = 0
        sp[i] = 0
    for k1 in range(N):
        for k2 in range(N):
            k3 = add[k0, sub[k1, k2]]
            dw = omega[k0] + omega[k1] - omega[k2] - omega[k3]
            _mul_adj(&Wt[k1, 0], &W[k3, 0], t)
            _mul(&W[k2, 0], t, x)
            _mul_adj(&W[k1, 0], &Wt[k3, 0], t)
            _mul(&Wt[k2, 0], t, y)
            dl = _delta(dw, eps_delta, kind)
            for i in range(4):
                sa[i] = sa[i] + dl * x[i]
                sb[i] = sb[i] + dl * y[i]
            if with_pv:
                pv = _pv(dw, eps_pv)
                for i in range(4):
                    sp[i] = sp[i] + pv * (x[i] + y[i])
    for i in range(4):
        A[k0, i] = sa[i]
        B[k0, i] = sb[i]
        P[k0, i] = sp[i]


def hubbard_sums(W_in, const double[::1] omega, const long[:, ::1] add,
                 const long[:, ::1] sub, double eps_delta, double eps_pv,
                 int kind=0, bint with_pv=True, int threads=1):
    Wc = np.ascontiguousarray(W_in, dtype=np.complex128).reshape(-1, 4)
    Wtc = np.ascontiguousarray(np.eye(2, dtype=np.complex128).reshape(4) - Wc)
    cdef const double complex[:, ::1] W = Wc
    cdef const double complex[:, ::1] Wt = Wtc
    cdef Py_ssize_t N = W.shape[0]
    A_out = np.zeros((N, 4), dtype=np.complex128)
    B_out = np.zeros((N, 4), dtype=np.complex128)
    P_out = np.zeros((N, 4), dtype=np.complex128)
    cdef double complex[:, ::1] A = A_out
    cdef double complex[:, ::1] B = B_out
    cdef double complex[:, ::1] P = P_out
    cdef Py_ssize_t k0
    for k0 in prange(N, nogil=True, num_threads=threads, schedule="static"):
        _hubbard_row(k0, W, Wt, omega, add, sub, eps_delta, eps_pv, kind, with_pv, A, B, P)
    return (A_out.reshape(N, 2, 2), B_out.reshape(N, 2, 2), P_out.reshape(N, 2, 2))


def hubbard_entropy_production(const double[:, ::1] evals, evecs_in,
                               const double[::1] omega, const long[:, ::1] add,
                               const long[:, ::1] sub, double eps, int kind=0, int threads=1):
    ev = np.ascontiguousarray(evecs_in, dtype=np.complex128)
    ov = np.ascontiguousarray(np.einsum("iza,jzb->ijab", ev.conj(), ev))
    cdef const double complex[:, :, :, ::1] O = ov
    cdef Py_ssize_t N = evals.shape[0]
    cdef Py_ssize_t k1, k2, k3, k4
    cdef int a1, a2, a3, a4
    cdef double dl, x, y, g, acc
    cdef double complex amp
    rows_out = np.zeros(N)
    cdef double[::1] rows = rows_out
    for k1 in prange(N, nogil=True, num_threads=threads, schedule="static"):
        acc = 0.0
        for k2 in range(N):
            for k3 in range(N):
                k4 = add[k1, sub[k2, k3]]
                dl = _delta(omega[k1] + omega[k2] - omega[k3] - omega[k4], eps, kind)
                for a1 in range(2):
                    for a2 in range(2):
                        for a3 in range(2):
                            for a4 in range(2):
                                x = ((1.0 - evals[k1, a1]) * (1.0 - evals[k2, a2])
                                     * evals[k3, a3] * evals[k4, a4])
                                y = (evals[k1, a1] * evals[k2, a2]
                                     * (1.0 - evals[k3, a3]) * (1.0 - evals[k4, a4]))
                                g = (x - y) * _logratio(x, y)
                                amp = (O[k1, k3, a1, a3] * O[k2, k4, a2, a4]
                                       - O[k1, k4, a1, a4] * O[k2, k3, a2, a3])
                                acc = acc + dl * g * (amp.real * amp.real + amp.imag * amp.imag)
        rows[k1] = acc
    return float(np.sum(rows_out))
