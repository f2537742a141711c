# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementation of the hot kernels (see _core_py for the contract).

Same stencils and step formulas as the fallback; the pentadiagonal systems
are solved with LAPACK zgbsv (partial pivoting) through SciPy's exported
BLAS/LAPACK Cython bindings.
"""

import numpy as np

from libc.math cimport exp
from scipy.linalg.cython_lapack cimport zgbsv

BACKEND = "compiled"

ctypedef double complex zcomplex


cdef inline void _bilinear_core(double[::1] k, double a, double b,
                                zcomplex[::1] u, zcomplex[::1] v,
                                zcomplex[::1] out) noexcept nogil:
    cdef Py_ssize_t n = k.shape[0]
    cdef Py_ssize_t i
    cdef zcomplex acc
    for i in range(n):
        acc = 0
        if i <= n - 3:
            acc = acc + a * k[i + 1] * v[i + 2] * u[i + 1].conjugate()
        if 1 <= i <= n - 2:
            acc = acc + b * k[i] * v[i + 1] * u[i - 1].conjugate()
        if i >= 2:
            acc = acc + a * k[i - 1] * u[i - 1] * v[i - 2]
            acc = acc + b * k[i - 1] * v[i - 1] * u[i - 2]
        out[i] = -1j * acc


cdef inline void _mixed_adjoint_core(double[::1] k, double a, double b,
                                     zcomplex[::1] u, zcomplex[::1] w,
                                     zcomplex[::1] out) noexcept nogil:
    cdef Py_ssize_t n = k.shape[0]
    cdef Py_ssize_t i
    cdef zcomplex acc
    for i in range(n):
        acc = 0
        if 1 <= i <= n - 2:
            acc = acc - 1j * a * k[i] * u[i + 1] * w[i - 1].conjugate()
            acc = acc + 1j * a * k[i] * u[i - 1].conjugate() * w[i + 1]
        if i <= n - 3:
            acc = acc - 1j * b * k[i + 1] * u[i + 2] * w[i + 1].conjugate()
            acc = acc + 1j * b * k[i + 1] * u[i + 1].conjugate() * w[i + 2]
        out[i] = acc


cdef inline void _fill_bands(double[::1] k, double a, double b, double nu,
                             double dt, zcomplex[::1] u, double sign,
                             zcomplex[:, ::1] ab) noexcept nogil:
    # ab has shape (n, 7), C order == LAPACK band storage (ldab=7) in Fortran
    # order; row offsets: 2 super2, 3 super1, 4 diag, 5 sub1, 6 sub2.
    cdef Py_ssize_t n = k.shape[0]
    cdef Py_ssize_t j
    cdef double s = sign * dt
    for j in range(n):
        ab[j, 0] = 0
        ab[j, 1] = 0
        ab[j, 2] = 0
        ab[j, 3] = 0
        ab[j, 4] = 1.0 + dt * nu * k[j] * k[j]
        ab[j, 5] = 0
        ab[j, 6] = 0
    for j in range(2, n):
        ab[j, 2] = s * (-1j * a) * k[j - 1] * u[j - 1].conjugate()
        ab[j, 3] = s * (-1j * b) * k[j - 1] * u[j - 2].conjugate()
    for j in range(1, n - 1):
        ab[j, 5] = s * (-1j * b) * k[j] * u[j - 1]
    for j in range(n - 2):
        ab[j, 6] = s * (-1j * a) * k[j + 1] * u[j + 1]


cdef inline int _solve_banded(zcomplex[:, ::1] ab, zcomplex[::1] x,
                              int[::1] ipiv) noexcept nogil:
    cdef int n = <int> ab.shape[0]
    cdef int kl = 2, ku = 2, nrhs = 1, ldab = 7, info = 0
    zgbsv(&n, &kl, &ku, &nrhs, &ab[0, 0], &ldab, &ipiv[0], &x[0], &n, &info)
    return info


cdef inline bint _finite(zcomplex[::1] x) noexcept nogil:
    cdef Py_ssize_t i
    cdef double re, im
    for i in range(x.shape[0]):
        re = x[i].real
        im = x[i].imag
        if not (re == re and -1e308 < re < 1e308 and im == im and -1e308 < im < 1e308):
            return False
    return True


def bilinear(k, a, b, u, v):
    k = np.ascontiguousarray(k, np.float64)
    u = np.ascontiguousarray(u, np.complex128)
    v = np.ascontiguousarray(v, np.complex128)
    out = np.empty_like(u)
    _bilinear_core(k, a, b, u, v, out)
    return out


def mixed_adjoint(k, a, b, base, w):
    k = np.ascontiguousarray(k, np.float64)
    base = np.ascontiguousarray(base, np.complex128)
    w = np.ascontiguousarray(w, np.complex128)
    out = np.empty_like(base)
    _mixed_adjoint_core(k, a, b, base, w, out)
    return out


cdef int _si_step(double[::1] k, double a, double b, double nu, double dt,
                  zcomplex[::1] u, zcomplex[::1] r, zcomplex[::1] out,
                  zcomplex[:, ::1] ab, int[::1] ipiv) noexcept nogil:
    cdef Py_ssize_t i, n = k.shape[0]
    for i in range(n):
        out[i] = u[i] + dt * r[i]
    _fill_bands(k, a, b, nu, dt, u, 1.0, ab)
    return _solve_banded(ab, out, ipiv)


def step_si_euler(k, a, b, nu, dt, u, r):
    k = np.ascontiguousarray(k, np.float64)
    u = np.ascontiguousarray(u, np.complex128)
    r = np.array(np.broadcast_to(r, u.shape), np.complex128)  # force a writable copy
    cdef Py_ssize_t n = len(k)
    out = np.empty(n, np.complex128)
    ab = np.empty((n, 7), np.complex128)
    ipiv = np.empty(n, np.intc)
    _si_step(k, a, b, nu, dt, u, r, out, ab, ipiv)
    return out


def run_si_euler(k, a, b, nu, dt, u0, rhs):
    k = np.ascontiguousarray(k, np.float64)
    u0 = np.ascontiguousarray(u0, np.complex128)
    rhs = np.ascontiguousarray(rhs, np.complex128)
    cdef Py_ssize_t m = rhs.shape[0], n = k.shape[0]
    states = np.empty((m + 1, n), np.complex128)
    states[0] = u0
    ab = np.empty((n, 7), np.complex128)
    ipiv = np.empty(n, np.intc)
    cdef zcomplex[:, ::1] sv = states
    cdef zcomplex[:, ::1] rv = rhs
    cdef zcomplex[:, ::1] abv = ab
    cdef int[::1] pv = ipiv
    cdef double[::1] kv = k
    cdef Py_ssize_t j
    cdef int info
    for j in range(m):
        info = _si_step(kv, a, b, nu, dt, sv[j], rv[j], sv[j + 1], abv, pv)
        if info != 0 or not _finite(sv[j + 1]):
            return states, j
    return states, -1


def run_si_euler_tangent(k, a, b, nu, dt, states, h):
    k = np.ascontiguousarray(k, np.float64)
    states = np.ascontiguousarray(states, np.complex128)
    h = np.ascontiguousarray(h, np.complex128)
    cdef Py_ssize_t m = h.shape[0], n = k.shape[0]
    w = np.zeros((m + 1, n), np.complex128)
    ab = np.empty((n, 7), np.complex128)
    ipiv = np.empty(n, np.intc)
    scratch = np.empty(n, np.complex128)
    cdef zcomplex[:, ::1] wv = w
    cdef zcomplex[:, ::1] sv = states
    cdef zcomplex[:, ::1] hv = h
    cdef zcomplex[:, ::1] abv = ab
    cdef zcomplex[::1] bw = scratch
    cdef int[::1] pv = ipiv
    cdef double[::1] kv = k
    cdef double av = a, bv2 = b, nuv = nu, dtv = dt
    cdef Py_ssize_t j, i
    with nogil:
        for j in range(m):
            _bilinear_core(kv, av, bv2, wv[j], sv[j + 1], bw)
            for i in range(n):
                wv[j + 1, i] = wv[j, i] - dtv * bw[i] + dtv * hv[j, i]
            _fill_bands(kv, av, bv2, nuv, dtv, sv[j], 1.0, abv)
            _solve_banded(abv, wv[j + 1], pv)
    return w


def run_si_euler_adjoint(k, a, b, nu, dt, states, source, terminal):
    k = np.ascontiguousarray(k, np.float64)
    states = np.ascontiguousarray(states, np.complex128)
    source = np.ascontiguousarray(source, np.complex128)
    terminal = np.ascontiguousarray(terminal, np.complex128)
    cdef Py_ssize_t m = source.shape[0], n = k.shape[0]
    wt = np.empty((m, n), np.complex128)
    wt[m - 1] = terminal
    ab = np.empty((n, 7), np.complex128)
    ipiv = np.empty(n, np.intc)
    scratch = np.empty(n, np.complex128)
    cdef zcomplex[:, ::1] wv = wt
    cdef zcomplex[:, ::1] sv = states
    cdef zcomplex[:, ::1] qv = source
    cdef zcomplex[:, ::1] abv = ab
    cdef zcomplex[::1] qa = scratch
    cdef int[::1] pv = ipiv
    cdef double[::1] kv = k
    cdef double av = a, bv2 = b, nuv = nu, dtv = dt
    cdef Py_ssize_t j, i
    with nogil:
        _fill_bands(kv, av, bv2, nuv, dtv, sv[m - 1], -1.0, abv)
        _solve_banded(abv, wv[m - 1], pv)
        for j in range(m - 2, -1, -1):
            _mixed_adjoint_core(kv, av, bv2, sv[j + 2], wv[j + 1], qa)
            for i in range(n):
                wv[j, i] = wv[j + 1, i] - dtv * qa[i] + dtv * qv[j + 1, i]
            _fill_bands(kv, av, bv2, nuv, dtv, sv[j], -1.0, abv)
            _solve_banded(abv, wv[j], pv)
    return wt


cdef void _ifrk4_step(double[::1] k, double a, double b, double nu, double dt,
                      zcomplex[::1] u, zcomplex[::1] r, zcomplex[::1] out,
                      zcomplex[:, ::1] scr) noexcept nogil:
    # scr rows: 0 a-stage value, 1 stage state, 2 accumulator
    cdef Py_ssize_t i, n = k.shape[0]
    cdef double e1, e2
    cdef zcomplex[::1] stage_val = scr[0]
    cdef zcomplex[::1] stage_state = scr[1]
    cdef zcomplex[::1] acc = scr[2]

    _bilinear_core(k, a, b, u, u, stage_val)                    # a1
    for i in range(n):
        stage_val[i] = -stage_val[i] + r[i]
        e1 = exp(-nu * k[i] * k[i] * dt * 0.5)
        e2 = e1 * e1
        acc[i] = e2 * u[i] + (dt / 6.0) * e2 * stage_val[i]
        stage_state[i] = e1 * (u[i] + (dt / 2.0) * stage_val[i])
    _bilinear_core(k, a, b, stage_state, stage_state, stage_val)  # a2
    for i in range(n):
        stage_val[i] = -stage_val[i] + r[i]
        e1 = exp(-nu * k[i] * k[i] * dt * 0.5)
        acc[i] = acc[i] + (dt / 3.0) * e1 * stage_val[i]
        stage_state[i] = e1 * u[i] + (dt / 2.0) * stage_val[i]
    _bilinear_core(k, a, b, stage_state, stage_state, stage_val)  # a3
    for i in range(n):
        stage_val[i] = -stage_val[i] + r[i]
        e1 = exp(-nu * k[i] * k[i] * dt * 0.5)
        e2 = e1 * e1
        acc[i] = acc[i] + (dt / 3.0) * e1 * stage_val[i]
        stage_state[i] = e2 * u[i] + dt * e1 * stage_val[i]
    _bilinear_core(k, a, b, stage_state, stage_state, stage_val)  # a4
    for i in range(n):
        stage_val[i] = -stage_val[i] + r[i]
        out[i] = acc[i] + (dt / 6.0) * stage_val[i]


def step_ifrk4(k, a, b, nu, dt, u, r):
    k = np.ascontiguousarray(k, np.float64)
    u = np.ascontiguousarray(u, np.complex128)
    r = np.array(np.broadcast_to(r, u.shape), np.complex128)  # force a writable copy
    cdef Py_ssize_t n = len(k)
    out = np.empty(n, np.complex128)
    scr = np.empty((3, n), np.complex128)
    _ifrk4_step(k, a, b, nu, dt, u, r, out, scr)
    return out


def run_ifrk4(k, a, b, nu, dt, u0, rhs):
    k = np.ascontiguousarray(k, np.float64)
    u0 = np.ascontiguousarray(u0, np.complex128)
    rhs = np.ascontiguousarray(rhs, np.complex128)
    cdef Py_ssize_t m = rhs.shape[0], n = k.shape[0]
    states = np.empty((m + 1, n), np.complex128)
    states[0] = u0
    scr = np.empty((3, n), np.complex128)
    cdef zcomplex[:, ::1] sv = states
    cdef zcomplex[:, ::1] rv = rhs
    cdef zcomplex[:, ::1] scrv = scr
    cdef double[::1] kv = k
    cdef double av = a, bv2 = b, nuv = nu, dtv = dt
    cdef Py_ssize_t j
    with nogil:
        for j in range(m):
            _ifrk4_step(kv, av, bv2, nuv, dtv, sv[j], rv[j], sv[j + 1], scrv)
            if not _finite(sv[j + 1]):
                with gil:
                    return states, j
    return states, -1
