"""NumPy/SciPy fallback implementation of the hot kernels.

All functions take raw arrays: ``k`` is the wavenumber ladder (float64,
length N), ``a``/``b`` the interaction coefficients, states are complex128
arrays.  Out-of-range shell amplitudes are treated as zero, which keeps the
energy cancellation of the quadratic term exact in the truncated system.

The semi-implicit Euler step treats viscosity implicitly and the quadratic
term linearly implicitly (old state in the conjugated slot), so each step is
one pentadiagonal solve and the scheme dissipates energy at any step size.
The adjoint loop is the exact real-inner-product transpose of the tangent
loop; ``mixed_adjoint`` is the transpose of ``v -> bilinear(v, base)``.
"""

import numpy as np
from scipy.linalg import solve_banded

BACKEND = "python"


def _padded(k, u, v):
    n = len(k)
    lam = k[1] / k[0]
    kp = np.empty(n + 4)
    kp[2:n + 2] = k
    kp[1] = k[0] / lam
    kp[0] = k[0] / lam ** 2
    kp[n + 2] = k[-1] * lam
    kp[n + 3] = k[-1] * lam ** 2
    up = np.zeros(n + 4, np.complex128)
    up[2:n + 2] = u
    vp = np.zeros(n + 4, np.complex128)
    vp[2:n + 2] = v
    return kp, up, vp


def bilinear(k, a, b, u, v):
    """Quadratic interaction operator B(u, v), truncated to N shells."""
    n = len(k)
    kp, up, vp = _padded(k, u, v)
    i = np.arange(2, n + 2)
    return -1j * (
        a * kp[i + 1] * vp[i + 2] * np.conj(up[i + 1])
        + b * kp[i] * vp[i + 1] * np.conj(up[i - 1])
        + a * kp[i - 1] * up[i - 1] * vp[i - 2]
        + b * kp[i - 1] * vp[i - 1] * up[i - 2]
    )


def mixed_adjoint(k, a, b, base, w):
    """Real-inner-product transpose of ``v -> bilinear(v, base)`` applied to w.

    Obtained by reindexing Re<B(v, base), w> = Re<v, q>; exact for the
    truncated ladder.
    """
    n = len(k)
    kp, up, wp = _padded(k, base, w)
    m = np.arange(2, n + 2)
    return (
        -1j * a * kp[m] * up[m + 1] * np.conj(wp[m - 1])
        - 1j * b * kp[m + 1] * up[m + 2] * np.conj(wp[m + 1])
        + 1j * a * kp[m] * np.conj(up[m - 1]) * wp[m + 1]
        + 1j * b * kp[m + 1] * np.conj(up[m + 1]) * wp[m + 2]
    )


def _bands(k, a, b, nu, dt, u, sign):
    """Pentadiagonal bands (solve_banded layout) of I + dt*nu*diag(k^2) + sign*dt*C_u,

    where C_u v = bilinear(u, v) (complex-linear in v).
    """
    n = len(k)
    ab = np.zeros((5, n), np.complex128)
    s = sign * dt
    ab[2] = 1.0 + dt * nu * k ** 2
    # col j couplings of C_u (0-based shells)
    ab[0, 2:] = s * (-1j * a) * k[1:n - 1] * np.conj(u[1:n - 1])     # row j-2
    ab[1, 2:] = s * (-1j * b) * k[1:n - 1] * np.conj(u[:n - 2])      # row j-1
    ab[3, 1:n - 1] = s * (-1j * b) * k[1:n - 1] * u[:n - 2]          # row j+1
    ab[4, :n - 2] = s * (-1j * a) * k[1:n - 1] * u[1:n - 1]          # row j+2
    return ab


def _solve(ab, rhs):
    return solve_banded((2, 2), ab, rhs)


def step_si_euler(k, a, b, nu, dt, u, r):
    """One semi-implicit Euler step with per-step source r = f + g."""
    ab = _bands(k, a, b, nu, dt, u, +1.0)
    return _solve(ab, u + dt * r)


def run_si_euler(k, a, b, nu, dt, u0, rhs):
    """Forward loop; returns (states, blow_step) with blow_step = -1 on success."""
    m = rhs.shape[0]
    states = np.empty((m + 1, len(k)), np.complex128)
    states[0] = u0
    with np.errstate(over="ignore", invalid="ignore"):  # blow-up is detected, not warned
        for j in range(m):
            states[j + 1] = step_si_euler(k, a, b, nu, dt, states[j], rhs[j])
            if not np.all(np.isfinite(states[j + 1].view(np.float64))):
                return states, j
    return states, -1


def run_si_euler_tangent(k, a, b, nu, dt, states, h):
    """Exact derivative of the forward loop with respect to the source."""
    m = h.shape[0]
    w = np.zeros((m + 1, len(k)), np.complex128)
    for j in range(m):
        rhs = w[j] - dt * bilinear(k, a, b, w[j], states[j + 1]) + dt * h[j]
        ab = _bands(k, a, b, nu, dt, states[j], +1.0)
        w[j + 1] = _solve(ab, rhs)
    return w


def run_si_euler_adjoint(k, a, b, nu, dt, states, source, terminal):
    """Transpose of the tangent loop.

    ``source[j]`` weights state j (entry 0 is ignored: it pairs with the
    zero initial tangent).  Returns the costate sampled on the control grid,
    shape (m, N).
    """
    m = source.shape[0]
    wt = np.empty((m, len(k)), np.complex128)
    ab = _bands(k, a, b, nu, dt, states[m - 1], -1.0)
    wt[m - 1] = _solve(ab, terminal)
    for j in range(m - 2, -1, -1):
        rhs = wt[j + 1] - dt * mixed_adjoint(k, a, b, states[j + 2], wt[j + 1]) \
            + dt * source[j + 1]
        ab = _bands(k, a, b, nu, dt, states[j], -1.0)
        wt[j] = _solve(ab, rhs)
    return wt


def step_ifrk4(k, a, b, nu, dt, u, r):
    """One integrating-factor RK4 step (viscosity integrated exactly)."""
    e1 = np.exp(-nu * k ** 2 * (dt / 2.0))
    e2 = e1 * e1
    a1 = -bilinear(k, a, b, u, u) + r
    ua = e1 * (u + (dt / 2.0) * a1)
    a2 = -bilinear(k, a, b, ua, ua) + r
    ub = e1 * u + (dt / 2.0) * a2
    a3 = -bilinear(k, a, b, ub, ub) + r
    uc = e2 * u + dt * e1 * a3
    a4 = -bilinear(k, a, b, uc, uc) + r
    return e2 * u + (dt / 6.0) * (e2 * a1 + 2.0 * e1 * (a2 + a3) + a4)


def run_ifrk4(k, a, b, nu, dt, u0, rhs):
    """Forward loop for the integrating-factor RK4 scheme."""
    m = rhs.shape[0]
    states = np.empty((m + 1, len(k)), np.complex128)
    states[0] = u0
    with np.errstate(over="ignore", invalid="ignore"):  # blow-up is detected, not warned
        for j in range(m):
            states[j + 1] = step_ifrk4(k, a, b, nu, dt, states[j], rhs[j])
            if not np.all(np.isfinite(states[j + 1].view(np.float64))):
                return states, j
    return states, -1
