"""The quadratic interaction operator, its linearization, and its adjoint.

All pairings below are over the truncated ladder with the convention
``(x, y) = sum_n x_n * conj(y_n)``.  Gradient/adjoint identities are stated
for the real inner product ``Re (x, y)``: the interaction operator is only
real-linear in its first argument, so real coordinates are the setting in
which transposes exist.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .model import ShellParams, as_state, wavenumbers

__all__ = [
    "bilinear",
    "nonlinear",
    "trilinear",
    "linearize",
    "linearize_adjoint",
    "bound_constants",
]


def bilinear(params: ShellParams, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """B(u, v): the bilinear interaction with out-of-range shells zeroed.

    Complex-linear in ``v``, real-linear (conjugations) in ``u``.  Satisfies
    Re (B(u, v), v) = 0 exactly for every pair, which is what conserves
    energy in the inviscid dynamics.
    """
    u = as_state(params, u)
    v = as_state(params, v)
    return _kernels.bilinear(wavenumbers(params), params.a, params.b, u, v)


def nonlinear(params: ShellParams, u: np.ndarray) -> np.ndarray:
    """B(u, u), the quadratic term of the equations of motion."""
    u = as_state(params, u)
    return _kernels.bilinear(wavenumbers(params), params.a, params.b, u, u)


def nonlinear_cform(params: ShellParams, u: np.ndarray) -> np.ndarray:
    """B(u, u) written with the third coefficient c = -(a+b).

    Independent evaluation path used to cross-check ``nonlinear``.
    """
    u = as_state(params, u)
    n = params.n_shells
    k = wavenumbers(params)
    up = np.zeros(n + 4, np.complex128)
    up[2:n + 2] = u
    kp = np.zeros(n + 4)
    kp[2:n + 2] = k
    kp[1] = k[0] / params.lam
    kp[n + 2] = k[-1] * params.lam
    i = np.arange(2, n + 2)
    return -1j * (
        params.a * kp[i + 1] * up[i + 2] * np.conj(up[i + 1])
        + params.b * kp[i] * up[i + 1] * np.conj(up[i - 1])
        - params.c * kp[i - 1] * up[i - 1] * up[i - 2]
    )


def trilinear(params: ShellParams, u: np.ndarray, v: np.ndarray, w: np.ndarray) -> complex:
    """(B(u, v), w) under the complex pairing sum x_n conj(y_n)."""
    return complex(np.sum(bilinear(params, u, v) * np.conj(as_state(params, w))))


def linearize(params: ShellParams, base: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Derivative of u -> B(u, u) at ``base``: B(base, v) + B(v, base)."""
    return bilinear(params, base, v) + bilinear(params, v, base)


def linearize_adjoint(params: ShellParams, base: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Real-inner-product transpose of ``v -> linearize(base, v)``.

    Satisfies Re (linearize(u, v), w) = Re (v, linearize_adjoint(u, w)) for
    all v, w, exactly (up to roundoff).  The first-slot part is skew, so its
    transpose is -B(base, w); the second-slot part transposes to a mixed
    conjugation stencil computed in the kernel.
    """
    base = as_state(params, base)
    w = as_state(params, w)
    k = wavenumbers(params)
    return -_kernels.bilinear(k, params.a, params.b, base, w) \
        + _kernels.mixed_adjoint(k, params.a, params.b, base, w)


def bound_constants(params: ShellParams) -> tuple[float, float, float]:
    """Sharp constants (C1, C2, C3) of the operator bounds

    |B(u,v)| <= C1 |u| ||v||,  |B(u,v)| <= C2 |v| ||u||,
    ||B(u,v)|| <= C3 |u| |A v|.
    """
    a, b, lam = abs(params.a), abs(params.b), params.lam
    c1 = a * (1.0 / lam + lam) + b * (1.0 / lam + 1.0)
    c2 = 2.0 * a + 2.0 * lam * b
    c3 = a * (lam ** 3 + lam ** -3) + b * (lam + lam ** -2)
    return c1, c2, c3
