"""Model constants, state conventions, and spectral norms.

A state is a complex128 array ``u`` of length ``n_shells``; entry ``u[n-1]``
is the amplitude of shell ``n`` (wavenumber ``k_n = k0 * lam**n``).  Out of
range amplitudes (shells 0, -1 and n_shells+1, n_shells+2) are identically
zero by convention and are never stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ShellParams",
    "NormSpec",
    "wavenumbers",
    "as_state",
    "random_state",
    "apply_laplacian_power",
    "sobolev_norm",
    "energy_norm",
    "enstrophy_norm",
    "helicity_norm",
]


@dataclass(frozen=True)
class ShellParams:
    """Physical and spectral constants of the truncated shell ladder.

    ``a + b + c = 0`` is enforced at construction; omit ``c`` to have it
    derived.  ``nu`` may be zero (inviscid).
    """

    n_shells: int
    k0: float = 1.0
    lam: float = 2.0
    a: float = 1.0
    b: float = -0.5
    c: float | None = None
    nu: float = 0.01

    def __post_init__(self):
        if self.n_shells < 3:
            raise ValueError(f"n_shells must be >= 3, got {self.n_shells}")
        if not self.k0 > 0:
            raise ValueError(f"k0 must be positive, got {self.k0}")
        if not self.lam > 1:
            raise ValueError(f"lam must exceed 1, got {self.lam}")
        if self.nu < 0:
            raise ValueError(f"nu must be nonnegative, got {self.nu}")
        if self.c is None:
            object.__setattr__(self, "c", -(self.a + self.b))
        else:
            scale = max(1.0, abs(self.a), abs(self.b), abs(self.c))
            if abs(self.a + self.b + self.c) > 1e-12 * scale:
                raise ValueError(
                    f"interaction coefficients must satisfy a+b+c=0, "
                    f"got a={self.a}, b={self.b}, c={self.c}"
                )

    @property
    def k(self) -> np.ndarray:
        return wavenumbers(self)


@dataclass(frozen=True)
class NormSpec:
    """Weighted sequence norm: (sum (k_n^m |u_n|)^p)^(1/p), sup for p=inf."""

    m: float = 0.0
    p: float = 2.0

    def __post_init__(self):
        if not (self.p >= 1 or math.isinf(self.p)):
            raise ValueError(f"p must be >= 1 or inf, got {self.p}")


def wavenumbers(params: ShellParams) -> np.ndarray:
    """Shell wavenumbers k_n = k0 * lam**n for n = 1..n_shells."""
    return params.k0 * params.lam ** np.arange(1, params.n_shells + 1, dtype=float)


def as_state(params: ShellParams, values) -> np.ndarray:
    """Coerce ``values`` to a finite complex state of the right length."""
    u = np.asarray(values, dtype=np.complex128)
    if u.shape != (params.n_shells,):
        raise ValueError(f"state must have shape ({params.n_shells},), got {u.shape}")
    if not np.all(np.isfinite(u.view(np.float64))):
        raise ValueError("state contains non-finite entries")
    return u


def random_state(params: ShellParams, seed: int, amplitude: float = 1.0) -> np.ndarray:
    """Seeded random state with decaying spectrum.

    u_n = amplitude * lam**(-n/2) * (xi_n + i*eta_n), xi/eta standard normal.
    The decay keeps desk-scale runs stable; amplitude rescales the whole
    spectrum.
    """
    rng = np.random.default_rng(seed)
    n = np.arange(1, params.n_shells + 1, dtype=float)
    decay = params.lam ** (-n / 2.0)
    z = rng.standard_normal(params.n_shells) + 1j * rng.standard_normal(params.n_shells)
    return amplitude * decay * z


def apply_laplacian_power(params: ShellParams, u: np.ndarray, s: float) -> np.ndarray:
    """Apply the diagonal dissipation operator to the power s: u_n -> k_n^(2s) u_n."""
    k = wavenumbers(params)
    return k ** (2.0 * s) * np.asarray(u, dtype=np.complex128)


def sobolev_norm(params: ShellParams, u: np.ndarray, spec: NormSpec = NormSpec()) -> float:
    """Evaluate the weighted norm described by ``spec`` on state ``u``."""
    k = wavenumbers(params)
    weighted = k ** spec.m * np.abs(np.asarray(u))
    if math.isinf(spec.p):
        return float(weighted.max(initial=0.0))
    return float(np.sum(weighted ** spec.p) ** (1.0 / spec.p))


def energy_norm(u: np.ndarray) -> float:
    """Plain l2 magnitude |u| (square root of twice the energy)."""
    return float(np.linalg.norm(u))


def enstrophy_norm(params: ShellParams, u: np.ndarray) -> float:
    """||u|| = (sum k_n^2 |u_n|^2)^(1/2)."""
    return sobolev_norm(params, u, NormSpec(m=1.0, p=2.0))


def helicity_norm(params: ShellParams, u: np.ndarray) -> float:
    """(sum k_n |u_n|^2)^(1/2)."""
    return sobolev_norm(params, u, NormSpec(m=0.5, p=2.0))
