"""Time integration of the closed shell system du/dt + nu*A*u + B(u,u) = f + g.

Two schemes:

* ``semi-implicit-euler`` -- backward Euler for the viscous term plus a
  linearly implicit quadratic term (old state in the conjugated slot).  One
  pentadiagonal solve per step; dissipates energy unconditionally; its
  discrete tangent/adjoint pair is an exact transpose (see ``adjoint``).
* ``integrating-factor-rk4`` -- classical RK4 applied after rescaling by the
  per-shell viscous exponentials, so the stiff diagonal is integrated
  exactly.  Fourth-order accurate; used for conservation diagnostics.

Forcing and control are piecewise constant on grid intervals, matching the
rectangle-rule quadrature of the cost functionals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import ShellParams, as_state, wavenumbers

__all__ = [
    "SCHEMES",
    "BlowUpError",
    "TimeGrid",
    "ForcingSpec",
    "Trajectory",
    "zero_control",
    "simulate",
    "diagnostics",
]

SCHEMES = ("semi-implicit-euler", "integrating-factor-rk4")


class BlowUpError(RuntimeError):
    """Raised when a step produces non-finite amplitudes.

    The continuous solution exists for all time, so a blow-up signals a step
    size too large for the data; clipping instead would silently corrupt
    gradients.
    """

    def __init__(self, step: int, time: float):
        self.step = step
        self.time = time
        super().__init__(f"non-finite state at step {step} (t = {time:g}); reduce dt")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, t_end] with n_steps intervals of width dt."""

    t_end: float
    dt: float

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        n = round(self.t_end / self.dt)
        if n < 1 or abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            raise ValueError(
                f"t_end = {self.t_end} is not an integer multiple of dt = {self.dt}"
            )

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)


def _check_scheme(scheme: str) -> str:
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    return scheme


@dataclass(frozen=True)
class ForcingSpec:
    """Forcing menu: zero, a constant shared by all shells, a per-shell
    constant vector, or fully grid-sampled values."""

    mode: str = "zero"
    values: np.ndarray | complex | None = None

    MODES = ("zero", "constant", "per-shell-constant", "grid-sampled")

    def __post_init__(self):
        if self.mode not in self.MODES:
            raise ValueError(f"unknown forcing mode {self.mode!r}")

    @classmethod
    def single_shell(cls, n_shells: int, shell: int, value: complex) -> "ForcingSpec":
        """Constant forcing on one shell (1-based index), zero elsewhere."""
        v = np.zeros(n_shells, np.complex128)
        v[shell - 1] = value
        return cls("per-shell-constant", v)

    def sample(self, n_steps: int, n_shells: int) -> np.ndarray:
        """Materialize the forcing on the grid, shape (n_steps, n_shells)."""
        if self.mode == "zero":
            return np.zeros((n_steps, n_shells), np.complex128)
        if self.mode == "constant":
            return np.full((n_steps, n_shells), complex(self.values), np.complex128)
        if self.mode == "per-shell-constant":
            row = np.asarray(self.values, np.complex128)
            if row.shape != (n_shells,):
                raise ValueError(
                    f"per-shell forcing must have shape ({n_shells},), got {row.shape}"
                )
            return np.broadcast_to(row, (n_steps, n_shells)).copy()
        grid = np.asarray(self.values, np.complex128)
        if grid.shape != (n_steps, n_shells):
            raise ValueError(
                f"grid-sampled forcing must have shape ({n_steps}, {n_shells}), "
                f"got {grid.shape}"
            )
        return grid.copy()


def zero_control(grid: TimeGrid, params: ShellParams) -> np.ndarray:
    """All-zero control grid, shape (n_steps, n_shells)."""
    return np.zeros((grid.n_steps, params.n_shells), np.complex128)


def as_control(grid: TimeGrid, params: ShellParams, g) -> np.ndarray:
    """Coerce ``g`` (None means zero) to a finite (n_steps, n_shells) array."""
    if g is None:
        return zero_control(grid, params)
    g = np.asarray(g, np.complex128)
    want = (grid.n_steps, params.n_shells)
    if g.shape != want:
        raise ValueError(f"control grid must have shape {want}, got {g.shape}")
    if not np.all(np.isfinite(g.view(np.float64))):
        raise ValueError("control grid contains non-finite entries")
    return g


@dataclass
class Trajectory:
    """Grid plus the state at every grid time (and the control that was applied)."""

    grid: TimeGrid
    states: np.ndarray                      # (n_steps + 1, n_shells) complex
    applied_control: np.ndarray | None = None   # (n_steps, n_shells) complex

    def __post_init__(self):
        m = self.grid.n_steps
        if self.states.shape[0] != m + 1:
            raise ValueError(
                f"states must hold {m + 1} rows for {m} steps, got {self.states.shape[0]}"
            )

    @property
    def n_shells(self) -> int:
        return self.states.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times


def simulate(
    params: ShellParams,
    u0: np.ndarray,
    f: ForcingSpec,
    g,
    grid: TimeGrid,
    scheme: str = "semi-implicit-euler",
) -> Trajectory:
    """Advance the closed system from ``u0`` and record every grid state.

    ``g`` is a control grid (n_steps, n_shells) or None for the uncontrolled
    flow.  Raises :class:`BlowUpError` naming the step if the state leaves
    the finite range.
    """
    _check_scheme(scheme)
    u0 = as_state(params, u0)
    gg = as_control(grid, params, g)
    rhs = f.sample(grid.n_steps, params.n_shells) + gg
    k = wavenumbers(params)
    runner = _kernels.run_si_euler if scheme == "semi-implicit-euler" else _kernels.run_ifrk4
    states, blow = runner(k, params.a, params.b, params.nu, grid.dt, u0, rhs)
    if blow >= 0:
        raise BlowUpError(blow + 1, (blow + 1) * grid.dt)
    return Trajectory(grid=grid, states=states, applied_control=gg)


@dataclass
class DiagnosticsReport:
    """Per-time quadratic diagnostics and the time-averaged shell spectrum."""

    times: np.ndarray
    energy: np.ndarray          # |u(t)|^2
    enstrophy: np.ndarray       # sum k_n^2 |u_n|^2
    helicity_norm2: np.ndarray  # sum k_n |u_n|^2
    spectrum: np.ndarray        # time-averaged |u_n|^2 per shell

    def as_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "energy": self.energy.tolist(),
            "enstrophy": self.enstrophy.tolist(),
            "helicity_norm2": self.helicity_norm2.tolist(),
            "spectrum": self.spectrum.tolist(),
        }


def diagnostics(params: ShellParams, traj: Trajectory) -> DiagnosticsReport:
    """Energy, enstrophy, helicity-norm series and mean spectrum of a run."""
    k = wavenumbers(params)
    mag2 = np.abs(traj.states) ** 2
    return DiagnosticsReport(
        times=traj.times,
        energy=mag2.sum(axis=1),
        enstrophy=(mag2 * k ** 2).sum(axis=1),
        helicity_norm2=(mag2 * k).sum(axis=1),
        spectrum=mag2.mean(axis=0),
    )
