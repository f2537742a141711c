"""Tangent and adjoint solvers, cost evaluation, and gradient assembly.

Discretize-then-optimize: for the semi-implicit Euler scheme the adjoint
recursion is the exact real-inner-product transpose of the tangent
recursion (itself the exact derivative of the forward map), so gradients
match finite differences of the discrete cost to roundoff and the discrete
duality identity holds to roundoff.  For the integrating-factor RK4 scheme
the tangent/adjoint pair discretizes the continuous equations instead; its
duality defect vanishes with the step size and is exposed for measurement
through :func:`duality_residual`.

Costs use the left-endpoint rectangle rule, aligned with the piecewise
constant controls; state terms sum over grid indices 0..M-1.  The tracking
cost can carry an optional terminal penalty |u(T) - u_d(T)|^2 / 2 (on by
default) whose exact discrete adjoint terminal condition is
u(T) - u_d(T); without it the terminal condition is zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .integrate import ForcingSpec, TimeGrid, Trajectory, as_control, simulate
from .model import ShellParams, as_state, wavenumbers

__all__ = [
    "CostSpec",
    "grid_norm",
    "grid_inner",
    "solve_tangent",
    "solve_adjoint",
    "evaluate_cost",
    "compute_gradient",
    "duality_residual",
]


@dataclass(frozen=True)
class CostSpec:
    """Selects the turbulence cost ("J1") or the tracking cost ("J2").

    J1 = 1/2 int |g|^2 + 1/2 int ||u||^2        (enstrophy suppression)
    J2 = 1/2 int |u - u_d|^2 + beta/2 int |g|^2 (+ terminal penalty)
    """

    kind: str
    beta: float = 1.0
    desired: Trajectory | None = None
    include_terminal: bool = True

    def __post_init__(self):
        if self.kind not in ("J1", "J2"):
            raise ValueError(f"cost kind must be 'J1' or 'J2', got {self.kind!r}")
        if self.kind == "J2":
            if not self.beta > 0:
                raise ValueError(f"beta must be positive, got {self.beta}")
            if self.desired is None:
                raise ValueError("tracking cost requires a desired trajectory")

    @property
    def control_weight(self) -> float:
        return self.beta if self.kind == "J2" else 1.0


def grid_norm(x: np.ndarray, dt: float) -> float:
    """Discrete L2([0,T]) norm of a control-grid function."""
    return float(np.sqrt(dt * np.sum(np.abs(x) ** 2)))


def grid_inner(x: np.ndarray, y: np.ndarray, dt: float) -> float:
    """Discrete real L2([0,T]) pairing dt * sum Re(x conj(y))."""
    return float(dt * np.sum((x * np.conj(y)).real))


def _require_same_grid(base: Trajectory, grid: TimeGrid):
    if base.grid.n_steps != grid.n_steps or abs(base.grid.dt - grid.dt) > 1e-12 * grid.dt:
        raise ValueError("base trajectory grid does not match the requested grid")


def solve_tangent(
    params: ShellParams,
    base: Trajectory,
    h,
    grid: TimeGrid,
    scheme: str = "semi-implicit-euler",
) -> Trajectory:
    """Solve the linearized flow driven by ``h`` around ``base``, w(0) = 0."""
    _require_same_grid(base, grid)
    h = as_control(grid, params, h)
    k = wavenumbers(params)
    if scheme == "semi-implicit-euler":
        w = _kernels.run_si_euler_tangent(
            k, params.a, params.b, params.nu, grid.dt, base.states, h
        )
    elif scheme == "integrating-factor-rk4":
        w = _ifrk4_tangent(params, base.states, h, grid.dt)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return Trajectory(grid=grid, states=w, applied_control=h)


def solve_adjoint(
    params: ShellParams,
    base: Trajectory,
    source,
    terminal,
    grid: TimeGrid,
    scheme: str = "semi-implicit-euler",
) -> Trajectory:
    """Integrate the adjoint system backward from ``terminal`` at t = T.

    ``source[j]`` weights the state at grid time j (the j = 0 slot is inert:
    it would pair with the zero initial tangent).  The returned trajectory
    stores the costate on rows 0..M-1 and the supplied terminal state on row
    M, so the value at t = T complies with the terminal condition exactly.
    """
    _require_same_grid(base, grid)
    source = as_control(grid, params, source)
    terminal = as_state(params, terminal)
    k = wavenumbers(params)
    m = grid.n_steps
    if scheme == "semi-implicit-euler":
        wt = _kernels.run_si_euler_adjoint(
            k, params.a, params.b, params.nu, grid.dt, base.states, source, terminal
        )
    elif scheme == "integrating-factor-rk4":
        wt = _ifrk4_adjoint(params, base.states, source, terminal, grid.dt)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    states = np.empty((m + 1, params.n_shells), np.complex128)
    states[:m] = wt
    states[m] = terminal
    return Trajectory(grid=grid, states=states, applied_control=source)


def evaluate_cost(params: ShellParams, spec: CostSpec, traj: Trajectory, g) -> float:
    """Rectangle-rule value of the selected cost for a trajectory/control pair."""
    grid = traj.grid
    g = as_control(grid, params, g)
    dt = grid.dt
    m = grid.n_steps
    control_term = 0.5 * spec.control_weight * dt * np.sum(np.abs(g) ** 2)
    if spec.kind == "J1":
        k = wavenumbers(params)
        state_term = 0.5 * dt * np.sum(np.abs(traj.states[:m]) ** 2 * k ** 2)
        return float(control_term + state_term)
    desired = spec.desired
    _require_same_grid(desired, grid)
    diff = traj.states[:m] - desired.states[:m]
    state_term = 0.5 * dt * np.sum(np.abs(diff) ** 2)
    total = control_term + state_term
    if spec.include_terminal:
        total += 0.5 * np.sum(np.abs(traj.states[m] - desired.states[m]) ** 2)
    return float(total)


def _adjoint_data(params: ShellParams, spec: CostSpec, traj: Trajectory):
    """Source grid and terminal state of the cost's adjoint problem."""
    m = traj.grid.n_steps
    if spec.kind == "J1":
        k = wavenumbers(params)
        source = traj.states[:m] * k ** 2
        terminal = np.zeros(params.n_shells, np.complex128)
    else:
        _require_same_grid(spec.desired, traj.grid)
        source = traj.states[:m] - spec.desired.states[:m]
        if spec.include_terminal:
            terminal = traj.states[m] - spec.desired.states[m]
        else:
            terminal = np.zeros(params.n_shells, np.complex128)
    return source, terminal


def compute_gradient(
    params: ShellParams,
    spec: CostSpec,
    g,
    u0: np.ndarray,
    f: ForcingSpec,
    grid: TimeGrid,
    return_parts: bool = False,
):
    """Gradient of cost(simulate(g), g) with respect to g.

    Returned in the dt-weighted control inner product, so the optimality
    system reads grad = g + costate (J1) or beta*g + costate (J2).  Exact
    for the semi-implicit Euler scheme by construction (the only scheme this
    entry point supports).
    """
    g = as_control(grid, params, g)
    traj = simulate(params, u0, f, g, grid, "semi-implicit-euler")
    source, terminal = _adjoint_data(params, spec, traj)
    adj = solve_adjoint(params, traj, source, terminal, grid, "semi-implicit-euler")
    costate = adj.states[: grid.n_steps]
    grad = spec.control_weight * g + costate
    if return_parts:
        return grad, traj, adj
    return grad


def duality_residual(
    params: ShellParams,
    base: Trajectory,
    h1,
    h2,
    grid: TimeGrid,
    scheme: str = "semi-implicit-euler",
) -> float:
    """Normalized defect of the tangent/adjoint duality identity.

    Pairs dt * sum Re(h2, w_{h1}) against dt * sum Re(costate_{h2}, h1),
    both over grid indices 0..M-1 with zero adjoint terminal.  Roundoff-flat
    for semi-implicit Euler; decays with dt for the RK4 scheme.
    """
    h1 = as_control(grid, params, h1)
    h2 = as_control(grid, params, h2)
    m = grid.n_steps
    tan = solve_tangent(params, base, h1, grid, scheme)
    adj = solve_adjoint(
        params, base, h2, np.zeros(params.n_shells, np.complex128), grid, scheme
    )
    lhs = grid_inner(h2, tan.states[:m], grid.dt)
    rhs = grid_inner(adj.states[:m], h1, grid.dt)
    scale = max(grid_norm(h1, grid.dt) * grid_norm(h2, grid.dt), 1e-300)
    return abs(lhs - rhs) / scale


# --- continuous tangent/adjoint discretized with the integrating-factor RK4 ---


def _linearize_at(params, k, ub, x):
    return _kernels.bilinear(k, params.a, params.b, ub, x) + _kernels.bilinear(
        k, params.a, params.b, x, ub
    )


def _linearize_adjoint_at(params, k, ub, x):
    return -_kernels.bilinear(k, params.a, params.b, ub, x) + _kernels.mixed_adjoint(
        k, params.a, params.b, ub, x
    )


def _ifrk4_linear_step(k, nu, dt, w, apply_op, src, base0, base_half, base1):
    e1 = np.exp(-nu * k ** 2 * (dt / 2.0))
    e2 = e1 * e1
    a1 = apply_op(base0, w) + src
    wa = e1 * (w + (dt / 2.0) * a1)
    a2 = apply_op(base_half, wa) + src
    wb = e1 * w + (dt / 2.0) * a2
    a3 = apply_op(base_half, wb) + src
    wc = e2 * w + dt * e1 * a3
    a4 = apply_op(base1, wc) + src
    return e2 * w + (dt / 6.0) * (e2 * a1 + 2.0 * e1 * (a2 + a3) + a4)


def _ifrk4_tangent(params, states, h, dt):
    k = wavenumbers(params)
    m = h.shape[0]
    w = np.zeros((m + 1, params.n_shells), np.complex128)
    op = lambda ub, x: -_linearize_at(params, k, ub, x)
    for j in range(m):
        half = 0.5 * (states[j] + states[j + 1])
        w[j + 1] = _ifrk4_linear_step(
            k, params.nu, dt, w[j], op, h[j], states[j], half, states[j + 1]
        )
    return w


def _ifrk4_adjoint(params, states, source, terminal, dt):
    # reversed time sigma = T - t turns the backward equation into a forward
    # one with the same stiff diagonal; bases run through states in reverse
    k = wavenumbers(params)
    m = source.shape[0]
    op = lambda ub, x: -_linearize_adjoint_at(params, k, ub, x)
    cur = np.asarray(terminal, np.complex128)
    wt = np.empty((m, params.n_shells), np.complex128)
    for j in range(m):
        i1 = m - j       # t index at the start of the reversed step
        i0 = m - j - 1   # t index at its end
        half = 0.5 * (states[i1] + states[i0])
        cur = _ifrk4_linear_step(
            k, params.nu, dt, cur, op, source[i0], states[i1], half, states[i0]
        )
        wt[i0] = cur
    return wt
