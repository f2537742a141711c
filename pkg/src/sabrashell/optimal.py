"""Steepest-descent solver for the two control problems.

Gradient descent with Armijo backtracking on the adjoint gradient.  The
solver certifies first-order stationarity (the residual of the optimality
system g + costate = 0, resp. beta*g + costate = 0), not global optimality:
the state equation is nonlinear, so stationary controls need not be global
minimizers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adjoint import CostSpec, compute_gradient, evaluate_cost, grid_norm
from .integrate import BlowUpError, ForcingSpec, TimeGrid, Trajectory, as_control, simulate
from .model import ShellParams

__all__ = [
    "OptimizeConfig",
    "OptimizationReport",
    "optimize",
    "optimality_residual",
]


@dataclass(frozen=True)
class OptimizeConfig:
    max_iters: int = 200
    step0: float = 1.0
    armijo_c: float = 1e-4
    shrink: float = 0.5
    tol_grad: float = 1e-6
    seed: int = 0
    max_backtracks: int = 60
    grow: float = 2.0

    def __post_init__(self):
        if self.max_iters < 1 or self.step0 <= 0 or self.tol_grad <= 0:
            raise ValueError("max_iters, step0, tol_grad must be positive")
        if not (0 < self.armijo_c < 1 and 0 < self.shrink < 1):
            raise ValueError("armijo_c and shrink must lie in (0, 1)")


@dataclass
class OptimizationReport:
    costs: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    residual: float = float("nan")
    converged: bool = False
    n_iterations: int = 0
    n_forward_solves: int = 0
    stop_reason: str = ""

    def as_dict(self) -> dict:
        return {
            "costs": list(self.costs),
            "grad_norms": list(self.grad_norms),
            "steps": list(self.steps),
            "residual": self.residual,
            "converged": self.converged,
            "n_iterations": self.n_iterations,
            "n_forward_solves": self.n_forward_solves,
            "stop_reason": self.stop_reason,
        }


def _normalized_residual(grad: np.ndarray, g: np.ndarray, dt: float) -> float:
    return grid_norm(grad, dt) / max(1.0, grid_norm(g, dt))


def optimality_residual(
    params: ShellParams,
    spec: CostSpec,
    g,
    u0: np.ndarray,
    f: ForcingSpec,
    grid: TimeGrid,
) -> float:
    """Grid norm of g + costate (resp. beta*g + costate), over max(1, ||g||).

    This is exactly the normalized gradient norm; it vanishes at stationary
    controls.
    """
    g = as_control(grid, params, g)
    grad = compute_gradient(params, spec, g, u0, f, grid)
    return _normalized_residual(grad, g, grid.dt)


def optimize(
    params: ShellParams,
    spec: CostSpec,
    u0: np.ndarray,
    f: ForcingSpec,
    grid: TimeGrid,
    config: OptimizeConfig = OptimizeConfig(),
    g0=None,
) -> tuple[np.ndarray, Trajectory, OptimizationReport]:
    """Minimize the selected cost from g = 0 (or ``g0``) by steepest descent.

    Accepted iterates satisfy the Armijo sufficient-decrease condition; a
    trial step whose forward solve blows up is treated as a failed line
    search probe and the step is shrunk.  Returns the final control, its
    trajectory, and the iteration report (cost sequence non-increasing).
    """
    g = as_control(grid, params, g0)
    dt = grid.dt
    report = OptimizationReport()

    grad, traj, _ = compute_gradient(params, spec, g, u0, f, grid, return_parts=True)
    cost = evaluate_cost(params, spec, traj, g)
    report.n_forward_solves += 1
    step = config.step0

    for it in range(config.max_iters):
        gnorm = grid_norm(grad, dt)
        resid = _normalized_residual(grad, g, dt)
        report.costs.append(cost)
        report.grad_norms.append(gnorm)
        if resid <= config.tol_grad:
            report.converged = True
            report.stop_reason = "stationarity tolerance reached"
            break

        # backtracking line search along -grad
        accepted = False
        s = step
        for _ in range(config.max_backtracks):
            g_try = g - s * grad
            try:
                traj_try = simulate(params, u0, f, g_try, grid, "semi-implicit-euler")
                report.n_forward_solves += 1
                cost_try = evaluate_cost(params, spec, traj_try, g_try)
            except BlowUpError:
                s *= config.shrink
                continue
            if cost_try <= cost - config.armijo_c * s * gnorm ** 2:
                accepted = True
                break
            s *= config.shrink
        if not accepted:
            report.stop_reason = "line search stalled"
            break

        g, cost = g_try, cost_try
        report.steps.append(s)
        step = min(s * config.grow, config.step0 * 1e3)
        grad, traj, _ = compute_gradient(params, spec, g, u0, f, grid, return_parts=True)
        report.n_forward_solves += 1
    else:
        report.costs.append(cost)
        report.grad_norms.append(grid_norm(grad, dt))
        report.stop_reason = "iteration budget exhausted"

    report.n_iterations = len(report.steps)
    report.residual = _normalized_residual(compute_gradient(params, spec, g, u0, f, grid), g, dt)
    traj = simulate(params, u0, f, g, grid, "semi-implicit-euler")
    return g, traj, report
