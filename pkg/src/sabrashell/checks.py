"""Fast self-check suite behind the ``check`` CLI subcommand.

Each check exercises one family of invariants at desk scale and returns a
pass/fail with a one-line numeric detail.  Thresholds mirror the full test
suite at reduced sizes so the whole sweep stays interactive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adjoint import CostSpec, compute_gradient, duality_residual, evaluate_cost, grid_inner
from .constraints import (
    ConstraintSet,
    ModeMask,
    PenaltyConfig,
    enstrophy_feedback,
    project,
    resolvent,
    simulate_closed_loop,
)
from .integrate import ForcingSpec, TimeGrid, simulate
from .model import ShellParams, enstrophy_norm, random_state, wavenumbers
from .operators import bilinear, bound_constants, linearize, linearize_adjoint
from .optimal import OptimizeConfig, optimize

__all__ = ["CheckResult", "run_checks"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail}


def _rand_state(params, rng):
    re = rng.standard_normal(params.n_shells)
    im = rng.standard_normal(params.n_shells)
    return re + 1j * im


def _check_operators(rng) -> CheckResult:
    p = ShellParams(n_shells=8, nu=0.0)
    c1, c2, c3 = bound_constants(p)
    k = wavenumbers(p)
    worst_orth = worst_bound = worst_adj = 0.0
    for _ in range(200):
        u, v = _rand_state(p, rng), _rand_state(p, rng)
        buv = bilinear(p, u, v)
        nu_, nv = np.linalg.norm(u), np.linalg.norm(v)
        vV = np.linalg.norm(k * np.abs(v))
        uV = np.linalg.norm(k * np.abs(u))
        orth = abs(np.sum(buv * np.conj(v)).real)
        worst_orth = max(worst_orth, orth / max(nu_ * vV * nv, 1e-300))
        bn = np.linalg.norm(buv)
        worst_bound = max(
            worst_bound,
            bn - c1 * nu_ * vV,
            bn - c2 * nv * uV,
            np.linalg.norm(k * np.abs(buv)) - c3 * nu_ * np.linalg.norm(k ** 2 * np.abs(v)),
        )
        w = _rand_state(p, rng)
        adj = abs(
            np.sum(linearize(p, u, v) * np.conj(w)).real
            - np.sum(v * np.conj(linearize_adjoint(p, u, w))).real
        )
        worst_adj = max(worst_adj, adj / max(nu_ * nv * np.linalg.norm(w), 1e-300))
    ok = worst_orth <= 1e-12 and worst_bound <= 1e-10 and worst_adj <= 1e-12
    return CheckResult(
        "operators", ok,
        f"orthogonality {worst_orth:.2e}, bound slack {worst_bound:.2e}, "
        f"adjoint defect {worst_adj:.2e}",
    )


def _check_conservation(rng) -> CheckResult:
    p = ShellParams(n_shells=12, nu=0.0)
    u0 = random_state(p, 123, amplitude=0.1)
    grid = TimeGrid(t_end=0.2, dt=1e-3)
    traj = simulate(p, u0, ForcingSpec(), None, grid, "integrating-factor-rk4")
    e = np.sum(np.abs(traj.states) ** 2, axis=1)
    drift = abs(e[-1] - e[0]) / e[0]
    mono = True
    pv = ShellParams(n_shells=12, nu=0.01)
    for dt in (1e-3, 1e-1, 10.0):
        g = TimeGrid(t_end=40 * dt, dt=dt)
        tr = simulate(pv, u0, ForcingSpec(), None, g, "semi-implicit-euler")
        ev = np.sum(np.abs(tr.states) ** 2, axis=1)
        mono = mono and bool(np.all(np.diff(ev) <= 1e-13 * ev[0]))
    ok = drift <= 1e-9 and mono
    return CheckResult(
        "conservation", ok,
        f"inviscid rk4 drift {drift:.2e}, viscous euler monotone {mono}",
    )


def _check_duality(rng) -> CheckResult:
    p = ShellParams(n_shells=6, nu=0.05)
    grid = TimeGrid(t_end=0.3, dt=0.01)
    u0 = random_state(p, 7, amplitude=0.3)
    base = simulate(p, u0, ForcingSpec(), None, grid)
    worst = 0.0
    for _ in range(20):
        h1 = rng.standard_normal((grid.n_steps, 6)) + 1j * rng.standard_normal((grid.n_steps, 6))
        h2 = rng.standard_normal((grid.n_steps, 6)) + 1j * rng.standard_normal((grid.n_steps, 6))
        worst = max(worst, duality_residual(p, base, h1, h2, grid))
    return CheckResult("duality", worst <= 1e-12, f"max defect {worst:.2e}")


def _check_gradient(rng) -> CheckResult:
    p = ShellParams(n_shells=4, nu=0.05)
    grid = TimeGrid(t_end=0.2, dt=0.01)
    u0 = random_state(p, 11, amplitude=0.4)
    f = ForcingSpec.single_shell(4, 1, 0.4 + 0.1j)
    g = 0.1 * (rng.standard_normal((grid.n_steps, 4)) + 1j * rng.standard_normal((grid.n_steps, 4)))
    target = simulate(p, u0, f, 0.2 * np.ones_like(g), grid)
    worst = 0.0
    for spec in (CostSpec("J1"), CostSpec("J2", beta=1e-2, desired=target)):
        grad = compute_gradient(p, spec, g, u0, f, grid)
        for _ in range(3):
            d = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
            eps = 1e-6
            jp = evaluate_cost(p, spec, simulate(p, u0, f, g + eps * d, grid), g + eps * d)
            jm = evaluate_cost(p, spec, simulate(p, u0, f, g - eps * d, grid), g - eps * d)
            fd = (jp - jm) / (2 * eps)
            an = grid_inner(grad, d, grid.dt)
            worst = max(worst, abs(fd - an) / max(abs(fd), 1e-300))
    return CheckResult("gradient", worst <= 1e-6, f"max fd mismatch {worst:.2e}")


def _check_projection(rng) -> CheckResult:
    p = ShellParams(n_shells=8, nu=0.0)
    worst_idem = worst_nonexp = 0.0
    for K in (ConstraintSet("enstrophy_ball", 1.1), ConstraintSet("helicity_ball", 0.6)):
        for i in range(100):
            u = random_state(p, 100 + i, amplitude=2.0)
            v = random_state(p, 900 + i, amplitude=2.0)
            zu, zv = project(p, u, K), project(p, v, K)
            worst_idem = max(worst_idem, float(np.linalg.norm(project(p, zu, K) - zu)))
            worst_nonexp = max(
                worst_nonexp,
                float(np.linalg.norm(zu - zv)) - float(np.linalg.norm(u - v)),
            )
    K = ConstraintSet("helicity_ball", 0.5)
    u = np.zeros(8, np.complex128)
    u[0] = 3.0 * np.exp(1.2j)
    z = project(p, u, K)
    k1 = wavenumbers(p)[0]
    closed = abs(z[0] - (K.rho / np.sqrt(k1)) * np.exp(1.2j))
    ok = worst_idem <= 1e-12 and worst_nonexp <= 1e-12 and closed <= 1e-12
    return CheckResult(
        "projection", ok,
        f"idempotence {worst_idem:.2e}, nonexpansive slack {worst_nonexp:.2e}, "
        f"single-mode {closed:.2e}",
    )


def _check_resolvent(rng) -> CheckResult:
    p = ShellParams(n_shells=8, nu=0.0)
    rho = 1.0
    worst = 0.0
    for i in range(50):
        u = random_state(p, 300 + i, amplitude=1.0)
        u = u * (rho / enstrophy_norm(p, u))  # on the sphere
        for lam in (0.1, 1.0, 10.0):
            worst = max(worst, enstrophy_norm(p, resolvent(p, u, lam)) - rho)
    return CheckResult("resolvent-invariance", worst <= 1e-12, f"max excess {worst:.2e}")


def _check_enstrophy_loop(rng) -> CheckResult:
    p = ShellParams(n_shells=8, nu=0.02)
    u0 = random_state(p, 21, amplitude=0.02)
    rho = enstrophy_norm(p, u0) * 2.0
    K = ConstraintSet("enstrophy_ball", rho)
    f = ForcingSpec.single_shell(8, 2, 1.0 + 0.5j)
    grid = TimeGrid(t_end=0.5, dt=1e-3)
    ref = simulate(p, u0, f, None, grid)
    ref_max = max(enstrophy_norm(p, s) for s in ref.states)
    traj, g, rep = simulate_closed_loop(p, u0, f, "enstrophy", K, grid)
    # normal-cone element at an active step
    cone_ok = True
    active = np.where(np.abs(g).sum(axis=1) > 0)[0]
    if active.size:
        j = int(active[0])
        eta = -g[j]
        for i in range(100):
            z = random_state(p, 500 + i, amplitude=1.0)
            z = z * (rho * rng.uniform() / enstrophy_norm(p, z))
            if np.sum(eta * np.conj(traj.states[j] - z)).real < -1e-10:
                cone_ok = False
    ok = ref_max > rho and rep.max_excess <= rho * 1e-6 and cone_ok
    return CheckResult(
        "enstrophy-invariance", ok,
        f"reference exits ({ref_max:.3f} > {rho:.3f}), "
        f"controlled excess {rep.max_excess:.2e}, cone ok {cone_ok}",
    )


def _check_penalty_loop(rng) -> CheckResult:
    p = ShellParams(n_shells=8, nu=0.02)
    u0 = random_state(p, 33, amplitude=0.05)
    mask = ModeMask((1, 2, 3))
    K = ConstraintSet("helicity_ball", 0.15)
    f = ForcingSpec.single_shell(8, 1, 1.2)
    grid = TimeGrid(t_end=0.4, dt=1e-3)
    stats, d2s = [], []
    for lam in (1e-1, 1e-2):
        _, _, rep = simulate_closed_loop(
            p, u0, f, "penalty", K, grid, mask=mask, penalty=PenaltyConfig(lam)
        )
        stats.append(rep.scaled_integral_d2)
        d2s.append(rep.integral_d2)
    ok = d2s[1] < d2s[0] and max(stats) <= 10 * max(min(stats), 1e-300)
    return CheckResult(
        "penalty-scaling", ok,
        f"integral d2 {d2s[0]:.2e} -> {d2s[1]:.2e}, scaled stats "
        f"{stats[0]:.2e}, {stats[1]:.2e}",
    )


def _check_optimality(rng) -> CheckResult:
    p = ShellParams(n_shells=4, nu=0.05)
    grid = TimeGrid(t_end=0.2, dt=0.01)
    u0 = random_state(p, 17, amplitude=0.3)
    f = ForcingSpec.single_shell(4, 1, 0.5)
    gstar = 0.15 * np.ones((grid.n_steps, 4), np.complex128)
    target = simulate(p, u0, f, gstar, grid)
    spec = CostSpec("J2", beta=1e-3, desired=target)
    g, traj, rep = optimize(p, spec, u0, f, grid, OptimizeConfig(max_iters=60, tol_grad=1e-5))
    mono = bool(np.all(np.diff(rep.costs) <= 1e-14))
    ok = mono and rep.costs[-1] < rep.costs[0]
    return CheckResult(
        "optimality", ok,
        f"cost {rep.costs[0]:.3e} -> {rep.costs[-1]:.3e}, monotone {mono}, "
        f"residual {rep.residual:.2e}",
    )


def run_checks(fast: bool = True) -> list[CheckResult]:
    """Run the invariant suite; ``fast`` is accepted for interface stability."""
    rng = np.random.default_rng(2024)
    checks = [
        _check_operators,
        _check_conservation,
        _check_duality,
        _check_gradient,
        _check_optimality,
        _check_projection,
        _check_resolvent,
        _check_enstrophy_loop,
        _check_penalty_loop,
    ]
    results = []
    for fn in checks:
        try:
            results.append(fn(rng))
        except Exception as e:  # a crash is a failure, not an abort
            results.append(CheckResult(fn.__name__.replace("_check_", ""), False, f"raised {e!r}"))
    return results
