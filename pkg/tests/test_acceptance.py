"""Acceptance suite: one test per criterion, at the stated sizes and
tolerances, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the
summary lines immediately).  Scenario constants marked "frozen" were fixed
by a single calibration run and must not be retuned to make tests pass.
"""

import json
import time

import numpy as np
import pytest

from sabrashell import (
    ConstraintSet,
    CostSpec,
    ForcingSpec,
    ModeMask,
    OptimizeConfig,
    PenaltyConfig,
    ShellParams,
    TimeGrid,
    bilinear,
    bound_constants,
    compute_gradient,
    duality_residual,
    enstrophy_feedback,
    enstrophy_norm,
    evaluate_cost,
    grid_inner,
    grid_norm,
    invariance_report,
    linearize,
    linearize_adjoint,
    optimize,
    project,
    random_state,
    simulate,
    simulate_closed_loop,
    wavenumbers,
)
from sabrashell.cli import run as cli_run


def report(criterion, passed, detail):
    print(f"[ACCEPTANCE] {criterion}: {'PASS' if passed else 'FAIL'} — {detail}")
    assert passed, f"{criterion}: {detail}"


def test_criterion_1_operator_property_suite():
    t0 = time.perf_counter()
    p = ShellParams(n_shells=8, nu=0.0)
    rng = np.random.default_rng(11)
    c1, c2, c3 = bound_constants(p)
    k = wavenumbers(p)
    worst_orth = 0.0
    bound_ok = True
    for _ in range(1000):
        u = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        buv = bilinear(p, u, v)
        orth = abs(np.sum(buv * np.conj(v)).real)
        scale = np.linalg.norm(u) * np.linalg.norm(k * np.abs(v)) * np.linalg.norm(v)
        worst_orth = max(worst_orth, orth / scale)
        nb = np.linalg.norm(buv)
        bound_ok = bound_ok and (
            nb <= c1 * np.linalg.norm(u) * np.linalg.norm(k * np.abs(v)) * (1 + 1e-12)
            and nb <= c2 * np.linalg.norm(v) * np.linalg.norm(k * np.abs(u)) * (1 + 1e-12)
            and np.linalg.norm(k * np.abs(buv))
            <= c3 * np.linalg.norm(u) * np.linalg.norm(k ** 2 * np.abs(v)) * (1 + 1e-12)
        )
    # real-coordinate transpose check for the linearization and its adjoint
    worst_adj = 0.0
    for _ in range(20):
        u = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        fwd = np.zeros((16, 16))
        adj = np.zeros((16, 16))
        for j in range(8):
            for part in (0, 1):
                e = np.zeros(8, np.complex128)
                e[j] = 1.0 if part == 0 else 1.0j
                y = linearize(p, u, e)
                fwd[:8, j + part * 8], fwd[8:, j + part * 8] = y.real, y.imag
                y = linearize_adjoint(p, u, e)
                adj[:8, j + part * 8], adj[8:, j + part * 8] = y.real, y.imag
        worst_adj = max(worst_adj, np.abs(fwd.T - adj).max() / max(1.0, np.abs(fwd).max()))
    elapsed = time.perf_counter() - t0
    report(
        "criterion 1 (operator property suite)",
        worst_orth <= 1e-12 and bound_ok and worst_adj <= 1e-12 and elapsed < 5.0,
        f"orthogonality {worst_orth:.2e} <= 1e-12, bounds hold on every sample: "
        f"{bound_ok}, transpose defect {worst_adj:.2e} <= 1e-12, {elapsed:.1f}s < 5s",
    )


def test_criterion_2_inviscid_conservation_and_orders():
    t0 = time.perf_counter()
    p = ShellParams(n_shells=20, nu=0.0)
    u0 = random_state(p, 2020, amplitude=0.08)  # frozen calibration amplitude

    # energy drift over the full horizon at the stated step
    traj = simulate(p, u0, ForcingSpec(), None, TimeGrid(1.0, 1e-4),
                    "integrating-factor-rk4")
    e = np.sum(np.abs(traj.states) ** 2, axis=1)
    drift = float(np.max(np.abs(e - e[0])) / e[0])

    # fourth-order convergence, measured by solution self-convergence on a
    # short horizon where trajectories are still correlated (the T=1 endpoint
    # is chaos-decorrelated and admits no pointwise order measurement)
    finals = {}
    for dt in (4e-4, 2e-4, 1e-4, 5e-5):
        g = TimeGrid(0.12, dt)
        finals[dt] = simulate(p, u0, ForcingSpec(), None, g,
                              "integrating-factor-rk4").states[-1]
    errs = [np.linalg.norm(finals[dt] - finals[dt / 2]) for dt in (4e-4, 2e-4, 1e-4)]
    rk4_orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    rk4_ok = all(abs(o - 4.0) <= 0.3 for o in rk4_orders)

    # first-order energy drift of the semi-implicit scheme, same short horizon
    drifts = []
    for dt in (1e-3, 5e-4, 2.5e-4, 1.25e-4):
        g = TimeGrid(0.06, dt)
        tr = simulate(p, u0, ForcingSpec(), None, g)
        ev = np.sum(np.abs(tr.states) ** 2, axis=1)
        drifts.append(np.max(np.abs(ev - ev[0])) / ev[0])
    si_orders = [np.log2(drifts[i] / drifts[i + 1]) for i in range(3)]
    si_ok = all(abs(o - 1.0) <= 0.3 for o in si_orders)

    # unconditional dissipation of the semi-implicit scheme with viscosity
    pv = ShellParams(n_shells=20, nu=0.01)
    mono = True
    for dt in (1e-3, 1e-2, 1e-1, 1.0, 10.0):
        g = TimeGrid(40 * dt, dt)
        tr = simulate(pv, u0, ForcingSpec(), None, g)
        ev = np.sum(np.abs(tr.states) ** 2, axis=1)
        mono = mono and bool(np.all(np.diff(ev) <= 1e-13 * ev[0]))

    elapsed = time.perf_counter() - t0
    report(
        "criterion 2 (inviscid conservation)",
        drift <= 1e-8 and rk4_ok and si_ok and mono and elapsed < 30.0,
        f"drift {drift:.2e} <= 1e-8 at dt=1e-4, rk4 orders "
        f"{[f'{o:.2f}' for o in rk4_orders]} in 4±0.3, euler drift orders "
        f"{[f'{o:.2f}' for o in si_orders]} in 1±0.3, dissipation monotone up to "
        f"dt=10: {mono}, {elapsed:.1f}s < 30s",
    )


def test_criterion_3_adjoint_duality():
    t0 = time.perf_counter()
    p = ShellParams(n_shells=6, nu=0.05)
    grid = TimeGrid(0.5, 0.01)  # 50 steps
    u0 = random_state(p, 31, amplitude=0.3)
    f = ForcingSpec.single_shell(6, 2, 0.5 + 0.2j)
    base = simulate(p, u0, f, None, grid)
    rng = np.random.default_rng(33)
    worst = 0.0
    for _ in range(100):
        h1 = rng.standard_normal((50, 6)) + 1j * rng.standard_normal((50, 6))
        h2 = rng.standard_normal((50, 6)) + 1j * rng.standard_normal((50, 6))
        worst = max(worst, duality_residual(p, base, h1, h2, grid))
    elapsed = time.perf_counter() - t0
    report(
        "criterion 3 (adjoint duality)",
        worst <= 1e-10 and elapsed < 10.0,
        f"max pairing defect {worst:.2e} <= 1e-10 over 100 pairs, {elapsed:.1f}s < 10s",
    )


def test_criterion_4_gradient_exactness():
    t0 = time.perf_counter()
    p = ShellParams(n_shells=5, nu=0.05)
    grid = TimeGrid(0.4, 0.01)  # 40 steps
    u0 = random_state(p, 17, amplitude=0.3)
    f = ForcingSpec.single_shell(5, 1, 0.5 + 0.2j)
    rng = np.random.default_rng(44)
    target = simulate(p, u0, f, 0.2 * np.ones((40, 5), np.complex128), grid)
    specs = [
        CostSpec("J1"),
        CostSpec("J2", beta=1e-2, desired=target, include_terminal=True),
        CostSpec("J2", beta=1e-2, desired=target, include_terminal=False),
    ]
    worst = 0.0
    for spec in specs:
        g = 0.1 * (rng.standard_normal((40, 5)) + 1j * rng.standard_normal((40, 5)))
        grad = compute_gradient(p, spec, g, u0, f, grid)
        for _ in range(20):
            d = rng.standard_normal((40, 5)) + 1j * rng.standard_normal((40, 5))
            eps = 1e-6
            jp = evaluate_cost(p, spec, simulate(p, u0, f, g + eps * d, grid), g + eps * d)
            jm = evaluate_cost(p, spec, simulate(p, u0, f, g - eps * d, grid), g - eps * d)
            fd = (jp - jm) / (2 * eps)
            an = grid_inner(grad, d, grid.dt)
            worst = max(worst, abs(fd - an) / max(abs(fd), 1e-300))
    elapsed = time.perf_counter() - t0
    report(
        "criterion 4 (gradient exactness)",
        worst <= 1e-6 and elapsed < 30.0,
        f"max relative fd mismatch {worst:.2e} <= 1e-6 over 20 directions x 3 costs, "
        f"{elapsed:.1f}s < 30s",
    )


def test_criterion_5_optimality_characterization():
    t0 = time.perf_counter()
    p = ShellParams(n_shells=6, nu=0.05)
    grid = TimeGrid(1.0, 0.01)
    u0 = random_state(p, 42, amplitude=0.3)
    f = ForcingSpec.single_shell(6, 1, 0.5 + 0.2j)

    # enstrophy-suppression problem: converge and check the first-order system
    spec1 = CostSpec("J1")
    g1, _, rep1 = optimize(p, spec1, u0, f, grid,
                           OptimizeConfig(max_iters=600, tol_grad=1e-6))
    mono1 = bool(np.all(np.diff(rep1.costs) <= 1e-14))

    # twin experiment: tracking error reduced at least 90% (frozen threshold;
    # the calibration run reached 99.99%)
    gstar = np.zeros((grid.n_steps, 6), np.complex128)
    gstar[:, :3] = 0.3 * np.exp(1j * np.array([0.3, -0.7, 1.1]))[None, :]
    target = simulate(p, u0, f, gstar, grid)
    spec2 = CostSpec("J2", beta=1e-3, desired=target)
    g2, traj2, rep2 = optimize(p, spec2, u0, f, grid,
                               OptimizeConfig(max_iters=600, tol_grad=1e-6))
    mono2 = bool(np.all(np.diff(rep2.costs) <= 1e-14))
    m = grid.n_steps
    free = simulate(p, u0, f, None, grid)
    err0 = grid_norm(free.states[:m] - target.states[:m], grid.dt) ** 2
    err1 = grid_norm(traj2.states[:m] - target.states[:m], grid.dt) ** 2
    reduction = 1.0 - err1 / err0

    elapsed = time.perf_counter() - t0
    report(
        "criterion 5 (optimality characterization)",
        rep1.residual <= 1e-5 and rep2.residual <= 1e-5 and mono1 and mono2
        and reduction >= 0.90 and elapsed < 120.0,
        f"residuals {rep1.residual:.2e}/{rep2.residual:.2e} <= 1e-5, costs monotone "
        f"{mono1 and mono2}, tracking reduction {reduction:.4%} >= 90%, "
        f"{elapsed:.1f}s < 120s",
    )


def test_criterion_6_projection_suite():
    t0 = time.perf_counter()
    p = ShellParams(n_shells=8, nu=0.0)
    rng = np.random.default_rng(55)
    worst_idem = worst_nonexp = 0.0
    for K in (ConstraintSet("enstrophy_ball", 1.2), ConstraintSet("helicity_ball", 0.6)):
        for i in range(200):
            u = random_state(p, 3000 + i, amplitude=float(10 ** rng.uniform(-1, 1)))
            v = random_state(p, 6000 + i, amplitude=float(10 ** rng.uniform(-1, 1)))
            zu, zv = project(p, u, K), project(p, v, K)
            worst_idem = max(worst_idem, float(np.linalg.norm(project(p, zu, K) - zu)))
            worst_nonexp = max(
                worst_nonexp,
                float(np.linalg.norm(zu - zv) - np.linalg.norm(u - v)),
            )
    # single-mode closed forms: boundary point along the same ray
    k1 = wavenumbers(p)[0]
    closed = 0.0
    for K, power in ((ConstraintSet("helicity_ball", 0.5), 0.5),
                     (ConstraintSet("enstrophy_ball", 0.8), 1.0)):
        u = np.zeros(8, np.complex128)
        u[0] = 3.0 * np.exp(0.4j)
        z = project(p, u, K)
        want = (K.rho / k1 ** power) * np.exp(0.4j)
        closed = max(closed, abs(z[0] - want))
    # brute force: no sampled feasible point beats the projection
    K = ConstraintSet("helicity_ball", 0.6)
    u = random_state(p, 123, amplitude=2.0)
    z = project(p, u, K)
    dz = np.linalg.norm(u - z)
    beaten = 0
    for i in range(10000):
        y = random_state(p, 20000 + i, amplitude=1.0)
        y = y * (K.rho * rng.uniform() / K.level(p, y))
        if np.linalg.norm(u - y) < dz * (1 - 1e-12):
            beaten += 1
    elapsed = time.perf_counter() - t0
    report(
        "criterion 6 (projection suite)",
        worst_idem <= 1e-12 and worst_nonexp <= 1e-12 and closed <= 1e-12
        and beaten == 0 and elapsed < 30.0,
        f"idempotence {worst_idem:.2e} <= 1e-12, nonexpansive slack "
        f"{worst_nonexp:.2e}, single-mode closed form {closed:.2e} <= 1e-12, "
        f"beaten by 0/{10000} samples, {elapsed:.1f}s < 30s",
    )


def test_criterion_7_enstrophy_invariance():
    t0 = time.perf_counter()
    # frozen scenario: forced flow whose free trajectory exits the ball
    p = ShellParams(n_shells=10, nu=0.01)
    u0 = random_state(p, 77, amplitude=0.02)
    rho = 1.5 * enstrophy_norm(p, u0)
    K = ConstraintSet("enstrophy_ball", rho)
    f = ForcingSpec.single_shell(10, 2, 2.0 * (1.0 + 0.5j))
    T = 0.5

    ref = invariance_report(p, simulate(p, u0, f, None, TimeGrid(T, 1e-4)), K)
    reference_exits = ref.max_excess > 0

    excesses, pres = [], []
    cone_worst = 0.0
    cone_active = 0
    rng = np.random.default_rng(7)
    for dt in (1e-4, 5e-5, 2.5e-5):
        traj, g, rep = simulate_closed_loop(p, u0, f, "enstrophy", K, TimeGrid(T, dt))
        excesses.append(rep.max_excess)
        pres.append(rep.max_pre_excess)
        if dt == 1e-4:
            # normal-cone inequality of the feedback's cone element at
            # boundary states, sampled against 1000 feasible points
            active = np.where(np.abs(g).sum(axis=1) > 0)[0]
            fgrid = f.sample(traj.grid.n_steps, 10)
            for j in active[:: max(1, len(active) // 5)][:5]:
                u = traj.states[j] * (rho / enstrophy_norm(p, traj.states[j]))
                gb = enstrophy_feedback(p, u, fgrid[j], rho)
                if not np.any(gb):
                    continue
                cone_active += 1
                eta = -gb
                for i in range(1000):
                    z = random_state(p, 40000 + i, amplitude=1.0)
                    z = z * (rho * rng.uniform() / enstrophy_norm(p, z))
                    cone_worst = min(
                        cone_worst, float(np.sum(eta * np.conj(u - z)).real)
                    )
    bound_ok = excesses[0] <= rho * 1e-6
    # tightening across the whole dt ladder with order >= 1 (within the same
    # ±0.3 convention used for measured orders)
    order = float(np.log2(pres[0] / pres[2]) / 2) if pres[2] > 0 else np.inf
    tighten_ok = order >= 0.7 and pres[2] < pres[0]
    elapsed = time.perf_counter() - t0
    report(
        "criterion 7 (enstrophy invariance)",
        reference_exits and bound_ok and tighten_ok and cone_active > 0
        and cone_worst >= -1e-10 and elapsed < 60.0,
        f"reference exits {reference_exits}, excess {excesses[0]:.2e} <= "
        f"rho*1e-6 = {rho * 1e-6:.2e}, overshoot order {order:.2f} >= 0.7 "
        f"(raw {[f'{x:.1e}' for x in pres]}), cone worst {cone_worst:.2e} >= -1e-10 "
        f"at {cone_active} boundary states, {elapsed:.1f}s < 60s",
    )


def test_criterion_8_penalty_scaling():
    t0 = time.perf_counter()
    # frozen scenario: chaotic cascade with the masked shells at fast
    # timescales, where the integrated-distance bound is tight
    p = ShellParams(n_shells=16, nu=1e-6)
    u0 = random_state(p, 5, amplitude=0.05)
    mask = ModeMask((13, 14, 15))
    u0 = u0 - mask.apply(u0)
    f = ForcingSpec.single_shell(16, 1, 4.0 * (1.0 + 0.5j))
    grid = TimeGrid(1.0, 1e-4)
    probe = ConstraintSet("helicity_ball", 1.0)
    ref = simulate(p, u0, f, None, grid)
    levels = np.array([probe.level(p, mask.apply(s)) for s in ref.states[::20]])
    rho = float(np.quantile(levels, 0.6))
    K = ConstraintSet("helicity_ball", rho)

    lams = (1e-1, 1e-2, 1e-3)
    d2s, stats = [], []
    for lam in lams:
        _, _, rep = simulate_closed_loop(p, u0, f, "penalty", K, grid,
                                         mask=mask, penalty=PenaltyConfig(lam))
        d2s.append(rep.integral_d2)
        stats.append(rep.scaled_integral_d2)
    slope = float(np.polyfit(np.log(lams), np.log(d2s), 1)[0])
    stat_bound = 2e-9  # frozen: 3x the calibrated maximum of the scaled statistic
    elapsed = time.perf_counter() - t0
    report(
        "criterion 8 (penalty scaling)",
        max(stats) <= stat_bound and abs(slope - 1.0) <= 0.2 and elapsed < 120.0,
        f"scaled statistic max {max(stats):.2e} <= {stat_bound:.0e} "
        f"(lambda-independent), log-log slope {slope:.2f} in 1±0.2, "
        f"{elapsed:.1f}s < 120s",
    )


def test_criterion_9_check_subcommand_and_reproducibility(tmp_path):
    t0 = time.perf_counter()
    doc = {
        "model": {"n_shells": 6, "nu": 0.02},
        "grid": {"t_end": 0.5, "dt": 0.01},
        "seed": 3,
        "initial": {"kind": "seeded-random", "amplitude": 0.2},
        "forcing": {"kind": "per-shell-constant",
                    "values": [[0.4, 0.1]] + [[0.0, 0.0]] * 5},
        "task": {"kind": "check"},
        "output": {"directory": str(tmp_path), "prefix": "acc"},
    }
    cfg = tmp_path / "check.json"
    cfg.write_text(json.dumps(doc))
    status = cli_run(["check", str(cfg)])

    doc["task"] = {"kind": "simulate"}
    cfg2 = tmp_path / "sim.json"
    cfg2.write_text(json.dumps(doc))
    assert cli_run(["simulate", str(cfg2)]) == 0
    traj1 = (tmp_path / "acc-trajectory.csv").read_bytes()
    rep1 = (tmp_path / "acc-report.json").read_bytes()
    assert cli_run(["simulate", str(cfg2)]) == 0
    identical = (
        traj1 == (tmp_path / "acc-trajectory.csv").read_bytes()
        and rep1 == (tmp_path / "acc-report.json").read_bytes()
    )
    elapsed = time.perf_counter() - t0
    report(
        "criterion 9 (end-to-end reproducibility)",
        status == 0 and identical,
        f"check exit status {status} == 0, re-run outputs bit-identical: "
        f"{identical}, {elapsed:.1f}s",
    )
