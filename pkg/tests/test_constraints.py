import numpy as np
import pytest

from sabrashell import (
    ConstraintSet,
    ForcingSpec,
    ModeMask,
    PenaltyConfig,
    ShellParams,
    TimeGrid,
    distance,
    enstrophy_feedback,
    enstrophy_norm,
    invariance_report,
    nonlinear,
    penalty_feedback,
    project,
    random_state,
    resolvent,
    simulate,
    simulate_closed_loop,
    wavenumbers,
)


@pytest.fixture
def p8():
    return ShellParams(n_shells=8, nu=0.02)


def feasible_point(params, K, seed, fill=1.0):
    """Sample a point of K by scaling a random state onto/into the ball."""
    u = random_state(params, seed, amplitude=1.0)
    return u * (fill * K.rho / K.level(params, u))


class TestResolvent:
    def test_identity_limit(self, p8, rng):
        u = random_state(p8, 2, 1.0)
        assert np.allclose(resolvent(p8, u, 1e-16), u, rtol=1e-12)

    def test_enstrophy_ball_invariance(self, p8):
        rho = 1.0
        for seed in range(40):
            u = random_state(p8, seed, 1.0)
            u *= rho / enstrophy_norm(p8, u)  # on the sphere
            for lam in (0.1, 1.0, 10.0):
                assert enstrophy_norm(p8, resolvent(p8, u, lam)) <= rho * (1 + 1e-12)

    def test_single_mode_value(self):
        p = ShellParams(n_shells=3)
        u = np.array([1.0, 0, 0], np.complex128)
        out = resolvent(p, u, 1.0)
        assert out[0] == pytest.approx(0.2)  # 1/(1 + k_1^2) = 1/5
        assert np.all(out[1:] == 0)

    def test_rejects_nonpositive_lam(self, p8):
        with pytest.raises(ValueError):
            resolvent(p8, np.zeros(8, np.complex128), 0.0)


class TestProjection:
    @pytest.mark.parametrize("kind,rho", [("enstrophy_ball", 1.2), ("helicity_ball", 0.6)])
    def test_identity_inside(self, p8, kind, rho, rng):
        K = ConstraintSet(kind, rho)
        u = feasible_point(p8, K, 7, fill=0.8)
        assert np.array_equal(project(p8, u, K), u)

    def test_single_mode_helicity_boundary(self):
        p = ShellParams(n_shells=4)
        K = ConstraintSet("helicity_ball", 0.5)
        r = 3.0 * np.exp(0.9j)
        u = np.zeros(4, np.complex128)
        u[0] = r
        z = project(p, u, K)
        k1 = wavenumbers(p)[0]
        want = (K.rho / np.sqrt(k1)) * np.exp(0.9j)
        assert abs(z[0] - want) <= 1e-12
        assert np.all(z[1:] == 0)

    @pytest.mark.parametrize("kind,rho", [("enstrophy_ball", 1.2), ("helicity_ball", 0.6)])
    def test_idempotence(self, p8, kind, rho):
        K = ConstraintSet(kind, rho)
        for seed in range(60):
            u = random_state(p8, seed, amplitude=3.0)
            z = project(p8, u, K)
            assert np.linalg.norm(project(p8, z, K) - z) <= 1e-12 * max(1, np.linalg.norm(z))

    @pytest.mark.parametrize("kind,rho", [("enstrophy_ball", 1.2), ("helicity_ball", 0.6)])
    def test_nonexpansive(self, p8, kind, rho):
        K = ConstraintSet(kind, rho)
        for seed in range(60):
            u = random_state(p8, seed, amplitude=2.0)
            v = random_state(p8, seed + 1000, amplitude=2.0)
            pu, pv = project(p8, u, K), project(p8, v, K)
            assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) * (1 + 1e-12)

    def test_membership_after_projection(self, p8):
        for kind, rho in (("enstrophy_ball", 1.2), ("helicity_ball", 0.6)):
            K = ConstraintSet(kind, rho)
            for seed in range(30):
                u = random_state(p8, seed, amplitude=5.0)
                z = project(p8, u, K)
                assert K.level(p8, z) <= rho * (1 + 1e-10)

    def test_brute_force_nearest_point(self, p8, rng):
        # no sampled feasible point may beat the computed projection
        K = ConstraintSet("helicity_ball", 0.6)
        u = random_state(p8, 123, amplitude=2.0)
        assert not K.contains(p8, u)
        z = project(p8, u, K)
        dz = np.linalg.norm(u - z)
        for seed in range(1000):
            y = feasible_point(p8, K, seed, fill=rng.uniform(0.2, 1.0))
            assert np.linalg.norm(u - y) >= dz * (1 - 1e-12)


class TestDistance:
    def test_member_zero(self, p8):
        K = ConstraintSet("enstrophy_ball", 1.0)
        u = feasible_point(p8, K, 3, fill=0.5)
        assert distance(p8, u, K) == 0.0

    def test_single_mode_collinear(self):
        p = ShellParams(n_shells=4)
        K = ConstraintSet("helicity_ball", 0.5)
        r = 2.5
        u = np.zeros(4, np.complex128)
        u[0] = r
        k1 = wavenumbers(p)[0]
        assert distance(p, u, K) == pytest.approx(r - K.rho / np.sqrt(k1), rel=1e-12)

    def test_nonexpansive_triangle(self, p8):
        K = ConstraintSet("helicity_ball", 0.6)
        for seed in range(50):
            x = random_state(p8, seed, amplitude=2.0)
            y = random_state(p8, seed + 500, amplitude=2.0)
            dd = abs(distance(p8, x, K) - distance(p8, y, K))
            assert dd <= np.linalg.norm(x - y) * (1 + 1e-12)

    def test_masked_distance(self, p8):
        K = ConstraintSet("helicity_ball", 0.3)
        mask = ModeMask((1, 2))
        u = random_state(p8, 9, amplitude=2.0)
        assert distance(p8, u, K, mask) == pytest.approx(
            distance(p8, mask.apply(u), K), abs=1e-15
        )


class TestEnstrophyFeedback:
    def test_zero_inside_band(self, p8):
        rho = 10.0
        u = random_state(p8, 4, amplitude=0.01)
        g = enstrophy_feedback(p8, u, np.zeros(8, np.complex128), rho)
        assert np.all(g == 0)

    def test_production_annihilated_on_branch(self, p8):
        # forcing strong enough to dominate dissipation and transfer makes the
        # pairing positive; the law cancels it exactly
        rho = enstrophy_norm(p8, random_state(p8, 5, 0.1))
        u = random_state(p8, 5, 0.1)
        k = wavenumbers(p8)
        au = k ** 2 * u
        bu = nonlinear(p8, u)
        au2 = np.sum(np.abs(au) ** 2)
        c = p8.nu + (abs(np.sum(bu * np.conj(au))) + 1.0) / au2 + 1.0
        f_now = c * au
        g = enstrophy_feedback(p8, u, f_now, rho)
        assert np.linalg.norm(g) > 0
        drive = f_now + g - p8.nu * au - bu
        scale = np.linalg.norm(f_now) * np.linalg.norm(au)
        assert abs(np.sum(drive * np.conj(au)).real) <= 1e-12 * scale

    def test_clip_keeps_decay_uncontrolled(self, p8):
        # on the branch with negative production the clipped law stays silent
        u = random_state(p8, 5, 0.1)
        rho = enstrophy_norm(p8, u)
        k = wavenumbers(p8)
        au = k ** 2 * u
        f_now = -5.0 * au / np.linalg.norm(au)
        assert np.all(enstrophy_feedback(p8, u, f_now, rho, clip=True) == 0)
        g = enstrophy_feedback(p8, u, f_now, rho, clip=False)
        drive = f_now + g - p8.nu * au - nonlinear(p8, u)
        assert abs(np.sum(drive * np.conj(au)).real) <= 1e-12 * (
            np.linalg.norm(drive) * np.linalg.norm(au) + 1
        )

    def test_complex_pairing_variant(self, p8):
        u = random_state(p8, 5, 0.1)
        rho = enstrophy_norm(p8, u)
        k = wavenumbers(p8)
        au = k ** 2 * u
        f_now = 5.0 * au / np.linalg.norm(au)
        g = enstrophy_feedback(p8, u, f_now, rho, pairing="complex")
        drive = f_now + g - p8.nu * au - nonlinear(p8, u)
        assert abs(np.sum(drive * np.conj(au))) <= 1e-12 * (
            np.linalg.norm(drive) * np.linalg.norm(au) + 1
        )


class TestPenaltyFeedback:
    def test_zero_inside(self, p8):
        K = ConstraintSet("helicity_ball", 1.0)
        mask = ModeMask((1, 2, 3))
        u = random_state(p8, 6, amplitude=0.01)
        g = penalty_feedback(p8, u, K, mask, PenaltyConfig(1e-2))
        assert np.all(g == 0)

    def test_homogeneity_in_penalty(self, p8):
        K = ConstraintSet("helicity_ball", 0.1)
        mask = ModeMask((1, 2, 3))
        u = random_state(p8, 6, amplitude=1.0)
        g1 = penalty_feedback(p8, u, K, mask, PenaltyConfig(2e-2))
        g2 = penalty_feedback(p8, u, K, mask, PenaltyConfig(1e-2))
        assert np.array_equal(g2, 2.0 * g1)

    def test_masked_support(self, p8):
        K = ConstraintSet("helicity_ball", 0.1)
        mask = ModeMask((2, 5))
        u = random_state(p8, 6, amplitude=1.0)
        g = penalty_feedback(p8, u, K, mask, PenaltyConfig(1e-2))
        outside = [i for i in range(8) if i + 1 not in mask.indices]
        assert np.all(g[outside] == 0)
        assert np.linalg.norm(g) > 0

    def test_single_mode_points_to_boundary(self):
        p = ShellParams(n_shells=4)
        K = ConstraintSet("helicity_ball", 0.5)
        mask = ModeMask((1,))
        lam = 1e-2
        u = np.zeros(4, np.complex128)
        u[0] = 2.0
        g = penalty_feedback(p, u, K, mask, PenaltyConfig(lam))
        k1 = wavenumbers(p)[0]
        boundary = K.rho / np.sqrt(k1)
        assert g[0] == pytest.approx(-(2.0 - boundary) / lam, rel=1e-12)
        assert np.all(g[1:] == 0)


class TestClosedLoop:
    def test_zero_everything(self, p8):
        K = ConstraintSet("enstrophy_ball", 1.0)
        grid = TimeGrid(0.1, 0.01)
        traj, g, rep = simulate_closed_loop(
            p8, np.zeros(8, np.complex128), ForcingSpec(), "enstrophy", K, grid
        )
        assert np.all(traj.states == 0) and np.all(g == 0)
        assert rep.max_excess == 0.0 and rep.integral_d2 == 0.0
        assert rep.fraction_inside == 1.0

    def test_enstrophy_reference_pair(self, p8):
        u0 = random_state(p8, 21, amplitude=0.02)
        rho = 2.0 * enstrophy_norm(p8, u0)
        K = ConstraintSet("enstrophy_ball", rho)
        f = ForcingSpec.single_shell(8, 2, 1.0 + 0.5j)
        grid = TimeGrid(0.5, 1e-3)
        ref = simulate(p8, u0, f, None, grid)
        ref_rep = invariance_report(p8, ref, K)
        assert ref_rep.max_excess > 0  # the uncontrolled flow exits
        traj, g, rep = simulate_closed_loop(p8, u0, f, "enstrophy", K, grid)
        assert rep.max_excess <= rho * 1e-6
        assert rep.fraction_inside == 1.0

    def test_requires_feasible_start(self, p8):
        K = ConstraintSet("enstrophy_ball", 0.01)
        grid = TimeGrid(0.1, 0.01)
        with pytest.raises(ValueError):
            simulate_closed_loop(p8, random_state(p8, 1, 1.0), ForcingSpec(),
                                 "enstrophy", K, grid)

    def test_penalty_requires_mask_and_config(self, p8):
        K = ConstraintSet("helicity_ball", 1.0)
        grid = TimeGrid(0.1, 0.01)
        with pytest.raises(ValueError):
            simulate_closed_loop(p8, np.zeros(8, np.complex128), ForcingSpec(),
                                 "penalty", K, grid)

    def test_penalty_ladder_bounded_statistic(self, p8):
        u0 = random_state(p8, 33, amplitude=0.05)
        mask = ModeMask((1, 2, 3))
        K = ConstraintSet("helicity_ball", 0.15)
        f = ForcingSpec.single_shell(8, 1, 1.2)
        grid = TimeGrid(0.4, 1e-3)
        d2s, stats = [], []
        for lam in (1e-1, 1e-2):
            traj, g, rep = simulate_closed_loop(
                p8, u0, f, "penalty", K, grid, mask=mask, penalty=PenaltyConfig(lam)
            )
            d2s.append(rep.integral_d2)
            stats.append(rep.scaled_integral_d2)
            assert rep.commutation_gap is not None
        assert d2s[1] < d2s[0]
        assert max(stats) <= 10 * min(stats)

    def test_penalty_control_matches_formula_in_smooth_regime(self, p8):
        # for dt < lambda the split relaxation equals the penalty feedback
        u0 = random_state(p8, 33, amplitude=0.05)
        mask = ModeMask((1, 2, 3))
        K = ConstraintSet("helicity_ball", 1.01 * ConstraintSet("helicity_ball", 1.0).level(p8, mask.apply(u0)))
        f = ForcingSpec.single_shell(8, 1, 1.2)
        grid = TimeGrid(0.05, 1e-3)
        lam = 1e-2
        traj, g, rep = simulate_closed_loop(
            p8, u0, f, "penalty", K, grid, mask=mask, penalty=PenaltyConfig(lam)
        )
        # recompute the law at the pre-relaxation states: step the recorded
        # state forward without control, then apply the penalty formula
        from sabrashell._kernels import step_si_euler

        k = wavenumbers(p8)
        fgrid = f.sample(grid.n_steps, 8)
        j = grid.n_steps - 1
        u_mid = step_si_euler(k, p8.a, p8.b, p8.nu, grid.dt, traj.states[j], fgrid[j])
        want = penalty_feedback(p8, u_mid, K, mask, PenaltyConfig(lam))
        assert np.abs(g).max() > 0  # the law actually engaged during the run
        assert np.allclose(g[j], want, rtol=1e-12, atol=1e-14)

    def test_report_matches_post_hoc_recomputation(self, p8):
        u0 = random_state(p8, 21, amplitude=0.02)
        rho = 2.0 * enstrophy_norm(p8, u0)
        K = ConstraintSet("enstrophy_ball", rho)
        f = ForcingSpec.single_shell(8, 2, 1.0 + 0.5j)
        grid = TimeGrid(0.2, 1e-3)
        traj, g, rep = simulate_closed_loop(p8, u0, f, "enstrophy", K, grid)
        inv = invariance_report(p8, traj, K)
        assert inv.integral_d2 == rep.integral_d2
        assert inv.max_excess == rep.max_excess
        assert inv.fraction_inside == rep.fraction_inside


class TestInvarianceReport:
    def test_inside_trajectory(self, p8):
        K = ConstraintSet("enstrophy_ball", 100.0)
        grid = TimeGrid(0.1, 0.01)
        traj = simulate(p8, random_state(p8, 2, 0.05), ForcingSpec(), None, grid)
        rep = invariance_report(p8, traj, K)
        assert rep.max_excess == 0.0
        assert rep.fraction_inside == 1.0
        assert rep.integral_d2 == 0.0

    def test_detects_exit(self, p8):
        u0 = random_state(p8, 21, amplitude=0.02)
        K = ConstraintSet("enstrophy_ball", 2.0 * enstrophy_norm(p8, u0))
        f = ForcingSpec.single_shell(8, 2, 1.0 + 0.5j)
        grid = TimeGrid(0.5, 1e-3)
        rep = invariance_report(p8, simulate(p8, u0, f, None, grid), K)
        assert rep.max_excess > 0
        assert rep.fraction_inside < 1.0
        assert rep.integral_d2 > 0


class TestModeMask:
    def test_apply(self):
        mask = ModeMask((2, 4))
        u = np.arange(1, 6).astype(np.complex128)
        out = mask.apply(u)
        assert np.array_equal(out, [0, 2, 0, 4, 0])

    def test_validation(self):
        with pytest.raises(ValueError):
            ModeMask(())
        with pytest.raises(ValueError):
            ModeMask((0, 1))
        with pytest.raises(ValueError):
            ModeMask((9,)).apply(np.zeros(4, np.complex128))
