import math

import numpy as np
import pytest

from shrinklab import (
    IntegratorConfig,
    OutOfRangeError,
    PhysConsts,
    ProfileState,
    TerminationKind,
    dense_eval,
    integrate,
    integrate_fixed,
    integrate_rhs,
)


def exp_decay(r, y):
    return [-y[0]]


def exp_growth(r, y):
    return [y[0]]


class TestConfigValidation:
    def test_defaults_are_valid(self):
        IntegratorConfig()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"rtol": 0.0},
            {"atol": -1.0},
            {"h_min": 0.0},
            {"h_min": 2.0, "h_max": 1.0},
            {"h_init": 1e-20},  # below h_min
            {"r_max": -1.0},
            {"max_steps": 0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            IntegratorConfig(**kwargs)


class TestStationary:
    def test_profile_constant_solution_unchanged(self, consts_sim):
        st = ProfileState(r=1e-3, p=1.0, u=0.0, v=0.0, theta=0.0, s=0.0)
        traj = integrate(st, consts_sim, IntegratorConfig())
        assert traj.termination.kind == TerminationKind.REACHED_RMAX
        np.testing.assert_allclose(traj.final_state, [1.0, 0, 0, 0, 0], atol=1e-12)

    def test_dense_eval_returns_initial_state_everywhere(self, stationary_traj):
        for r in (1e-3, 0.02, 1.7, 49.0, 50.0):
            st = dense_eval(stationary_traj, r)
            assert st.p == 1.0
            assert st.u == st.v == st.theta == st.s == 0.0


class TestManufacturedProblems:
    def test_exponential_decay_final_value(self):
        cfg = IntegratorConfig(rtol=1e-8, atol=1e-14, r_max=10.0)
        traj = integrate_rhs(exp_decay, 1e-3, [1.0], cfg)
        assert traj.termination.kind == TerminationKind.REACHED_RMAX
        exact = math.exp(-(10.0 - 1e-3))
        assert abs(traj.final_state[0] - exact) / exact <= 10.0 * cfg.rtol

    def test_blowup_event_location(self):
        # y' = y from y(0.1) = 1 crosses the threshold e^0.9 at exactly r = 1
        cfg = IntegratorConfig(
            rtol=1e-10, atol=1e-12, r_max=5.0, blowup_threshold=math.exp(0.9)
        )
        traj = integrate_rhs(exp_growth, 0.1, [1.0], cfg)
        assert traj.termination.kind == TerminationKind.BLOWUP
        assert traj.r_end == pytest.approx(1.0, abs=1e-8)

    def test_blowup_state_norm_matches_threshold(self):
        cfg = IntegratorConfig(
            rtol=1e-10, atol=1e-12, r_max=5.0, blowup_threshold=math.exp(0.9)
        )
        traj = integrate_rhs(exp_growth, 0.1, [1.0], cfg)
        norm = abs(traj.final_state[0])
        assert norm == pytest.approx(cfg.blowup_threshold, rel=1e-6)

    def test_dense_output_accuracy(self):
        cfg = IntegratorConfig(rtol=1e-8, atol=1e-14, r_max=5.0)
        traj = integrate_rhs(exp_decay, 0.1, [1.0], cfg)
        rng = np.random.RandomState(7)
        worst = 0.0
        for r in rng.uniform(0.1, 5.0, 100):
            exact = math.exp(-(r - 0.1))
            worst = max(worst, abs(traj.eval(r)[0] - exact) / exact)
        assert worst <= 100.0 * cfg.rtol

    def test_fixed_step_convergence_order(self):
        lam = 10.0
        f = lambda r, y: [lam * y[0]]
        r0, r1 = 0.1, 1.1
        exact = math.exp(lam * (r1 - r0))
        hs = [1e-2, 5e-3, 2.5e-3, 1.25e-3]
        errs = []
        for h in hs:
            n = round((r1 - r0) / h)
            y = integrate_fixed(f, r0, [1.0], r1, n)
            errs.append(abs(y[0] - exact) / exact)
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert 4.8 <= slope <= 5.2

    def test_tolerance_monotonicity(self):
        exact = math.exp(-(10.0 - 0.1))
        prev = None
        for k in range(11):
            cfg = IntegratorConfig(rtol=1e-5 * 2.0**-k, atol=1e-9 * 2.0**-k, r_max=10.0)
            traj = integrate_rhs(exp_decay, 0.1, [1.0], cfg)
            err = abs(traj.final_state[0] - exact)
            if prev is not None:
                assert err <= prev
            prev = err

    def test_vector_system(self):
        # harmonic pair (cos, -sin) checks multi-component stepping
        f = lambda r, y: [y[1], -y[0]]
        cfg = IntegratorConfig(rtol=1e-10, atol=1e-12, r_max=0.1 + math.pi)
        traj = integrate_rhs(f, 0.1, [1.0, 0.0], cfg)
        np.testing.assert_allclose(traj.final_state, [-1.0, 0.0], atol=1e-8)


class TestTerminations:
    def test_step_budget_exhausted(self):
        cfg = IntegratorConfig(max_steps=5, r_max=1e9, h_max=1e-3)
        traj = integrate_rhs(exp_decay, 0.1, [1.0], cfg)
        assert traj.termination.kind == TerminationKind.STEP_BUDGET
        assert traj.attempt_count == 5

    def test_nonfinite_rhs_terminates(self):
        def f(r, y):
            return [1.0 / (r - 1.0)] if r < 1.0 else [math.inf]

        cfg = IntegratorConfig(r_max=2.0)
        traj = integrate_rhs(f, 0.1, [0.0], cfg)
        assert traj.termination.kind in (
            TerminationKind.NONFINITE,
            TerminationKind.STEP_UNDERFLOW,
        )
        assert traj.r_end <= 1.0 + 1e-6

    def test_blowup_at_launch(self):
        cfg = IntegratorConfig(blowup_threshold=1.0)
        traj = integrate_rhs(exp_growth, 0.5, [2.0], cfg)
        assert traj.termination.kind == TerminationKind.BLOWUP
        assert traj.step_count == 0
        assert traj.r_end == 0.5

    def test_zero_length_horizon(self):
        cfg = IntegratorConfig(r_max=0.5)
        traj = integrate_rhs(exp_decay, 0.5, [1.0], cfg)
        assert traj.termination.kind == TerminationKind.REACHED_RMAX
        assert traj.step_count == 0
        assert traj.eval(0.5)[0] == 1.0

    def test_profile_singular_launch(self, consts_sim):
        st = ProfileState(r=1.0, p=1.0, u=-0.5, v=0.0, theta=1.0, s=0.0)
        traj = integrate(st, consts_sim, IntegratorConfig())
        assert traj.termination.kind == TerminationKind.SINGULARITY
        assert traj.step_count == 0
        assert traj.r_end == 1.0


class TestTrajectoryStructure:
    @pytest.fixture(scope="class")
    def traj(self):
        cfg = IntegratorConfig(rtol=1e-8, atol=1e-10, r_max=4.0)
        return integrate_rhs(exp_decay, 0.1, [1.0], cfg)

    def test_radii_strictly_increasing(self, traj):
        assert np.all(np.diff(traj.r_left) > 0)
        assert np.all(traj.r_right > traj.r_left)

    def test_steps_contiguous(self, traj):
        np.testing.assert_array_equal(traj.r_left[1:], traj.r_right[:-1])
        np.testing.assert_array_equal(traj.y_left[1:], traj.y_right[:-1])

    def test_dense_exact_at_endpoints(self, traj):
        for j in (0, traj.step_count // 2, traj.step_count - 1):
            assert traj.eval(traj.r_left[j])[0] == traj.y_left[j][0]
            assert traj.eval(traj.r_right[j])[0] == traj.y_right[j][0]

    def test_out_of_range_raises(self, traj):
        with pytest.raises(OutOfRangeError):
            traj.eval(0.05)
        with pytest.raises(OutOfRangeError):
            traj.eval(4.0 + 1e-9)

    def test_derivative_consistent_with_rhs_at_nodes(self, traj):
        # the interpolant derivative at a left endpoint is the stage-1 slope
        j = traj.step_count // 2
        r = traj.r_left[j]
        assert traj.eval_derivative(r)[0] == traj.stages[j, 0, 0]

    def test_determinism_bitwise(self):
        cfg = IntegratorConfig(rtol=1e-8, atol=1e-10, r_max=4.0)
        a = integrate_rhs(exp_decay, 0.1, [1.0], cfg)
        b = integrate_rhs(exp_decay, 0.1, [1.0], cfg)
        assert np.array_equal(a.y_right, b.y_right)
        assert np.array_equal(a.r_right, b.r_right)
        assert a.termination == b.termination


class TestProfileSignCrossings:
    def test_theta_crossing_recorded(self, consts_sim):
        # inflow launch at fixed velocity drives the temperature negative
        from shrinklab import CavitatingParams, cavitating_state_fixed_velocity

        st = cavitating_state_fixed_velocity(
            CavitatingParams(delta=1e-3, p_delta=0.5, alpha=0.1, theta0=1.0)
        )
        traj = integrate(st, consts_sim, IntegratorConfig())
        sc = traj.first_sign_crossings
        assert sc.p is None
        assert sc.theta is not None
        # theta really does change sign at the recorded radius
        eps = 1e-6 * sc.theta
        assert traj.eval(sc.theta - eps)[3] > 0 or traj.eval(sc.theta + eps)[3] < 0

    def test_no_crossings_on_stationary(self, stationary_traj):
        sc = stationary_traj.first_sign_crossings
        assert sc.p is None and sc.theta is None
