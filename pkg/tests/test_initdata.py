import pytest

from shrinklab import (
    CavitatingParams,
    SmoothParams,
    cavitating_state,
    cavitating_state_fixed_velocity,
    rhs,
    residual_continuity,
    residual_momentum,
    residual_temperature,
    smooth_state,
)
from shrinklab.model import RhsDerivative
from shrinklab.initdata import smooth_coefficients


class TestCavitating:
    def test_reference_point(self):
        st = cavitating_state(CavitatingParams(delta=1e-3, p_delta=0.5, alpha=0.1, theta0=1.0))
        assert (st.r, st.p, st.u, st.v, st.theta, st.s) == (1e-3, 0.5, -1e-4, -0.1, 1.0, 0.0)

    def test_small_delta_point(self):
        st = cavitating_state(CavitatingParams(delta=1e-6, p_delta=0.1, alpha=0.1, theta0=1.0))
        assert (st.r, st.p, st.u, st.v, st.theta, st.s) == (1e-6, 0.1, -1e-7, -0.1, 1.0, 0.0)

    def test_degenerates_to_stationary(self):
        st = cavitating_state(CavitatingParams(delta=1e-3, p_delta=1.0, alpha=0.0, theta0=0.0))
        assert (st.p, st.u, st.v, st.theta, st.s) == (1.0, 0.0, 0.0, 0.0, 0.0)

    def test_fixed_velocity_variant(self):
        st = cavitating_state_fixed_velocity(
            CavitatingParams(delta=1e-3, p_delta=0.5, alpha=0.1, theta0=1.0)
        )
        assert (st.u, st.v) == (-0.1, -0.1)

    def test_invariants(self):
        with pytest.raises(ValueError):
            CavitatingParams(delta=0.0, p_delta=1.0, alpha=0.1, theta0=1.0)
        with pytest.raises(ValueError):
            CavitatingParams(delta=1e-3, p_delta=0.0, alpha=0.1, theta0=1.0)

    def test_bit_reproducible(self):
        p = CavitatingParams(delta=1e-3, p_delta=0.7, alpha=0.3, theta0=1.4)
        assert cavitating_state(p) == cavitating_state(p)


class TestSmooth:
    def test_coefficients_at_reference_constants(self, consts_sim):
        a, b = smooth_coefficients(SmoothParams(delta=1e-5, p0=1.0, theta0=1.0), consts_sim)
        assert a == pytest.approx(1.0 / 180.0, rel=1e-15)
        assert b == pytest.approx(1.0 / 6.0, rel=1e-15)

    def test_reference_state(self, consts_sim):
        st = smooth_state(SmoothParams(delta=1e-5, p0=1.0, theta0=1.0), consts_sim)
        assert st.r == 1e-5
        assert st.p == 1.0
        assert st.u == pytest.approx((1.0 / 180.0) * 1e-15, rel=1e-12)
        assert st.v == pytest.approx((1.0 / 60.0) * 1e-10, rel=1e-12)
        assert st.theta == pytest.approx(1.0 + (1.0 / 6.0) * 1e-10, rel=1e-15)
        assert st.s == pytest.approx((1.0 / 3.0) * 1e-5, rel=1e-12)

    def test_coefficient_oracle_alternative_form(self, consts_sim):
        # independent rearrangement of both closed forms
        params = SmoothParams(delta=1e-8, p0=3.0, theta0=1.0)
        a, b = smooth_coefficients(params, consts_sim)
        p0, th0 = params.p0, params.theta0
        cv, R, kap = consts_sim.c_v, consts_sim.r_gas, consts_sim.kappa
        nu = 2.0 * consts_sim.mu + consts_sim.lam
        a_alt = (cv / (30.0 * kap)) * (R * p0 * p0 * th0) / (nu + R * p0 * th0)
        b_alt = (cv / (6.0 * kap)) * p0 * th0
        assert a == pytest.approx(a_alt, rel=1e-12)
        assert b == pytest.approx(b_alt, rel=1e-12)
        assert a == pytest.approx(3.0 / 80.0, rel=1e-12)
        assert b == pytest.approx(0.5, rel=1e-12)

    def test_vanishing_temperature_limit(self, consts_sim):
        st = smooth_state(SmoothParams(delta=1e-5, p0=1.0, theta0=1e-300), consts_sim)
        assert st.p == 1.0
        assert abs(st.u) < 1e-300
        assert abs(st.v) < 1e-300
        assert st.theta == pytest.approx(1e-300)
        assert abs(st.s) < 1e-300

    def test_invariants(self):
        with pytest.raises(ValueError):
            SmoothParams(delta=1e-5, p0=-1.0, theta0=1.0)
        with pytest.raises(ValueError):
            SmoothParams(delta=1e-5, p0=1.0, theta0=0.0)

    def test_expansion_residuals_vanish_linearly_in_delta(self, consts_sim):
        # the leading-order launch data satisfy the equations up to O(delta):
        # evaluate the equation residuals with the ansatz derivatives
        # (P' from the mass balance, U'' = 6 A delta, Theta'' = 2 B)
        worst = 0.0
        for k in range(3, 9):
            delta = 10.0**-k
            params = SmoothParams(delta=delta, p0=1.0, theta0=1.0)
            st = smooth_state(params, consts_sim)
            a, b = smooth_coefficients(params, consts_sim)
            dp = rhs(st, consts_sim).dp
            ansatz = RhsDerivative(dp=dp, du=st.v, dv=6.0 * a * delta, dtheta=st.s, ds=2.0 * b)
            res = max(
                abs(residual_continuity(st, ansatz, consts_sim)),
                abs(residual_momentum(st, ansatz, consts_sim)),
                abs(residual_temperature(st, ansatz, consts_sim)),
            )
            worst = max(worst, res / delta)
        assert worst <= 1.0  # measured ~1e-5 at delta=1e-3; generous margin
