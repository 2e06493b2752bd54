import math
import random

import numpy as np
import pytest

from helpers import random_admissible_state, random_consts, raw_system_oracle
from shrinklab import (
    NonFiniteError,
    PhysConsts,
    ProfileState,
    RhsDerivative,
    SingularityError,
    residual_continuity,
    residual_momentum,
    residual_temperature,
    rhs,
)
from shrinklab.model import rhs_components


class TestPhysConsts:
    def test_nu_accessor(self, consts_sim):
        assert consts_sim.nu == 5.0

    def test_positivity_checks(self):
        with pytest.raises(ValueError):
            PhysConsts(c_v=0.0)
        with pytest.raises(ValueError):
            PhysConsts(kappa=-1.0)
        with pytest.raises(ValueError):
            PhysConsts(mu=0.0)

    def test_lame_condition(self):
        # 2*mu + d*lam >= 0 required; boundary is allowed
        PhysConsts(mu=1.0, lam=-2.0 / 3.0, d=3)
        with pytest.raises(ValueError):
            PhysConsts(mu=1.0, lam=-0.7, d=3)

    def test_dimension_must_be_positive_integer(self):
        PhysConsts(d=1)
        with pytest.raises(ValueError):
            PhysConsts(d=0)


class TestProfileState:
    def test_requires_positive_radius(self):
        with pytest.raises(ValueError):
            ProfileState(r=0.0, p=1.0, u=0.0, v=0.0, theta=0.0, s=0.0)

    def test_rejects_non_finite(self):
        with pytest.raises(NonFiniteError):
            ProfileState(r=1.0, p=math.inf, u=0.0, v=0.0, theta=0.0, s=0.0)

    def test_negative_density_and_temperature_allowed(self):
        st = ProfileState(r=1.0, p=-0.5, u=0.0, v=0.0, theta=-2.0, s=0.0)
        assert st.p == -0.5


class TestRhs:
    def test_constant_state_is_stationary(self, consts_sim):
        st = ProfileState(r=1.0, p=2.0, u=0.0, v=0.0, theta=0.0, s=0.0)
        d = rhs(st, consts_sim)
        assert d.as_tuple() == (0.0, 0.0, 0.0, 0.0, 0.0)

    def test_stationary_family_any_radius_density_dimension(self):
        rng = random.Random(11)
        for _ in range(100):
            consts = random_consts(rng)
            st = ProfileState(
                r=rng.uniform(1e-6, 50.0), p=rng.uniform(1e-3, 100.0),
                u=0.0, v=0.0, theta=0.0, s=0.0,
            )
            assert rhs(st, consts).as_tuple() == (0.0, 0.0, 0.0, 0.0, 0.0)

    def test_exact_degeneracy_raises(self, consts_sim):
        st = ProfileState(r=1.0, p=1.0, u=-0.5, v=0.0, theta=1.0, s=0.0)
        with pytest.raises(SingularityError):
            rhs(st, consts_sim)

    def test_guard_band_is_relative_to_radius(self, consts_sim):
        st = ProfileState(r=1.0, p=1.0, u=-0.5 + 1e-12, v=0.0, theta=1.0, s=0.0)
        with pytest.raises(SingularityError):
            rhs(st, consts_sim, guard_eps=1e-10)
        # same state passes with a tighter guard
        rhs(st, consts_sim, guard_eps=1e-14)

    def test_non_finite_input_raises(self, consts_sim):
        with pytest.raises(NonFiniteError):
            rhs_components(1.0, math.nan, 0.0, 0.0, 0.0, 0.0, consts_sim)

    def test_known_point_values(self, consts_sim):
        # independent hand reduction at this state, confirmed by the raw
        # system oracle: dp = -1/6, dv = 547/1500, ds = 0.97
        st = ProfileState(r=1.0, p=1.0, u=0.1, v=-0.1, theta=1.0, s=0.0)
        d = rhs(st, consts_sim)
        assert d.dp == pytest.approx(-1.0 / 6.0, rel=1e-14)
        assert d.du == -0.1
        assert d.dv == pytest.approx(547.0 / 1500.0, rel=1e-14)
        assert d.dtheta == 0.0
        assert d.ds == pytest.approx(0.97, rel=1e-14)
        oracle = raw_system_oracle(st, consts_sim)
        np.testing.assert_allclose(np.array(d.as_tuple()), oracle, rtol=1e-12)

    def test_oracle_equivalence_1000_random_states(self):
        rng = random.Random(2024)
        worst = 0.0
        for _ in range(1000):
            consts = random_consts(rng)
            st = random_admissible_state(rng)
            got = np.array(rhs(st, consts).as_tuple())
            want = raw_system_oracle(st, consts)
            rel = np.max(np.abs(got - want)) / max(1.0, np.max(np.abs(want)))
            worst = max(worst, rel)
        assert worst <= 1e-12

    def test_density_sign_law(self):
        # where r/2 + u > 0: sign(dp) = -sign(div term) * sign(p)
        rng = random.Random(5)
        sgn = lambda x: (x > 0) - (x < 0)
        checked = 0
        while checked < 300:
            consts = random_consts(rng)
            st = random_admissible_state(rng)
            if st.r / 2 + st.u <= 0:
                continue
            d = rhs(st, consts)
            div = st.v + (consts.d - 1) * st.u / st.r
            assert sgn(d.dp) == -sgn(div) * sgn(st.p)
            checked += 1


class TestResiduals:
    def test_trivial_state_residuals_zero(self, consts_sim):
        st = ProfileState(r=1.0, p=2.0, u=0.0, v=0.0, theta=0.0, s=0.0)
        zero = RhsDerivative(0.0, 0.0, 0.0, 0.0, 0.0)
        assert residual_continuity(st, zero, consts_sim) == 0.0
        assert residual_momentum(st, zero, consts_sim) == 0.0
        assert residual_temperature(st, zero, consts_sim) == 0.0

    def test_residuals_vanish_on_rhs_closure(self):
        rng = random.Random(77)
        for _ in range(500):
            consts = random_consts(rng)
            st = random_admissible_state(rng)
            d = rhs(st, consts)
            scale = _residual_scale(st, d, consts)
            assert abs(residual_continuity(st, d, consts)) <= 1e-10 * scale
            assert abs(residual_momentum(st, d, consts)) <= 1e-10 * scale
            assert abs(residual_temperature(st, d, consts)) <= 1e-10 * scale

    def test_continuity_residual_linear_in_dp(self, consts_sim):
        st = ProfileState(r=1.0, p=1.0, u=0.1, v=-0.1, theta=1.0, s=0.0)
        d = rhs(st, consts_sim)
        bumped = RhsDerivative(d.dp + 1e-3, d.du, d.dv, d.dtheta, d.ds)
        res = residual_continuity(st, bumped, consts_sim)
        assert res == pytest.approx(1e-3 * (st.r / 2 + st.u), rel=1e-9)

    def test_momentum_temperature_zero_for_closure_order_one_states(self, consts_sim):
        rng = random.Random(9)
        for _ in range(100):
            st = random_admissible_state(rng, span=1.0)
            d = rhs(st, consts_sim)
            assert abs(residual_momentum(st, d, consts_sim)) <= 1e-12 * _residual_scale(
                st, d, consts_sim
            )
            assert abs(residual_temperature(st, d, consts_sim)) <= 1e-12 * _residual_scale(
                st, d, consts_sim
            )


def _residual_scale(st: ProfileState, d: RhsDerivative, consts: PhysConsts) -> float:
    """Magnitude of the largest additive term across the three equations."""
    r, p, u, v, theta, s = st.r, st.p, st.u, st.v, st.theta, st.s
    dm1 = consts.d - 1.0
    div = v + dm1 * u / r
    terms = [
        1.0,
        0.5 * r * d.dp, d.dp * u, p * div,
        0.5 * p * u, p * (r / 2 + u) * v,
        consts.r_gas * d.dp * theta, consts.r_gas * p * s,
        consts.nu * d.dv, consts.nu * dm1 * v / r, consts.nu * dm1 * u / (r * r),
        consts.c_v * p * theta, consts.c_v * p * (r / 2 + u) * s,
        consts.r_gas * p * theta * div,
        consts.kappa * d.ds, consts.kappa * dm1 * s / r,
        2 * consts.mu * (v * v + dm1 * u * u / (r * r)),
        consts.lam * div * div,
    ]
    return max(abs(t) for t in terms)
