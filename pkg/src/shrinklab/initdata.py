"""Launch states at a small radius delta for the two initial-data regimes.

The profile system is singular at r = 0, so integrations start from
closed-form near-origin data evaluated at r = delta.  Two regimes are
supported:

* cavitating: density P_delta, inflow velocity with slope -alpha
  (U = -alpha*r near the origin), temperature theta0 with zero slope;
* smooth: constant density and temperature at the center force the
  velocity to be cubic in r, with the cubic coefficient and the quadratic
  temperature correction fixed by the equations themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import PhysConsts, ProfileState

DEFAULT_DELTA_CAVITATING = 1e-3
DEFAULT_DELTA_SMOOTH = 1e-5


@dataclass(frozen=True)
class CavitatingParams:
    delta: float = DEFAULT_DELTA_CAVITATING
    p_delta: float = 1.0
    alpha: float = 0.1
    theta0: float = 1.0

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.p_delta <= 0:
            raise ValueError("p_delta must be positive")


@dataclass(frozen=True)
class SmoothParams:
    delta: float = DEFAULT_DELTA_SMOOTH
    p0: float = 1.0
    theta0: float = 1.0

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.p0 <= 0 or self.theta0 <= 0:
            raise ValueError("p0 and theta0 must be positive")


def cavitating_state(params: CavitatingParams) -> ProfileState:
    """Cavitating launch: (delta, P_delta, -alpha*delta, -alpha, theta0, 0)."""
    return ProfileState(
        r=params.delta,
        p=params.p_delta,
        u=-(params.alpha * params.delta),
        v=-params.alpha,
        theta=params.theta0,
        s=0.0,
    )


def cavitating_state_fixed_velocity(params: CavitatingParams) -> ProfileState:
    """Variant reading alpha as the velocity value itself: U(delta) = -alpha.

    The derivative seed stays -alpha as well, so alpha = 0 still degenerates
    to the stationary family.
    """
    return ProfileState(
        r=params.delta,
        p=params.p_delta,
        u=-params.alpha,
        v=-params.alpha,
        theta=params.theta0,
        s=0.0,
    )


def smooth_coefficients(params: SmoothParams, consts: PhysConsts) -> tuple[float, float]:
    """Cubic velocity coefficient A and quadratic temperature coefficient B.

    Near the origin the smooth regime behaves as U = A r^3 and
    Theta = theta0 + B r^2 with

        A = r_gas * p0^2 * theta0 * c_v / (30 * kappa * (nu + r_gas*p0*theta0))
        B = c_v * p0 * theta0 / (6 * kappa)
    """
    a = (consts.r_gas * params.p0 * params.p0 * params.theta0 * consts.c_v) / (
        30.0 * consts.kappa * (consts.nu + consts.r_gas * params.p0 * params.theta0)
    )
    b = consts.c_v * params.p0 * params.theta0 / (6.0 * consts.kappa)
    return (a, b)


def smooth_state(params: SmoothParams, consts: PhysConsts) -> ProfileState:
    """Smooth launch with derivative seeds from the leading expansion terms.

    The system is second order in U and Theta, so launching needs U' and
    Theta' as well; they follow by differentiating the expansion:
    U' = 3 A delta^2 and Theta' = 2 B delta.
    """
    a, b = smooth_coefficients(params, consts)
    d = params.delta
    return ProfileState(
        r=d,
        p=params.p0,
        u=a * (d * d * d),
        v=3.0 * a * (d * d),
        theta=params.theta0 + b * (d * d),
        s=2.0 * b * d,
    )
