"""Profile equations for radial backward self-similar compressible flow.

The unknowns are the density profile P, the radial velocity profile U and
the temperature profile Theta of a radially symmetric, backward self-similar
solution of the compressible Navier-Stokes system (ideal gas law, Newtonian
stress, Fourier heat flux).  Written as a first-order system in the state

    y = (P, U, U', Theta, Theta')

the three profile equations close into explicit expressions for
(P', U'', Theta'') as long as the continuity factor r/2 + U stays away
from zero.  That factor is the characteristic speed of the density
transport; the system degenerates where it vanishes, and all evaluations
guard against that region instead of integrating through it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_GUARD_EPS = 1e-10


class SingularityError(Exception):
    """State is inside the guard band around the degeneracy U = -r/2."""


class NonFiniteError(Exception):
    """An input or computed value is NaN or infinite."""


@dataclass(frozen=True)
class PhysConsts:
    """Constitutive constants of the fluid plus the spatial dimension.

    c_v     heat capacity (Joule's law e = c_v * theta), > 0
    r_gas   ideal gas constant (pressure = rho * r_gas * theta), > 0
    kappa   thermal conductivity (Fourier's law), > 0
    mu      shear viscosity, > 0
    lam     second Lame coefficient, constrained by 2*mu + d*lam >= 0
    d       spatial dimension, integer >= 1
    """

    c_v: float = 1.0
    r_gas: float = 1.0
    kappa: float = 1.0
    mu: float = 2.0
    lam: float = 1.0
    d: int = 3

    def __post_init__(self):
        if not all(
            math.isfinite(x) for x in (self.c_v, self.r_gas, self.kappa, self.mu, self.lam)
        ):
            raise NonFiniteError("non-finite physical constant")
        if self.c_v <= 0 or self.r_gas <= 0 or self.kappa <= 0:
            raise ValueError("c_v, r_gas and kappa must be positive")
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.d < 1 or int(self.d) != self.d:
            raise ValueError("d must be an integer >= 1")
        if 2.0 * self.mu + self.d * self.lam < 0:
            raise ValueError("Lame condition 2*mu + d*lam >= 0 violated")

    @property
    def nu(self) -> float:
        """Effective longitudinal viscosity 2*mu + lam (positive)."""
        return 2.0 * self.mu + self.lam


@dataclass(frozen=True)
class ProfileState:
    """Profile values at one radius: (r, P, U, U', Theta, Theta').

    P and Theta are allowed to be negative: trajectories of interest do
    leave the physical cone, and classification relies on seeing that
    happen rather than clipping it.
    """

    r: float
    p: float
    u: float
    v: float
    theta: float
    s: float

    def __post_init__(self):
        vals = (self.r, self.p, self.u, self.v, self.theta, self.s)
        if not all(math.isfinite(x) for x in vals):
            raise NonFiniteError("non-finite profile state component")
        if self.r <= 0:
            raise ValueError("radius must be positive")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.p, self.u, self.v, self.theta, self.s)


@dataclass(frozen=True)
class RhsDerivative:
    """Radial derivatives (P', U', U'', Theta', Theta'') of a ProfileState."""

    dp: float
    du: float
    dv: float
    dtheta: float
    ds: float

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.dp, self.du, self.dv, self.dtheta, self.ds)


def rhs_components(
    r: float,
    p: float,
    u: float,
    v: float,
    theta: float,
    s: float,
    consts: PhysConsts,
    guard_eps: float = DEFAULT_GUARD_EPS,
) -> tuple[float, float, float, float, float]:
    """Scalar core of :func:`rhs`, shared with the integrator backends.

    Raises SingularityError inside the guard band |r/2 + u| <= guard_eps*r
    and NonFiniteError on non-finite inputs or outputs.  The arithmetic
    here is mirrored verbatim by the compiled kernel; keep expression
    order unchanged.
    """
    if not (
        math.isfinite(r)
        and math.isfinite(p)
        and math.isfinite(u)
        and math.isfinite(v)
        and math.isfinite(theta)
        and math.isfinite(s)
    ):
        raise NonFiniteError("non-finite state passed to rhs")

    w = r * 0.5 + u
    if abs(w) <= guard_eps * r:
        raise SingularityError(f"continuity factor r/2 + U ~ 0 at r={r!r}")

    dm1 = float(consts.d - 1)
    nu = consts.nu
    div_term = v + dm1 * u / r

    dp = -(p * div_term) / w
    du = v
    dv = (
        (0.5 * p * u + p * w * v + consts.r_gas * (dp * theta + p * s)) / nu
        - dm1 * v / r
        + dm1 * u / (r * r)
    )
    dtheta = s
    ds = (
        consts.c_v * p * theta
        + consts.c_v * p * w * s
        + consts.r_gas * p * theta * div_term
        - 2.0 * consts.mu * (v * v + dm1 * (u * u) / (r * r))
        - consts.lam * div_term * div_term
    ) / consts.kappa - dm1 * s / r

    if not (math.isfinite(dp) and math.isfinite(dv) and math.isfinite(ds)):
        raise NonFiniteError("non-finite derivative computed by rhs")
    return (dp, du, dv, dtheta, ds)


def rhs(
    state: ProfileState, consts: PhysConsts, guard_eps: float = DEFAULT_GUARD_EPS
) -> RhsDerivative:
    """First-order right-hand side of the profile system.

    The continuity equation is solved for P', the momentum balance for U''
    and the temperature balance for Theta'', with P' substituted from the
    continuity reduction so the closure is consistent.
    """
    return RhsDerivative(
        *rhs_components(
            state.r, state.p, state.u, state.v, state.theta, state.s, consts, guard_eps
        )
    )


def _require_finite(name: str, *vals: float) -> None:
    for x in vals:
        if not math.isfinite(x):
            raise NonFiniteError(f"non-finite value in {name}")


def residual_continuity(
    state: ProfileState, deriv: RhsDerivative, consts: PhysConsts
) -> float:
    """Raw left-hand side of the continuity equation; zero for exact solutions.

        (1/2) r P' + P' U + P (U' + (d-1) U / r)
    """
    r, p, u, v = state.r, state.p, state.u, state.v
    dm1 = float(consts.d - 1)
    res = 0.5 * r * deriv.dp + deriv.dp * u + p * (v + dm1 * u / r)
    _require_finite("residual_continuity", res)
    return res


def residual_momentum(
    state: ProfileState, deriv: RhsDerivative, consts: PhysConsts
) -> float:
    """Momentum balance residual, with U'' and P' taken from `deriv`.

        (1/2) P U + P (r/2 + U) U' + (P R Theta)'
            - nu (U'' + (d-1)/r U' - (d-1)/r^2 U)
    """
    r, p, u, v, theta, s = state.r, state.p, state.u, state.v, state.theta, state.s
    dm1 = float(consts.d - 1)
    pressure_grad = consts.r_gas * (deriv.dp * theta + p * s)
    res = (
        0.5 * p * u
        + p * (r * 0.5 + u) * v
        + pressure_grad
        - consts.nu * (deriv.dv + dm1 * v / r - dm1 * u / (r * r))
    )
    _require_finite("residual_momentum", res)
    return res


def residual_temperature(
    state: ProfileState, deriv: RhsDerivative, consts: PhysConsts
) -> float:
    """Temperature balance residual, with Theta'' taken from `deriv`.

        c_v P Theta + c_v P (r/2 + U) Theta' + P R Theta (U' + (d-1)/r U)
            - kappa (Theta'' + (d-1)/r Theta')
            - 2 mu ((U')^2 + (d-1)/r^2 U^2) - lam (U' + (d-1)/r U)^2
    """
    r, p, u, v, theta, s = state.r, state.p, state.u, state.v, state.theta, state.s
    dm1 = float(consts.d - 1)
    div_term = v + dm1 * u / r
    res = (
        consts.c_v * p * theta
        + consts.c_v * p * (r * 0.5 + u) * s
        + consts.r_gas * p * theta * div_term
        - consts.kappa * (deriv.ds + dm1 * s / r)
        - 2.0 * consts.mu * (v * v + dm1 * (u * u) / (r * r))
        - consts.lam * div_term * div_term
    )
    _require_finite("residual_temperature", res)
    return res
