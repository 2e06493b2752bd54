"""Shared test utilities: independent oracles and profile wrappers."""

import random

import numpy as np

from shrinklab import PhysConsts, ProfileState


def raw_system_oracle(state: ProfileState, consts: PhysConsts) -> np.ndarray:
    """Direct linear solve of the three profile equations in raw form.

    Independent of the reduced right-hand side: rows use the unreduced
    momentum and energy balances with full product-rule expansions, and
    the unknown derivative vector (P', U'', Theta'') is obtained with a
    generic 3x3 linear solve instead of sequential substitution.
    """
    r, p, u, v, th, s = state.r, state.p, state.u, state.v, state.theta, state.s
    dm1 = consts.d - 1.0
    cv, R, kap, mu, lam = consts.c_v, consts.r_gas, consts.kappa, consts.mu, consts.lam
    nu = 2.0 * mu + lam

    M = np.zeros((3, 3))
    b = np.zeros(3)

    # mass balance: (1/2) r P' + P' U + P (U' + (d-1)/r U) = 0
    M[0, 0] = 0.5 * r + u
    b[0] = -(p * (v + dm1 * u / r))

    # momentum, unreduced:
    #   (1/2)PU + (1/2) r (PU)' + (PU^2)' + (d-1)/r PU^2 + (P R Th)'
    #       = nu (U'' + (d-1)/r U' - (d-1)/r^2 U)
    M[1, 0] = 0.5 * r * u + u * u + R * th
    M[1, 1] = -nu
    b[1] = -(
        0.5 * p * u
        + 0.5 * r * (p * v)
        + 2.0 * p * u * v
        + dm1 / r * p * u * u
        + R * p * s
        - nu * (dm1 / r * v - dm1 / (r * r) * u)
    )

    # energy, unreduced, with E = U^2/2 + c_v Theta:
    #   P E + (1/2) r (P E)' + (U P (E + R Th))' + (d-1)/r U P (E + R Th)
    #       - kap (Th'' + (d-1)/r Th')
    #       = 2 mu ((U')^2 + (d-1)/r^2 U^2) + lam (U' + (d-1)/r U)^2
    #         + nu (U'' + (d-1)/r U' - (d-1)/r^2 U) U
    E = 0.5 * u * u + cv * th
    Ep = u * v + cv * s  # E' minus its P'-free part (E' has no P' term)
    M[2, 0] = 0.5 * r * E + u * (E + R * th)
    M[2, 1] = -nu * u
    M[2, 2] = -kap
    b[2] = -(
        p * E
        + 0.5 * r * (p * Ep)
        + v * p * (E + R * th)
        + u * p * (Ep + R * s)
        + dm1 / r * (u * p * (E + R * th))
        - kap * (dm1 / r * s)
        - 2.0 * mu * (v * v + dm1 / (r * r) * u * u)
        - lam * (v + dm1 / r * u) ** 2
        - nu * (dm1 / r * v - dm1 / (r * r) * u) * u
    )

    dp, dv, ds = np.linalg.solve(M, b)
    return np.array([dp, v, dv, s, ds])


def random_admissible_state(rng: random.Random, span: float = 10.0) -> ProfileState:
    """Random state away from the continuity degeneracy."""
    while True:
        r = rng.uniform(0.05, 10.0)
        u = rng.uniform(-span, span)
        if abs(r / 2 + u) > 1e-3 * r:
            break
    return ProfileState(
        r=r,
        p=rng.uniform(-span, span),
        u=u,
        v=rng.uniform(-span, span),
        theta=rng.uniform(-span, span),
        s=rng.uniform(-span, span),
    )


def random_consts(rng: random.Random) -> PhysConsts:
    d = rng.choice([1, 2, 3, 4])
    mu = rng.uniform(0.1, 3.0)
    lam = rng.uniform(-2.0 * mu / d * 0.99, 3.0)
    return PhysConsts(
        c_v=rng.uniform(0.1, 3.0),
        r_gas=rng.uniform(0.1, 3.0),
        kappa=rng.uniform(0.1, 3.0),
        mu=mu,
        lam=lam,
        d=d,
    )


class TailScaledDensity:
    """Profile wrapper scaling the density channel beyond the launch radius.

    The launch sample stays intact so the continuity rebuild anchors at the
    true P(delta); every later checkpoint sees the corrupted channel.
    """

    def __init__(self, traj, factor: float):
        self._traj = traj
        self._factor = factor
        self.r0 = traj.r0
        self.r_end = traj.r_end
        self.termination_kind = traj.termination.kind
        self.config = traj.config

    def eval(self, r: float) -> np.ndarray:
        y = self._traj.eval(r)
        if r > self.r0:
            y[0] *= self._factor
        return y


class RescaledProfile:
    """Self-similar rescaling (P, U, Theta)(r) -> (P, lam U, lam^2 Theta)(lam r)."""

    def __init__(self, base, lam: float):
        self._base = base
        self._lam = lam
        self.r0 = base.r0 / lam
        self.r_end = base.r_end / lam
        self.termination_kind = base.termination_kind

    def eval(self, r: float) -> np.ndarray:
        lam = self._lam
        p, u, v, th, s = self._base.eval(lam * r)
        return np.array([p, lam * u, lam * lam * v, lam * lam * th, lam * lam * lam * s])
