"""Analytic diagnostics evaluated along computed profile trajectories.

Everything here consumes dense output only, so the same code runs on real
trajectories and on synthetic tabulated profiles:

* exponential integral weights Z and W (they differ by a constant factor);
* the smallness functional whose littleness forces a trivial profile;
* finite-energy integrals with divergence flags, plus the d-dependent
  identity integral that vanishes identically in dimension two;
* a density cross-check that rebuilds P from the velocity channel by
  direct quadrature of the continuity equation;
* tail fits estimating the far-field constants (P_inf, U_inf, Theta_inf).

Quadrature is adaptive Simpson on the dense interpolant.  The near-origin
contribution [0, delta] of the weight integrals is modeled in closed form
with constant density and a linear velocity ramp, which is exact for
cavitating launches and accurate to O(delta^4) for smooth ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .integrator import TerminationKind, Trajectory
from .model import PhysConsts


class QuadratureFailure(Exception):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class DiagnosticsConfig:
    """gamma must exceed the spatial dimension; checked where d is known."""

    gamma: float
    quad_rtol: float = 1e-8
    tail_window: float = 0.2

    def __post_init__(self):
        if not math.isfinite(self.gamma):
            raise ValueError("gamma must be finite")
        if self.quad_rtol <= 0:
            raise ValueError("quad_rtol must be positive")
        if not 0.0 < self.tail_window < 1.0:
            raise ValueError("tail_window must lie in (0, 1)")


class SyntheticProfile:
    """Closed-form profile exposing the same sampling surface as Trajectory.

    Used for testing diagnostics against quadrature oracles.  The five
    channel functions take a radius and return P, U, U', Theta, Theta'.
    """

    def __init__(
        self,
        r0: float,
        r_end: float,
        p: Callable[[float], float],
        u: Callable[[float], float],
        v: Optional[Callable[[float], float]] = None,
        theta: Optional[Callable[[float], float]] = None,
        s: Optional[Callable[[float], float]] = None,
        termination_kind: TerminationKind = TerminationKind.REACHED_RMAX,
    ):
        if not 0 < r0 < r_end:
            raise ValueError("need 0 < r0 < r_end")
        self.r0 = r0
        self.r_end = r_end
        self._p = p
        self._u = u
        self._v = v or (lambda r: 0.0)
        self._theta = theta or (lambda r: 0.0)
        self._s = s or (lambda r: 0.0)
        self.termination_kind = termination_kind

    def eval(self, r: float) -> np.ndarray:
        return np.array(
            [self._p(r), self._u(r), self._v(r), self._theta(r), self._s(r)]
        )


def _termination_kind(profile) -> TerminationKind:
    if isinstance(profile, Trajectory):
        return profile.termination.kind
    return profile.termination_kind


def _sample_radii(profile, per_step: int = 3, uniform_n: int = 1024) -> np.ndarray:
    """Deterministic sampling grid: step endpoints plus interior points for
    trajectories, a uniform grid for synthetic profiles."""
    if isinstance(profile, Trajectory) and profile.step_count > 0:
        rs = [profile.r0]
        for j in range(profile.step_count):
            rl = profile.r_left[j]
            rr = profile.r_right[j]
            for i in range(1, per_step + 1):
                rs.append(rl + (rr - rl) * i / (per_step + 1))
            rs.append(rr)
        return np.asarray(rs)
    if profile.r_end == profile.r0:
        return np.asarray([profile.r0])
    return np.linspace(profile.r0, profile.r_end, uniform_n)


def _rough_scale(f: Callable[[float], float], a: float, b: float, panels: int = 256) -> float:
    """Coarse composite-Simpson magnitude estimate, used to set the absolute
    tolerance floor of the adaptive pass."""
    if a == b:
        return 0.0
    h = (b - a) / panels
    acc = 0.0
    fl = f(a)
    for i in range(panels):
        xl = a + i * h
        fm = f(xl + 0.5 * h)
        fr = f(xl + h) if i < panels - 1 else f(b)
        acc += abs(h / 6.0 * (fl + 4.0 * fm + fr))
        fl = fr
    return acc if math.isfinite(acc) else 0.0


def _adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    rtol: float,
    atol_total: Optional[float] = None,
    max_depth: int = 48,
) -> float:
    """Adaptive Simpson quadrature of f over [a, b].

    atol_total is the absolute error budget for the whole interval,
    distributed proportionally to subinterval width; it keeps the
    recursion from chasing relative accuracy where the integrand crosses
    zero (e.g. at the corner of an absolute value).  When omitted it is
    derived from a coarse magnitude estimate.
    """
    if a == b:
        return 0.0
    if atol_total is None:
        atol_total = rtol * _rough_scale(f, a, b) + 1e-300
    atol_rate = atol_total / abs(b - a)

    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, fa, b, fb, m, fm, whole, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = f(lm)
        frm = f(rm)
        if not (math.isfinite(flm) and math.isfinite(frm)):
            raise QuadratureFailure(f"non-finite integrand sample in [{a}, {b}]")
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        delta = left + right - whole
        if abs(delta) <= 15.0 * (atol_rate * (b - a) + rtol * abs(left + right)):
            return left + right + delta / 15.0
        if depth <= 0:
            raise QuadratureFailure(f"adaptive Simpson depth exhausted on [{a}, {b}]")
        return recurse(a, fa, m, fm, lm, flm, whole=left, depth=depth - 1) + recurse(
            m, fm, b, fb, rm, frm, whole=right, depth=depth - 1
        )

    fa = f(a)
    fb = f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    for val in (fa, fm, fb):
        if not math.isfinite(val):
            raise QuadratureFailure("non-finite integrand sample")
    whole = simpson(fa, fm, fb, b - a)
    return recurse(a, fa, b, fb, m, fm, whole, max_depth)


def _segmented_quad(f, radii: np.ndarray, rtol: float) -> np.ndarray:
    """Cumulative integral of f from radii[0] to each grid point."""
    out = np.zeros(len(radii))
    total_width = radii[-1] - radii[0]
    scale = _rough_scale(f, float(radii[0]), float(radii[-1]))
    acc = 0.0
    for i in range(1, len(radii)):
        a = float(radii[i - 1])
        b = float(radii[i])
        atol_seg = rtol * scale * ((b - a) / total_width) + 1e-300
        acc += _adaptive_simpson(f, a, b, rtol, atol_total=atol_seg)
        out[i] = acc
    return out


# ---------------------------------------------------------------------------
# Weights.


@dataclass(frozen=True)
class WeightCurves:
    radii: np.ndarray
    z: np.ndarray
    w: np.ndarray
    head_contribution: float  # closed-form [0, delta] part of the shared integral


def weights(profile, consts: PhysConsts, samples: int = 128) -> WeightCurves:
    """Sample Z(r) and W(r) along the profile.

    Both weights scale the same integral of P * (r/2 + U): Z by c_v/kappa
    and W by 1/nu.  The [0, delta] head uses constant density and a linear
    velocity ramp through the origin.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    r0 = profile.r0
    y0 = profile.eval(r0)
    head = y0[0] * r0 * (r0 * 0.5 + y0[1]) / 2.0

    if profile.r_end == r0:
        radii = np.asarray([r0])
        core = np.zeros(1)
    else:
        radii = np.linspace(r0, profile.r_end, max(samples, 2))

        def integrand(r: float) -> float:
            y = profile.eval(r)
            return y[0] * (r * 0.5 + y[1])

        core = _segmented_quad(integrand, radii, rtol=1e-10)

    shared = head + core
    return WeightCurves(
        radii=radii,
        z=(consts.c_v / consts.kappa) * shared,
        w=shared / consts.nu,
        head_contribution=head,
    )


# ---------------------------------------------------------------------------
# Smallness functional.


def smallness_parts(profile, consts: PhysConsts) -> tuple[float, float, float]:
    """Sup of the smallness bracket and of its two summands separately.

    Returns (sup of combined bracket, sup of P*Theta term, sup of P*r*|U|
    term), each over the deterministic sample grid of the profile.
    """
    lo = min(consts.nu, consts.kappa)
    hi = max(consts.nu, consts.kappa)
    sup_c = -math.inf
    sup_t = -math.inf
    sup_u = -math.inf
    for r in _sample_radii(profile):
        y = profile.eval(r)
        t_term = y[0] * y[3] / lo
        u_term = y[0] * r * abs(y[1]) / hi
        c = t_term + u_term
        sup_t = max(sup_t, t_term)
        sup_u = max(sup_u, u_term)
        sup_c = max(sup_c, c)
    return (sup_c, sup_t, sup_u)


def smallness_functional(profile, consts: PhysConsts, cfg: DiagnosticsConfig) -> float:
    """Sup over the computed range of the triviality-forcing functional.

        sup [ P Theta / min(nu, kappa) + P r |U| / max(nu, kappa) ]
            * (gamma + nu/kappa) ** ln(gamma)

    The sup runs over the computed radius range only; callers report that
    range alongside the value.
    """
    if not cfg.gamma > consts.d:
        raise ValueError("gamma must exceed the spatial dimension d")
    sup_c, _, _ = smallness_parts(profile, consts)
    return sup_c * (cfg.gamma + consts.nu / consts.kappa) ** math.log(cfg.gamma)


# ---------------------------------------------------------------------------
# Energy integrals.


def surface_measure_coeff(d: int) -> float:
    """omega_d = 2 pi^(d/2) / Gamma(d/2); equals 2 for d = 1."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@dataclass(frozen=True)
class EnergyIntegral:
    value: float
    divergent: bool


@dataclass(frozen=True)
class EnergyReport:
    theta_abs: EnergyIntegral
    p_theta_abs: EnergyIntegral
    p_theta_u_abs: EnergyIntegral
    p_u_sq: EnergyIntegral
    h1_density: EnergyIntegral
    cubic_scaled: EnergyIntegral  # (1/R) * integral of P |U|^3, reading eps = 1/R
    identity_d: float

    def as_dict(self) -> dict[str, EnergyIntegral]:
        return {
            "theta_abs": self.theta_abs,
            "p_theta_abs": self.p_theta_abs,
            "p_theta_u_abs": self.p_theta_u_abs,
            "p_u_sq": self.p_u_sq,
            "h1_density": self.h1_density,
            "cubic_scaled": self.cubic_scaled,
        }


def energy_report(profile, consts: PhysConsts, cfg: DiagnosticsConfig) -> EnergyReport:
    """Finite-energy integrals over [delta, R] with measure omega_d r^(d-1) dr.

    Each integral carries a divergence flag comparing its mass on the last
    two dyadic subwindows [R/4, R/2] and [R/2, R].  identity_d multiplies
    the energy-density integral by (1 - d/2) and is exactly zero for d = 2.
    """
    d = consts.d
    dm1 = float(d - 1)
    om = surface_measure_coeff(d)
    r0 = profile.r0
    R = profile.r_end

    def measure(r: float) -> float:
        return om * r ** (d - 1) if d > 1 else om

    def make(fn: Callable[[float, np.ndarray], float]) -> Callable[[float], float]:
        def g(r: float) -> float:
            return fn(r, profile.eval(r)) * measure(r)

        return g

    integrands = {
        "theta_abs": make(lambda r, y: abs(y[3])),
        "p_theta_abs": make(lambda r, y: abs(y[0] * y[3])),
        "p_theta_u_abs": make(lambda r, y: abs(y[0] * y[3] * y[1])),
        "p_u_sq": make(lambda r, y: y[0] * y[1] * y[1]),
        "h1_density": make(
            lambda r, y: y[1] * y[1] + y[2] * y[2] + dm1 * (y[1] * y[1]) / (r * r)
        ),
        "cubic": make(lambda r, y: y[0] * abs(y[1]) ** 3),
        "energy_density": make(
            lambda r, y: y[0] * (consts.c_v * y[3] + 0.5 * y[1] * y[1])
        ),
    }

    values: dict[str, float] = {}
    flags: dict[str, bool] = {}
    if R == r0:
        for name in integrands:
            values[name] = 0.0
            flags[name] = False
    else:
        half = 0.5 * R
        quarter = 0.25 * R
        use_windows = quarter > r0
        for name, g in integrands.items():
            try:
                if use_windows:
                    head = _adaptive_simpson(g, r0, quarter, cfg.quad_rtol)
                    prev = _adaptive_simpson(g, quarter, half, cfg.quad_rtol)
                    last = _adaptive_simpson(g, half, R, cfg.quad_rtol)
                    total = head + prev + last
                    tiny = 1e-12 * (1.0 + abs(total))
                    flags[name] = abs(last) > abs(prev) + tiny
                else:
                    total = _adaptive_simpson(g, r0, R, cfg.quad_rtol)
                    flags[name] = False
            except QuadratureFailure:
                # Unresolvable mass is reported as an explicit divergence.
                total = math.nan
                flags[name] = True
            values[name] = total

    return EnergyReport(
        theta_abs=EnergyIntegral(values["theta_abs"], flags["theta_abs"]),
        p_theta_abs=EnergyIntegral(values["p_theta_abs"], flags["p_theta_abs"]),
        p_theta_u_abs=EnergyIntegral(values["p_theta_u_abs"], flags["p_theta_u_abs"]),
        p_u_sq=EnergyIntegral(values["p_u_sq"], flags["p_u_sq"]),
        h1_density=EnergyIntegral(values["h1_density"], flags["h1_density"]),
        cubic_scaled=EnergyIntegral(
            values["cubic"] / R if R > 0 else 0.0, flags["cubic"]
        ),
        identity_d=0.0 if d == 2 else (1.0 - d / 2.0) * values["energy_density"],
    )


# ---------------------------------------------------------------------------
# Continuity quadrature oracle.


def continuity_oracle(
    profile,
    consts: PhysConsts,
    cfg: DiagnosticsConfig,
    checkpoints: int = 50,
    atol: Optional[float] = None,
) -> float:
    """Max relative deviation between the density channel and its rebuild
    from the velocity channel:

        P_oracle(r) = P(delta) * exp( - int_delta^r (U' + (d-1) U/s) / (s/2 + U) ds )

    Requires a trajectory that never hit the continuity degeneracy.
    """
    if _termination_kind(profile) == TerminationKind.SINGULARITY:
        raise ValueError("continuity oracle undefined after a singularity event")
    if atol is None:
        atol = profile.config.atol if isinstance(profile, Trajectory) else 1e-10
    r0 = profile.r0
    R = profile.r_end
    if R == r0:
        return 0.0
    dm1 = float(consts.d - 1)

    def integrand(r: float) -> float:
        y = profile.eval(r)
        return (y[2] + dm1 * y[1] / r) / (r * 0.5 + y[1])

    radii = np.linspace(r0, R, checkpoints)
    cum = _segmented_quad(integrand, radii, rtol=cfg.quad_rtol)
    p0 = profile.eval(r0)[0]
    worst = 0.0
    for i, r in enumerate(radii):
        p_oracle = p0 * math.exp(-cum[i])
        p_num = profile.eval(r)[0]
        err = abs(p_num - p_oracle) / max(abs(p_oracle), atol)
        worst = max(worst, err)
    return worst


# ---------------------------------------------------------------------------
# Tail fits.


@dataclass(frozen=True)
class TailFit:
    p_inf: float
    u_inf: float
    theta_inf: float
    p_drift: float
    u_drift: float
    theta_drift: float


def tail_fit(profile, cfg: DiagnosticsConfig, samples: int = 256) -> Optional[TailFit]:
    """Far-field constants from the tail window: means of P, r U, r^2 Theta.

    Returns None (not applicable) unless the trajectory ran out to its
    radius horizon; fits on a blow-up trajectory would be meaningless.
    """
    if _termination_kind(profile) != TerminationKind.REACHED_RMAX:
        return None
    r0 = profile.r0
    R = profile.r_end
    a = R - cfg.tail_window * (R - r0)
    radii = np.linspace(a, R, samples)
    p_vals = np.empty(samples)
    u_vals = np.empty(samples)
    t_vals = np.empty(samples)
    for i, r in enumerate(radii):
        y = profile.eval(r)
        p_vals[i] = y[0]
        u_vals[i] = r * y[1]
        t_vals[i] = r * r * y[3]

    def fit(vals: np.ndarray) -> tuple[float, float]:
        mean = float(np.mean(vals))
        drift = (vals[-1] - vals[0]) / max(abs(mean), 1e-12)
        return mean, float(drift)

    p_inf, p_drift = fit(p_vals)
    u_inf, u_drift = fit(u_vals)
    t_inf, t_drift = fit(t_vals)
    return TailFit(p_inf, u_inf, t_inf, p_drift, u_drift, t_drift)


# ---------------------------------------------------------------------------
# Aggregate report.


@dataclass
class DiagnosticsReport:
    r_range: tuple[float, float]
    termination: str
    weight_curves: WeightCurves
    smallness_q: float
    smallness_curve: list[tuple[float, float]]
    energy: EnergyReport
    tail: Optional[TailFit]
    p_oracle_max_relerr: Optional[float]
    notes: list[str]


def build_report(
    traj,
    consts: PhysConsts,
    cfg: DiagnosticsConfig,
    gamma_grid: Optional[list[float]] = None,
    weight_samples: int = 128,
) -> DiagnosticsReport:
    """Evaluate every diagnostic on one trajectory and bundle the results."""
    if gamma_grid is None:
        gamma_grid = [cfg.gamma * (2.0**k) for k in range(5)]
    curves = weights(traj, consts, samples=weight_samples)
    sup_c, _, _ = smallness_parts(traj, consts)
    factor = lambda g: (g + consts.nu / consts.kappa) ** math.log(g)  # noqa: E731
    smallness_curve = [(g, sup_c * factor(g)) for g in gamma_grid if g > consts.d]
    energy = energy_report(traj, consts, cfg)
    tail = tail_fit(traj, cfg)
    try:
        oracle_err = continuity_oracle(traj, consts, cfg)
    except (ValueError, QuadratureFailure):
        oracle_err = None
    notes = [
        "weights head [0, delta]: constant density, linear velocity ramp",
        "cubic integral reads the vanishing-scale condition with eps = 1/R",
        "smallness sup taken over the computed radius range only",
    ]
    return DiagnosticsReport(
        r_range=(traj.r0, traj.r_end),
        termination=_termination_kind(traj).value,
        weight_curves=curves,
        smallness_q=smallness_functional(traj, consts, cfg),
        smallness_curve=smallness_curve,
        energy=energy,
        tail=tail,
        p_oracle_max_relerr=oracle_err,
        notes=notes,
    )
