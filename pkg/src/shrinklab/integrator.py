"""Adaptive embedded Runge-Kutta 5(4) integration with dense output.

The stepper uses the Dormand-Prince coefficient pair (the scheme behind
MATLAB's ode45) with the classic quartic continuous extension, a PI step
controller and event location by bisection on the dense output.  All
failure modes of an integration are encoded in the returned Trajectory's
termination record; `integrate` never raises for dynamics reasons.

Two backends drive the profile system: a compiled Cython kernel and the
pure-Python generic core in this module.  They execute the same floating
point operations in the same order, so their trajectories agree bitwise;
`active_backend()` reports which one import selected.

The generic entry point `integrate_rhs` accepts any callable right-hand
side and is used for manufactured test problems (exponentials, event
location oracles, order verification).
"""

from __future__ import annotations

import math
import os
from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .model import (
    DEFAULT_GUARD_EPS,
    NonFiniteError,
    PhysConsts,
    ProfileState,
    SingularityError,
    rhs_components,
)


class OutOfRangeError(Exception):
    """Dense evaluation requested outside the computed radius range."""


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) coefficients.  The kernel re-declares these as C
# constants; any edit here must be mirrored there.

C2 = 1.0 / 5.0
C3 = 3.0 / 10.0
C4 = 4.0 / 5.0
C5 = 8.0 / 9.0

A21 = 1.0 / 5.0
A31 = 3.0 / 40.0
A32 = 9.0 / 40.0
A41 = 44.0 / 45.0
A42 = -56.0 / 15.0
A43 = 32.0 / 9.0
A51 = 19372.0 / 6561.0
A52 = -25360.0 / 2187.0
A53 = 64448.0 / 6561.0
A54 = -212.0 / 729.0
A61 = 9017.0 / 3168.0
A62 = -355.0 / 33.0
A63 = 46732.0 / 5247.0
A64 = 49.0 / 176.0
A65 = -5103.0 / 18656.0
# Fifth-order weights (also the seventh stage row: first-same-as-last).
B1 = 35.0 / 384.0
B3 = 500.0 / 1113.0
B4 = 125.0 / 192.0
B5 = -2187.0 / 6784.0
B6 = 11.0 / 84.0
# Difference between the 5th- and 4th-order weights (error estimate).
E1 = 71.0 / 57600.0
E3 = -71.0 / 16695.0
E4 = 71.0 / 1920.0
E5 = -17253.0 / 339200.0
E6 = 22.0 / 525.0
E7 = -1.0 / 40.0

# Continuous-extension polynomials b_i(theta) = theta*(c1 + theta*(c2 + ...)),
# fourth order, exact at both step endpoints.
BI1 = (1.0, -183.0 / 64.0, 37.0 / 12.0, -145.0 / 128.0)
BI3 = (0.0, 1500.0 / 371.0, -1000.0 / 159.0, 1000.0 / 371.0)
BI4 = (0.0, -125.0 / 32.0, 125.0 / 12.0, -375.0 / 64.0)
BI5 = (0.0, 9477.0 / 3392.0, -729.0 / 106.0, 25515.0 / 6784.0)
BI6 = (0.0, -11.0 / 7.0, 11.0 / 3.0, -55.0 / 28.0)
BI7 = (0.0, 3.0 / 2.0, -4.0, 5.0 / 2.0)

# Step controller: PI with safety factor 0.9 and growth clamp [0.2, 5.0].
SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0
ACCEPT_EXP = -0.14  # = -(1/5 - 0.75*beta) with beta = 0.08
PI_EXP = 0.08
REJECT_EXP = -0.2
ERR_TINY = 1e-16
EVENT_RELTOL = 1e-10

_STATUS_OK = 0
_STATUS_SINGULAR = 1
_STATUS_NONFINITE = 2


class TerminationKind(Enum):
    REACHED_RMAX = "ReachedRMax"
    BLOWUP = "BlowupEvent"
    SINGULARITY = "SingularityEvent"
    STEP_UNDERFLOW = "StepSizeUnderflow"
    STEP_BUDGET = "StepBudgetExhausted"
    NONFINITE = "NonFinite"


@dataclass(frozen=True)
class Termination:
    kind: TerminationKind
    r: float

    @property
    def name(self) -> str:
        return self.kind.value


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances, step bounds, horizon and event thresholds.

    h_init=None selects the start step automatically as 0.01*r0 clamped
    to [h_min, h_max].  blowup_threshold is the max-norm level at which a
    trajectory is declared blown up; the event radius is then located on
    the dense output.
    """

    rtol: float = 1e-8
    atol: float = 1e-10
    h_init: Optional[float] = None
    h_min: float = 1e-14
    h_max: float = 5.0
    r_max: float = 50.0
    blowup_threshold: float = 1e6
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("rtol and atol must be positive")
        if self.h_min <= 0 or self.h_max < self.h_min:
            raise ValueError("need 0 < h_min <= h_max")
        if self.h_init is not None and not (self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need h_min <= h_init <= h_max")
        if self.r_max <= 0 or self.blowup_threshold <= 0 or self.max_steps < 1:
            raise ValueError("r_max, blowup_threshold and max_steps must be positive")


@dataclass(frozen=True)
class SignCrossings:
    """Radii where the density / temperature channel first turns negative."""

    p: Optional[float] = None
    theta: Optional[float] = None


@dataclass
class Trajectory:
    """Record of accepted steps with dense-output data.

    Arrays are indexed by accepted step: [r_left, r_right] bracket each
    step, h_interp is the span the interpolation polynomial was built on
    (it exceeds r_right - r_left for an event-truncated final step), and
    stages holds the seven Runge-Kutta stage derivatives.
    """

    r0: float
    y0: np.ndarray
    r_left: np.ndarray
    r_right: np.ndarray
    h_interp: np.ndarray
    y_left: np.ndarray
    y_right: np.ndarray
    stages: np.ndarray
    termination: Termination
    step_count: int
    attempt_count: int
    config: IntegratorConfig
    first_sign_crossings: Optional[SignCrossings] = None
    backend: str = "python"

    @property
    def n_components(self) -> int:
        return len(self.y0)

    @property
    def r_end(self) -> float:
        return float(self.r_right[-1]) if self.step_count else self.r0

    @property
    def final_state(self) -> np.ndarray:
        return self.y_right[-1].copy() if self.step_count else self.y0.copy()

    def eval(self, r: float) -> np.ndarray:
        """Dense-output value at radius r; exact at stored step endpoints."""
        idx, theta = self._locate(r)
        if idx < 0:
            return self.y0.copy()
        if theta == 0.0:
            return self.y_left[idx].copy()
        if r == self.r_right[idx]:
            return self.y_right[idx].copy()
        k = self.stages[idx]
        h = self.h_interp[idx]
        p1, p3, p4, p5, p6, p7 = _interp_weights(theta)
        out = np.empty(self.n_components)
        yl = self.y_left[idx]
        for i in range(self.n_components):
            out[i] = yl[i] + h * (
                k[0, i] * p1
                + k[2, i] * p3
                + k[3, i] * p4
                + k[4, i] * p5
                + k[5, i] * p6
                + k[6, i] * p7
            )
        return out

    def eval_derivative(self, r: float) -> np.ndarray:
        """d/dr of the dense interpolant at radius r."""
        idx, theta = self._locate(r)
        if idx < 0:
            raise OutOfRangeError("zero-length trajectory has no interpolant")
        k = self.stages[idx]
        q1, q3, q4, q5, q6, q7 = _interp_weight_derivs(theta)
        out = np.empty(self.n_components)
        for i in range(self.n_components):
            out[i] = (
                k[0, i] * q1
                + k[2, i] * q3
                + k[3, i] * q4
                + k[4, i] * q5
                + k[5, i] * q6
                + k[6, i] * q7
            )
        return out

    def state_at(self, r: float) -> ProfileState:
        """Dense-output sample as a ProfileState (profile trajectories only)."""
        if self.n_components != 5:
            raise ValueError("state_at requires a 5-component profile trajectory")
        p, u, v, theta, s = self.eval(r)
        return ProfileState(r=r, p=p, u=u, v=v, theta=theta, s=s)

    def _locate(self, r: float) -> tuple[int, float]:
        if self.step_count == 0:
            if r != self.r0:
                raise OutOfRangeError(f"r={r!r} outside zero-length trajectory at {self.r0!r}")
            return (-1, 0.0)
        if r < self.r0 or r > self.r_end:
            raise OutOfRangeError(f"r={r!r} outside [{self.r0!r}, {self.r_end!r}]")
        idx = bisect_right(self.r_left, r) - 1
        if idx < 0:
            idx = 0
        theta = (r - self.r_left[idx]) / self.h_interp[idx]
        return (idx, theta)


def _interp_weights(theta: float) -> tuple[float, float, float, float, float, float]:
    t = theta
    p1 = t * (BI1[0] + t * (BI1[1] + t * (BI1[2] + t * BI1[3])))
    p3 = t * (t * (BI3[1] + t * (BI3[2] + t * BI3[3])))
    p4 = t * (t * (BI4[1] + t * (BI4[2] + t * BI4[3])))
    p5 = t * (t * (BI5[1] + t * (BI5[2] + t * BI5[3])))
    p6 = t * (t * (BI6[1] + t * (BI6[2] + t * BI6[3])))
    p7 = t * (t * (BI7[1] + t * (BI7[2] + t * BI7[3])))
    return (p1, p3, p4, p5, p6, p7)


def _interp_weight_derivs(theta: float) -> tuple[float, float, float, float, float, float]:
    t = theta

    def q(c) -> float:
        return c[0] + t * (2.0 * c[1] + t * (3.0 * c[2] + t * (4.0 * c[3])))

    return (q(BI1), q(BI3), q(BI4), q(BI5), q(BI6), q(BI7))


def _maxabs(y: Sequence[float]) -> float:
    m = 0.0
    for x in y:
        a = abs(x)
        if a > m:
            m = a
    return m


class _StageFailure(Exception):
    def __init__(self, status: int):
        self.status = status


def _call_rhs(f, r: float, y: list[float]) -> list[float]:
    try:
        k = f(r, y)
    except SingularityError:
        raise _StageFailure(_STATUS_SINGULAR) from None
    except (NonFiniteError, OverflowError, ZeroDivisionError):
        raise _StageFailure(_STATUS_NONFINITE) from None
    kk = [float(x) for x in k]
    for x in kk:
        if not math.isfinite(x):
            raise _StageFailure(_STATUS_NONFINITE)
    return kk


def _dense_point(yl, ks, h, theta, n) -> list[float]:
    p1, p3, p4, p5, p6, p7 = _interp_weights(theta)
    return [
        yl[i]
        + h
        * (
            ks[0][i] * p1
            + ks[2][i] * p3
            + ks[3][i] * p4
            + ks[4][i] * p5
            + ks[5][i] * p6
            + ks[6][i] * p7
        )
        for i in range(n)
    ]


def _integrate_adaptive(
    f: Callable[[float, Sequence[float]], Sequence[float]],
    r0: float,
    y0: Sequence[float],
    cfg: IntegratorConfig,
    singular_fn: Optional[Callable[[float, Sequence[float]], float]] = None,
    guard_eps: float = DEFAULT_GUARD_EPS,
):
    """Generic adaptive core.  Returns raw step lists plus termination data.

    singular_fn, when given, maps (r, y) to the signed continuity factor;
    the integration stops with a located SingularityEvent when |factor|
    enters the guard band guard_eps*r or the factor changes sign.
    """
    n = len(y0)
    y = [float(x) for x in y0]
    r = float(r0)
    M = cfg.blowup_threshold

    rl_list: list[float] = []
    rr_list: list[float] = []
    h_list: list[float] = []
    yl_list: list[list[float]] = []
    yr_list: list[list[float]] = []
    k_list: list[list[list[float]]] = []

    accepted = 0
    attempts = 0

    def result(kind: TerminationKind, r_term: float):
        return (
            rl_list,
            rr_list,
            h_list,
            yl_list,
            yr_list,
            k_list,
            Termination(kind, r_term),
            accepted,
            attempts,
        )

    for x in y:
        if not math.isfinite(x):
            return result(TerminationKind.NONFINITE, r)
    if singular_fn is not None:
        w0 = singular_fn(r, y)
        if abs(w0) - guard_eps * r <= 0.0:
            return result(TerminationKind.SINGULARITY, r)
    if _maxabs(y) >= M:
        return result(TerminationKind.BLOWUP, r)
    if r >= cfg.r_max:
        return result(TerminationKind.REACHED_RMAX, r)

    try:
        k1 = _call_rhs(f, r, y)
    except _StageFailure as sf:
        kind = (
            TerminationKind.SINGULARITY
            if sf.status == _STATUS_SINGULAR
            else TerminationKind.NONFINITE
        )
        return result(kind, r)

    if cfg.h_init is not None:
        h = cfg.h_init
    else:
        h = min(cfg.h_max, max(cfg.h_min, 0.01 * r))
    e_prev = 1e-4
    last_rejected = False

    while True:
        if attempts >= cfg.max_steps:
            return result(TerminationKind.STEP_BUDGET, r)
        attempts += 1

        gap = cfg.r_max - r
        clipped = False
        h_try = h
        if h_try >= gap:
            h_try = gap
            clipped = True
        if r + h_try == r:
            return result(TerminationKind.STEP_UNDERFLOW, r)

        try:
            y2 = [y[i] + h_try * (A21 * k1[i]) for i in range(n)]
            k2 = _call_rhs(f, r + C2 * h_try, y2)
            y3 = [y[i] + h_try * (A31 * k1[i] + A32 * k2[i]) for i in range(n)]
            k3 = _call_rhs(f, r + C3 * h_try, y3)
            y4 = [y[i] + h_try * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]) for i in range(n)]
            k4 = _call_rhs(f, r + C4 * h_try, y4)
            y5 = [
                y[i] + h_try * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
                for i in range(n)
            ]
            k5 = _call_rhs(f, r + C5 * h_try, y5)
            y6 = [
                y[i]
                + h_try
                * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
                for i in range(n)
            ]
            k6 = _call_rhs(f, r + h_try, y6)
            y_new = [
                y[i]
                + h_try * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
                for i in range(n)
            ]
            k7 = _call_rhs(f, r + h_try, y_new)
        except _StageFailure as sf:
            h_new = 0.5 * h_try
            if h_new < cfg.h_min:
                if h_try <= cfg.h_min:
                    kind = (
                        TerminationKind.SINGULARITY
                        if sf.status == _STATUS_SINGULAR
                        else TerminationKind.NONFINITE
                    )
                    return result(kind, r)
                h_new = cfg.h_min
            h = h_new
            last_rejected = True
            continue

        err_norm = 0.0
        for i in range(n):
            err = h_try * (
                E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]
            )
            ay = abs(y[i])
            ayn = abs(y_new[i])
            scale = cfg.atol + cfg.rtol * (ay if ay > ayn else ayn)
            w = abs(err) / scale
            if w > err_norm:
                err_norm = w

        if not err_norm <= 1.0:
            # Rejected (also catches NaN error norms).
            e = err_norm if math.isfinite(err_norm) else 1e10
            fac = SAFETY * pow(max(e, ERR_TINY), REJECT_EXP)
            if fac < FAC_MIN:
                fac = FAC_MIN
            h_new = h_try * fac
            if h_new < cfg.h_min:
                if h_try <= cfg.h_min:
                    return result(TerminationKind.STEP_UNDERFLOW, r)
                h_new = cfg.h_min
            h = h_new
            last_rejected = True
            continue

        # Accepted.
        r_new = cfg.r_max if clipped else r + h_try
        ks = [k1, k2, k3, k4, k5, k6, k7]
        rl_list.append(r)
        rr_list.append(r_new)
        h_list.append(h_try)
        yl_list.append(y)
        yr_list.append(y_new)
        k_list.append(ks)
        accepted += 1

        # Event checks on the accepted span, earliest event wins.
        r_sing = math.inf
        r_blow = math.inf
        if singular_fn is not None:
            w_l = singular_fn(r, y)
            w_r = singular_fn(r_new, y_new)
            flip = (w_l > 0.0) != (w_r > 0.0)
            if flip or abs(w_r) - guard_eps * r_new <= 0.0:

                def bad_sing(rr: float, yy: list[float]) -> bool:
                    ww = singular_fn(rr, yy)
                    return ((ww > 0.0) != (w_l > 0.0)) or (abs(ww) - guard_eps * rr <= 0.0)

                r_sing, y_sing = _bisect_event(y, ks, h_try, r, r_new, bad_sing, n)
        if _maxabs(y_new) >= M:

            def bad_blow(rr: float, yy: list[float]) -> bool:
                return _maxabs(yy) >= M

            r_blow, y_blow = _bisect_event(y, ks, h_try, r, r_new, bad_blow, n)

        if r_sing < math.inf or r_blow < math.inf:
            if r_sing <= r_blow:
                r_ev, y_ev, kind = r_sing, y_sing, TerminationKind.SINGULARITY
            else:
                r_ev, y_ev, kind = r_blow, y_blow, TerminationKind.BLOWUP
            rr_list[-1] = r_ev
            yr_list[-1] = y_ev
            return result(kind, r_ev)

        y = y_new
        r = r_new
        if clipped or r >= cfg.r_max:
            return result(TerminationKind.REACHED_RMAX, r)
        k1 = k7  # first-same-as-last

        e = max(err_norm, ERR_TINY)
        fac = SAFETY * pow(e, ACCEPT_EXP) * pow(e_prev, PI_EXP)
        if fac < FAC_MIN:
            fac = FAC_MIN
        elif fac > FAC_MAX:
            fac = FAC_MAX
        if last_rejected and fac > 1.0:
            fac = 1.0
        h = h_try * fac
        if h > cfg.h_max:
            h = cfg.h_max
        if h < cfg.h_min:
            h = cfg.h_min
        e_prev = max(err_norm, 1e-4)
        last_rejected = False


def _bisect_event(yl, ks, h, r_left, r_right, bad, n):
    """Locate the earliest radius in (r_left, r_right] where `bad` holds.

    Bisection on the dense interpolant to relative accuracy EVENT_RELTOL;
    `bad` must be False at r_left and True at r_right.
    """
    th_lo = 0.0
    th_hi = (r_right - r_left) / h
    r_lo = r_left
    r_hi = r_right
    y_hi = None
    it = 0
    while (r_hi - r_lo) > EVENT_RELTOL * r_hi and it < 200:
        th_mid = 0.5 * (th_lo + th_hi)
        r_mid = r_left + th_mid * h
        if r_mid <= r_lo or r_mid >= r_hi:
            break
        y_mid = _dense_point(yl, ks, h, th_mid, n)
        if bad(r_mid, y_mid):
            th_hi = th_mid
            r_hi = r_mid
            y_hi = y_mid
        else:
            th_lo = th_mid
            r_lo = r_mid
        it += 1
    if y_hi is None:
        y_hi = _dense_point(yl, ks, h, th_hi, n)
    return r_hi, y_hi


def _pack_trajectory(raw, r0, y0, cfg, backend: str) -> Trajectory:
    rl, rr, hs, yl, yr, ks, term, accepted, attempts = raw
    m = len(rl)
    n = len(y0)
    stages = np.asarray(ks).reshape(m, 7, n) if m else np.empty((0, 7, n))
    return Trajectory(
        r0=float(r0),
        y0=np.asarray([float(x) for x in y0]),
        r_left=np.asarray(rl),
        r_right=np.asarray(rr),
        h_interp=np.asarray(hs),
        y_left=np.asarray(yl).reshape(m, n),
        y_right=np.asarray(yr).reshape(m, n),
        stages=stages,
        termination=term,
        step_count=accepted,
        attempt_count=attempts,
        config=cfg,
        backend=backend,
    )


def integrate_rhs(
    f: Callable[[float, Sequence[float]], Sequence[float]],
    r0: float,
    y0: Sequence[float],
    cfg: IntegratorConfig,
) -> Trajectory:
    """Integrate an arbitrary right-hand side outward from r0.

    Used for manufactured problems; the profile system goes through
    `integrate`, which adds the singularity guard and sign bookkeeping.
    """
    if r0 <= 0 or not math.isfinite(r0):
        raise ValueError("r0 must be positive and finite")
    raw = _integrate_adaptive(f, r0, y0, cfg)
    return _pack_trajectory(raw, r0, y0, cfg, backend="python")


def integrate_fixed(
    f: Callable[[float, Sequence[float]], Sequence[float]],
    r0: float,
    y0: Sequence[float],
    r_end: float,
    n_steps: int,
) -> list[float]:
    """Fixed-step fifth-order propagation (order-verification use only)."""
    n = len(y0)
    y = [float(x) for x in y0]
    r = float(r0)
    h = (r_end - r0) / n_steps
    for _ in range(n_steps):
        k1 = _call_rhs(f, r, y)
        y2 = [y[i] + h * (A21 * k1[i]) for i in range(n)]
        k2 = _call_rhs(f, r + C2 * h, y2)
        y3 = [y[i] + h * (A31 * k1[i] + A32 * k2[i]) for i in range(n)]
        k3 = _call_rhs(f, r + C3 * h, y3)
        y4 = [y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]) for i in range(n)]
        k4 = _call_rhs(f, r + C4 * h, y4)
        y5 = [
            y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            for i in range(n)
        ]
        k5 = _call_rhs(f, r + C5 * h, y5)
        y6 = [
            y[i]
            + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            for i in range(n)
        ]
        k6 = _call_rhs(f, r + h, y6)
        y = [
            y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
            for i in range(n)
        ]
        r += h
    return y


# ---------------------------------------------------------------------------
# Profile-system entry point with backend selection.

try:  # pragma: no cover - exercised implicitly at import
    from . import _profile_kernel as _compiled_kernel
except ImportError:  # pragma: no cover
    _compiled_kernel = None

_FORCE_PYTHON = bool(os.environ.get("SHRINKLAB_FORCE_PYTHON"))


def active_backend() -> str:
    """Name of the backend `integrate` will use by default."""
    if _compiled_kernel is not None and not _FORCE_PYTHON:
        return "compiled"
    return "python"


def _integrate_profile_python(y0, r0, consts, cfg, guard_eps):
    def f(r, yy):
        return rhs_components(r, yy[0], yy[1], yy[2], yy[3], yy[4], consts, guard_eps)

    def singular_fn(r, yy):
        return r * 0.5 + yy[1]

    return _integrate_adaptive(f, r0, y0, cfg, singular_fn=singular_fn, guard_eps=guard_eps)


def integrate(
    initial: ProfileState,
    consts: PhysConsts,
    cfg: Optional[IntegratorConfig] = None,
    guard_eps: float = DEFAULT_GUARD_EPS,
    backend: Optional[str] = None,
) -> Trajectory:
    """Integrate the profile system outward from the launch state.

    All failure modes are reported through Trajectory.termination.  The
    returned trajectory also records where the density or temperature
    channel first turned negative, when that happened.
    """
    if cfg is None:
        cfg = IntegratorConfig()
    if backend is None:
        backend = active_backend()
    y0 = list(initial.as_tuple())
    r0 = initial.r

    if backend == "compiled":
        if _compiled_kernel is None:
            raise ValueError("compiled backend requested but not available")
        raw = _compiled_kernel.integrate_profile(
            r0,
            y0,
            consts.c_v,
            consts.r_gas,
            consts.kappa,
            consts.mu,
            consts.lam,
            consts.d,
            cfg.rtol,
            cfg.atol,
            -1.0 if cfg.h_init is None else cfg.h_init,
            cfg.h_min,
            cfg.h_max,
            cfg.r_max,
            cfg.blowup_threshold,
            cfg.max_steps,
            guard_eps,
        )
        (rl, rr, hs, yl, yr, stages, kind_code, r_term, accepted, attempts) = raw
        term = Termination(_KIND_BY_CODE[kind_code], r_term)
        traj = Trajectory(
            r0=r0,
            y0=np.asarray(y0),
            r_left=rl,
            r_right=rr,
            h_interp=hs,
            y_left=yl,
            y_right=yr,
            stages=stages,
            termination=term,
            step_count=accepted,
            attempt_count=attempts,
            config=cfg,
            backend="compiled",
        )
    elif backend == "python":
        raw = _integrate_profile_python(y0, r0, consts, cfg, guard_eps)
        traj = _pack_trajectory(raw, r0, y0, cfg, backend="python")
    else:
        raise ValueError(f"unknown backend {backend!r}")

    traj.first_sign_crossings = _find_sign_crossings(traj)
    return traj


_KIND_BY_CODE = {
    0: TerminationKind.REACHED_RMAX,
    1: TerminationKind.BLOWUP,
    2: TerminationKind.SINGULARITY,
    3: TerminationKind.STEP_UNDERFLOW,
    4: TerminationKind.STEP_BUDGET,
    5: TerminationKind.NONFINITE,
}


def _find_sign_crossings(traj: Trajectory) -> SignCrossings:
    return SignCrossings(
        p=_first_negative_radius(traj, 0),
        theta=_first_negative_radius(traj, 3),
    )


def _first_negative_radius(traj: Trajectory, ch: int) -> Optional[float]:
    if traj.y0[ch] < 0.0:
        return traj.r0
    for j in range(traj.step_count):
        if traj.y_right[j][ch] < 0.0:
            yl = list(traj.y_left[j])
            ks = [list(traj.stages[j][st]) for st in range(7)]
            h = traj.h_interp[j]

            def bad(rr: float, yy: list[float]) -> bool:
                return yy[ch] < 0.0

            r_ev, _ = _bisect_event(
                yl, ks, h, traj.r_left[j], traj.r_right[j], bad, traj.n_components
            )
            return float(r_ev)
    return None


def dense_eval(traj: Trajectory, r: float) -> ProfileState:
    """Profile-state dense evaluation; OutOfRangeError outside the range."""
    return traj.state_at(r)
