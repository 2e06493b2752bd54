"""Parameter-grid runs with per-cell trajectory classification.

A sweep integrates one trajectory per grid cell and classifies it by the
sign of the velocity profile at the classification radius (the blow-up
event radius, or the horizon when no event fired).  Solver failures of
any kind become SolverError cells instead of aborting the sweep.

Cells are independent work items, so execution may use a thread pool;
results are written into a preallocated list by grid index and are
bit-identical for any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from math import nan
from typing import Optional

import numpy as np

from .initdata import (
    CavitatingParams,
    SmoothParams,
    cavitating_state,
    cavitating_state_fixed_velocity,
    smooth_state,
)
from .integrator import (
    IntegratorConfig,
    Termination,
    TerminationKind,
    Trajectory,
    integrate,
)
from .model import DEFAULT_GUARD_EPS, PhysConsts

DEFAULT_DEAD_BAND = 1e-8

_ERROR_KINDS = frozenset(
    {
        TerminationKind.STEP_UNDERFLOW,
        TerminationKind.STEP_BUDGET,
        TerminationKind.NONFINITE,
        TerminationKind.SINGULARITY,
    }
)


class Classification(Enum):
    NEGATIVE_SIGN = "NegativeSign"
    POSITIVE_SIGN = "PositiveSign"
    SOLVER_ERROR = "SolverError"
    INDETERMINATE = "Indeterminate"


def classify(traj: Trajectory, dead_band: float = DEFAULT_DEAD_BAND) -> Classification:
    """Sign of U at the classification radius, with a dead band around zero.

    Solver failures (including a singularity stop) map to SolverError; the
    dead band keeps round-off level velocities out of the signed classes.
    """
    if dead_band <= 0:
        raise ValueError("dead_band must be positive")
    if traj.termination.kind in _ERROR_KINDS:
        return Classification.SOLVER_ERROR
    u_star = traj.final_state[1]
    if u_star > dead_band:
        return Classification.POSITIVE_SIGN
    if u_star < -dead_band:
        return Classification.NEGATIVE_SIGN
    return Classification.INDETERMINATE


@dataclass(frozen=True)
class Axis:
    """Linearly spaced sweep axis over p0, theta0 or alpha."""

    name: str
    min: float
    max: float
    count: int

    def __post_init__(self):
        if self.name not in ("p0", "theta0", "alpha"):
            raise ValueError("axis name must be one of p0, theta0, alpha")
        if self.count < 1:
            raise ValueError("axis count must be >= 1")
        if self.min > self.max:
            raise ValueError("axis needs min <= max")

    def values(self, half_open_at_zero: bool = False) -> list[float]:
        if self.count == 1:
            return [self.min]
        if half_open_at_zero and self.min == 0.0:
            # Leave the degenerate boundary out by one grid step.
            pts = np.linspace(self.min, self.max, self.count + 1)[1:]
        else:
            pts = np.linspace(self.min, self.max, self.count)
        return [float(x) for x in pts]


@dataclass(frozen=True)
class SweepSpec:
    regime: str  # "cavitating" | "smooth"
    axes: tuple[Axis, ...]
    consts: PhysConsts = PhysConsts()
    integrator_cfg: IntegratorConfig = IntegratorConfig()
    delta: float = 1e-3
    fixed: dict = field(default_factory=dict)  # defaults for unswept parameters
    velocity_interpretation: str = "alpha_slope"  # | "fixed_velocity"
    dead_band: float = DEFAULT_DEAD_BAND
    stability_check: bool = True
    guard_eps: float = DEFAULT_GUARD_EPS

    def __post_init__(self):
        if self.regime not in ("cavitating", "smooth"):
            raise ValueError("regime must be 'cavitating' or 'smooth'")
        if not 1 <= len(self.axes) <= 3:
            raise ValueError("need between one and three axes")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ValueError("duplicate axis names")
        if self.regime == "smooth" and "alpha" in names:
            raise ValueError("smooth regime has no alpha parameter")
        if self.velocity_interpretation not in ("alpha_slope", "fixed_velocity"):
            raise ValueError("unknown velocity interpretation")
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    def axis_values(self) -> list[list[float]]:
        half_open = self.regime == "smooth"
        return [a.values(half_open_at_zero=half_open) for a in self.axes]


@dataclass
class CellResult:
    indices: tuple[int, int, int]
    p0: float
    theta0: float
    alpha: Optional[float]
    classification: Classification
    r_end: float
    u_end: float
    step_count: int
    termination: Optional[Termination]
    stability_class: Optional[Classification] = None  # recheck at delta/10


def _cell_params(spec: SweepSpec, values_by_name: dict) -> dict:
    params = {
        "p0": float(spec.fixed.get("p0", 1.0)),
        "theta0": float(spec.fixed.get("theta0", 1.0)),
        "alpha": float(spec.fixed.get("alpha", 0.1)),
    }
    params.update(values_by_name)
    return params


def _launch_state(spec: SweepSpec, params: dict, delta: float):
    if spec.regime == "cavitating":
        cp = CavitatingParams(
            delta=delta,
            p_delta=params["p0"],
            alpha=params["alpha"],
            theta0=params["theta0"],
        )
        if spec.velocity_interpretation == "fixed_velocity":
            return cavitating_state_fixed_velocity(cp)
        return cavitating_state(cp)
    sp = SmoothParams(delta=delta, p0=params["p0"], theta0=params["theta0"])
    return smooth_state(sp, spec.consts)


def _run_cell(spec: SweepSpec, params: dict, delta: float) -> tuple[Classification, float, float, int, Optional[Termination]]:
    try:
        state = _launch_state(spec, params, delta)
    except (ValueError, ArithmeticError):
        return (Classification.SOLVER_ERROR, delta, nan, 0, None)
    traj = integrate(state, spec.consts, spec.integrator_cfg, guard_eps=spec.guard_eps)
    cls = classify(traj, spec.dead_band)
    return (cls, traj.r_end, float(traj.final_state[1]), traj.step_count, traj.termination)


def run_sweep(spec: SweepSpec, threads: int = 1) -> list[CellResult]:
    """One CellResult per grid cell, in row-major axis order.

    The result list is identical for any thread count; per-cell failures
    surface as SolverError cells.  When stability_check is set, cells
    whose class differs from the grid majority are rerun at delta/10 and
    the recheck class is recorded on the cell.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    axis_vals = spec.axis_values()
    while len(axis_vals) < 3:
        axis_vals.append([None])
    names = [a.name for a in spec.axes]

    jobs: list[tuple[tuple[int, int, int], dict]] = []
    for i, vi in enumerate(axis_vals[0]):
        for j, vj in enumerate(axis_vals[1]):
            for k, vk in enumerate(axis_vals[2]):
                swept = {}
                for name, val in zip(names, (vi, vj, vk)):
                    if val is not None:
                        swept[name] = float(val)
                jobs.append(((i, j, k), _cell_params(spec, swept)))

    def work(job) -> CellResult:
        (idx, params) = job
        cls, r_end, u_end, steps, term = _run_cell(spec, params, spec.delta)
        return CellResult(
            indices=idx,
            p0=params["p0"],
            theta0=params["theta0"],
            alpha=params["alpha"] if spec.regime == "cavitating" else None,
            classification=cls,
            r_end=r_end,
            u_end=u_end,
            step_count=steps,
            termination=term,
        )

    if threads == 1:
        results = [work(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))

    if spec.stability_check and results:
        counts: dict[Classification, int] = {}
        for cell in results:
            counts[cell.classification] = counts.get(cell.classification, 0) + 1
        majority = None
        best = -1
        for c in Classification:  # ties resolve to the earlier member
            if counts.get(c, 0) > best:
                best = counts.get(c, 0)
                majority = c
        anomalous = [
            (n, cell)
            for n, cell in enumerate(results)
            if cell.classification is not majority
        ]

        def recheck(item) -> tuple[int, Classification]:
            n, cell = item
            params = {
                "p0": cell.p0,
                "theta0": cell.theta0,
                "alpha": cell.alpha if cell.alpha is not None else 0.1,
            }
            cls, _, _, _, _ = _run_cell(spec, params, spec.delta / 10.0)
            return (n, cls)

        if anomalous:
            if threads == 1:
                rechecked = [recheck(item) for item in anomalous]
            else:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    rechecked = list(pool.map(recheck, anomalous))
            for n, cls in rechecked:
                results[n].stability_class = cls

    return results
