"""Numerical laboratory for radial self-similar blow-up profiles.

Integrates the first-order profile system of radially symmetric, backward
self-similar compressible Navier-Stokes flow outward from near-origin
launch data, classifies the resulting trajectories over parameter grids,
and evaluates analytic diagnostics (integral weights, a smallness
functional, finite-energy integrals, tail fits) along computed profiles.
"""

from .model import (
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
from .integrator import (
    IntegratorConfig,
    OutOfRangeError,
    Termination,
    TerminationKind,
    Trajectory,
    active_backend,
    dense_eval,
    integrate,
    integrate_fixed,
    integrate_rhs,
)
from .initdata import (
    CavitatingParams,
    SmoothParams,
    cavitating_state,
    cavitating_state_fixed_velocity,
    smooth_state,
)
from .diagnostics import (
    DiagnosticsConfig,
    DiagnosticsReport,
    QuadratureFailure,
    SyntheticProfile,
    build_report,
    continuity_oracle,
    energy_report,
    smallness_functional,
    smallness_parts,
    tail_fit,
    weights,
)
from .sweep import Axis, CellResult, Classification, SweepSpec, classify, run_sweep

__version__ = "0.1.0"

__all__ = [
    "Axis",
    "CavitatingParams",
    "CellResult",
    "Classification",
    "DiagnosticsConfig",
    "DiagnosticsReport",
    "IntegratorConfig",
    "NonFiniteError",
    "OutOfRangeError",
    "PhysConsts",
    "ProfileState",
    "QuadratureFailure",
    "RhsDerivative",
    "SingularityError",
    "SmoothParams",
    "SweepSpec",
    "SyntheticProfile",
    "Termination",
    "TerminationKind",
    "Trajectory",
    "active_backend",
    "build_report",
    "cavitating_state",
    "cavitating_state_fixed_velocity",
    "classify",
    "continuity_oracle",
    "dense_eval",
    "energy_report",
    "integrate",
    "integrate_fixed",
    "integrate_rhs",
    "rhs",
    "residual_continuity",
    "residual_momentum",
    "residual_temperature",
    "run_sweep",
    "smallness_functional",
    "smallness_parts",
    "smooth_state",
    "tail_fit",
    "weights",
    "__version__",
]
