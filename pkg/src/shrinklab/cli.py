"""Command-line interface: single runs, parameter sweeps and diagnostics.

Configuration is a flat UTF-8 file of `key = value` lines with `#`
comments; `--set key=value` flags override file keys.  All output files
are byte-deterministic for a given configuration: floats are written with
repr (shortest round-trip form), and phase maps use ASCII P3 pixmaps.

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from typing import Optional

from .diagnostics import DiagnosticsConfig, DiagnosticsReport, build_report
from .initdata import (
    DEFAULT_DELTA_CAVITATING,
    DEFAULT_DELTA_SMOOTH,
    CavitatingParams,
    SmoothParams,
    cavitating_state,
    cavitating_state_fixed_velocity,
    smooth_state,
)
from .integrator import IntegratorConfig, integrate
from .model import DEFAULT_GUARD_EPS, PhysConsts
from .sweep import DEFAULT_DEAD_BAND, Axis, Classification, SweepSpec, run_sweep


class ConfigError(Exception):
    pass


_CLASS_COLORS = {
    Classification.NEGATIVE_SIGN: (0, 0, 255),
    Classification.POSITIVE_SIGN: (255, 0, 0),
    Classification.SOLVER_ERROR: (0, 255, 0),
    Classification.INDETERMINATE: (255, 255, 255),
}

_KNOWN_KEYS = {
    # physical constants
    "c_v", "r_gas", "kappa", "mu", "lambda", "d",
    # integrator
    "rtol", "atol", "h_init", "h_min", "h_max", "r_max",
    "blowup_threshold", "max_steps", "guard_eps",
    # launch data
    "regime", "delta", "p0", "theta0", "alpha", "velocity_interpretation",
    # diagnostics
    "gamma", "quad_rtol", "tail_window", "gamma_grid_count", "gamma_grid_factor",
    # sweep
    "axis1_name", "axis1_min", "axis1_max", "axis1_count",
    "axis2_name", "axis2_min", "axis2_max", "axis2_count",
    "axis3_name", "axis3_min", "axis3_max", "axis3_count",
    "dead_band", "stability_check",
    # outputs
    "csv_samples",
}


def _parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path: Optional[str], overrides: list[str]) -> dict[str, str]:
    cfg: dict[str, str] = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            cfg.update(_parse_config_text(fh.read()))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        key, value = item.split("=", 1)
        cfg[key.strip()] = value.strip()
    for key in cfg:
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown configuration key {key!r}")
    return cfg


def _get_float(cfg: dict, key: str, default: Optional[float] = None) -> float:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"key {key!r}: not a number: {cfg[key]!r}") from None


def _get_int(cfg: dict, key: str, default: Optional[int] = None) -> int:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return int(cfg[key])
    except ValueError:
        raise ConfigError(f"key {key!r}: not an integer: {cfg[key]!r}") from None


def _get_str(cfg: dict, key: str, default: Optional[str] = None) -> str:
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    return cfg[key]


def _get_bool(cfg: dict, key: str, default: bool) -> bool:
    if key not in cfg:
        return default
    val = cfg[key].lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"key {key!r}: not a boolean: {cfg[key]!r}")


def build_consts(cfg: dict) -> PhysConsts:
    return PhysConsts(
        c_v=_get_float(cfg, "c_v", 1.0),
        r_gas=_get_float(cfg, "r_gas", 1.0),
        kappa=_get_float(cfg, "kappa", 1.0),
        mu=_get_float(cfg, "mu", 2.0),
        lam=_get_float(cfg, "lambda", 1.0),
        d=_get_int(cfg, "d", 3),
    )


def build_integrator_cfg(cfg: dict) -> IntegratorConfig:
    h_init_raw = cfg.get("h_init", "auto")
    h_init = None if h_init_raw == "auto" else _get_float(cfg, "h_init")
    return IntegratorConfig(
        rtol=_get_float(cfg, "rtol", 1e-8),
        atol=_get_float(cfg, "atol", 1e-10),
        h_init=h_init,
        h_min=_get_float(cfg, "h_min", 1e-14),
        h_max=_get_float(cfg, "h_max", 5.0),
        r_max=_get_float(cfg, "r_max", 50.0),
        blowup_threshold=_get_float(cfg, "blowup_threshold", 1e6),
        max_steps=_get_int(cfg, "max_steps", 1_000_000),
    )


def build_diag_cfg(cfg: dict, consts: PhysConsts) -> DiagnosticsConfig:
    dc = DiagnosticsConfig(
        gamma=_get_float(cfg, "gamma"),
        quad_rtol=_get_float(cfg, "quad_rtol", 1e-8),
        tail_window=_get_float(cfg, "tail_window", 0.2),
    )
    if not dc.gamma > consts.d:
        raise ConfigError(f"key 'gamma': must exceed the dimension d={consts.d}")
    return dc


def build_launch(cfg: dict, consts: PhysConsts):
    regime = _get_str(cfg, "regime")
    if regime == "cavitating":
        params = CavitatingParams(
            delta=_get_float(cfg, "delta", DEFAULT_DELTA_CAVITATING),
            p_delta=_get_float(cfg, "p0", 1.0),
            alpha=_get_float(cfg, "alpha", 0.1),
            theta0=_get_float(cfg, "theta0", 1.0),
        )
        interp = _get_str(cfg, "velocity_interpretation", "alpha_slope")
        if interp == "alpha_slope":
            return cavitating_state(params)
        if interp == "fixed_velocity":
            return cavitating_state_fixed_velocity(params)
        raise ConfigError(f"key 'velocity_interpretation': unknown value {interp!r}")
    if regime == "smooth":
        params = SmoothParams(
            delta=_get_float(cfg, "delta", DEFAULT_DELTA_SMOOTH),
            p0=_get_float(cfg, "p0", 1.0),
            theta0=_get_float(cfg, "theta0", 1.0),
        )
        return smooth_state(params, consts)
    raise ConfigError(f"key 'regime': expected 'cavitating' or 'smooth', got {regime!r}")


def build_sweep_spec(cfg: dict) -> SweepSpec:
    axes = []
    for n in (1, 2, 3):
        if f"axis{n}_name" in cfg:
            axes.append(
                Axis(
                    name=_get_str(cfg, f"axis{n}_name"),
                    min=_get_float(cfg, f"axis{n}_min"),
                    max=_get_float(cfg, f"axis{n}_max"),
                    count=_get_int(cfg, f"axis{n}_count"),
                )
            )
    if not axes:
        raise ConfigError("missing required key 'axis1_name'")
    regime = _get_str(cfg, "regime")
    default_delta = (
        DEFAULT_DELTA_CAVITATING if regime == "cavitating" else DEFAULT_DELTA_SMOOTH
    )
    fixed = {}
    for key in ("p0", "theta0", "alpha"):
        if key in cfg:
            fixed[key] = _get_float(cfg, key)
    return SweepSpec(
        regime=regime,
        axes=tuple(axes),
        consts=build_consts(cfg),
        integrator_cfg=build_integrator_cfg(cfg),
        delta=_get_float(cfg, "delta", default_delta),
        fixed=fixed,
        velocity_interpretation=_get_str(cfg, "velocity_interpretation", "alpha_slope"),
        dead_band=_get_float(cfg, "dead_band", DEFAULT_DEAD_BAND),
        stability_check=_get_bool(cfg, "stability_check", True),
        guard_eps=_get_float(cfg, "guard_eps", DEFAULT_GUARD_EPS),
    )


# ---------------------------------------------------------------------------
# Output writers.  repr() gives the shortest round-trip decimal form.


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trajectory_csv(path: str, traj, samples: int) -> None:
    rows = ["r,P,U,V,Theta,S,log10P"]
    if traj.r_end == traj.r0:
        radii = [traj.r0]
    else:
        span = traj.r_end - traj.r0
        radii = [traj.r0 + span * i / (samples - 1) for i in range(samples)]
        radii[-1] = traj.r_end
    for r in radii:
        y = traj.eval(r)
        logp = _fmt(math.log10(y[0])) if y[0] > 0.0 else ""
        rows.append(
            ",".join((_fmt(r), _fmt(y[0]), _fmt(y[1]), _fmt(y[2]), _fmt(y[3]), _fmt(y[4]), logp))
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")


def render_report(report: DiagnosticsReport) -> str:
    lines = ["# profile diagnostics"]
    lines.append(f"radius range: {_fmt(report.r_range[0])} .. {_fmt(report.r_range[1])}")
    lines.append(f"termination: {report.termination}")
    lines.append("")
    lines.append("## smallness functional (sup over computed range)")
    for g, val in report.smallness_curve:
        lines.append(f"gamma = {_fmt(g)}: {_fmt(val)}")
    lines.append("")
    lines.append("## weights at the terminal radius")
    wc = report.weight_curves
    lines.append(f"Z(r_end) = {_fmt(wc.z[-1])}")
    lines.append(f"W(r_end) = {_fmt(wc.w[-1])}")
    lines.append(f"head contribution [0, delta]: {_fmt(wc.head_contribution)}")
    lines.append("")
    lines.append("## energy integrals (measure omega_d r^(d-1) dr)")
    for name, integral in report.energy.as_dict().items():
        flag = " DIVERGENT" if integral.divergent else ""
        lines.append(f"{name}: {_fmt(integral.value)}{flag}")
    lines.append(f"identity_d: {_fmt(report.energy.identity_d)}")
    lines.append("")
    lines.append("## continuity quadrature cross-check")
    if report.p_oracle_max_relerr is None:
        lines.append("max relative error: not applicable")
    else:
        lines.append(f"max relative error: {_fmt(report.p_oracle_max_relerr)}")
    lines.append("")
    lines.append("## tail fit")
    if report.tail is None:
        lines.append("not applicable (trajectory did not reach the horizon)")
    else:
        t = report.tail
        lines.append(f"P_inf = {_fmt(t.p_inf)} (drift {_fmt(t.p_drift)})")
        lines.append(f"U_inf = {_fmt(t.u_inf)} (drift {_fmt(t.u_drift)})")
        lines.append(f"Theta_inf = {_fmt(t.theta_inf)} (drift {_fmt(t.theta_drift)})")
    lines.append("")
    lines.append("## notes")
    for note in report.notes:
        lines.append(f"- {note}")
    return "\n".join(lines) + "\n"


def write_sweep_csv(path: str, cells) -> None:
    rows = ["i,j,k,p0,theta0,alpha,class,r_end,u_end,steps,termination"]
    for cell in cells:
        i, j, k = cell.indices
        alpha = "" if cell.alpha is None else _fmt(cell.alpha)
        term = cell.termination.kind.value if cell.termination else "LaunchError"
        rows.append(
            ",".join(
                (
                    str(i),
                    str(j),
                    str(k),
                    _fmt(cell.p0),
                    _fmt(cell.theta0),
                    alpha,
                    cell.classification.value,
                    _fmt(cell.r_end),
                    _fmt(cell.u_end),
                    str(cell.step_count),
                    term,
                )
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")


def render_phase_map(cells, counts: tuple[int, int, int], k_slice: int) -> str:
    """P3 pixmap of one k-slice; the minimum second-axis row sits at the
    bottom, so rows are emitted from the top (maximum j) downward."""
    ni, nj, _ = counts
    by_index = {cell.indices: cell for cell in cells}
    lines = ["P3", f"{ni} {nj}", "255"]
    for j in range(nj - 1, -1, -1):
        row = []
        for i in range(ni):
            cell = by_index[(i, j, k_slice)]
            row.append("%d %d %d" % _CLASS_COLORS[cell.classification])
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Commands.


def cmd_run(cfg: dict, out_dir: str, threads: int) -> None:
    consts = build_consts(cfg)
    icfg = build_integrator_cfg(cfg)
    dcfg = build_diag_cfg(cfg, consts)
    state = build_launch(cfg, consts)
    samples = _get_int(cfg, "csv_samples", 1001)
    if samples < 2:
        raise ConfigError("key 'csv_samples': need at least 2")
    guard_eps = _get_float(cfg, "guard_eps", DEFAULT_GUARD_EPS)

    traj = integrate(state, consts, icfg, guard_eps=guard_eps)
    report = build_report(traj, consts, dcfg, gamma_grid=_gamma_grid(cfg, dcfg))

    os.makedirs(out_dir, exist_ok=True)
    write_trajectory_csv(os.path.join(out_dir, "trajectory.csv"), traj, samples)
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_report(report))
    print(f"run: {traj.termination.kind.value} at r={traj.r_end!r} "
          f"({traj.step_count} steps); wrote trajectory.csv, report.txt")


def _gamma_grid(cfg: dict, dcfg: DiagnosticsConfig) -> list[float]:
    count = _get_int(cfg, "gamma_grid_count", 5)
    factor = _get_float(cfg, "gamma_grid_factor", 2.0)
    if count < 1 or factor <= 1.0:
        raise ConfigError("gamma grid needs count >= 1 and factor > 1")
    return [dcfg.gamma * factor**k for k in range(count)]


def cmd_sweep(cfg: dict, out_dir: str, threads: int) -> None:
    spec = build_sweep_spec(cfg)
    cells = run_sweep(spec, threads=threads)

    axis_vals = spec.axis_values()
    ni = len(axis_vals[0])
    nj = len(axis_vals[1]) if len(axis_vals) > 1 else 1
    nk = len(axis_vals[2]) if len(axis_vals) > 2 else 1

    os.makedirs(out_dir, exist_ok=True)
    write_sweep_csv(os.path.join(out_dir, "sweep.csv"), cells)
    if nk == 1:
        with open(os.path.join(out_dir, "phase_map.ppm"), "w", encoding="ascii", newline="\n") as fh:
            fh.write(render_phase_map(cells, (ni, nj, nk), 0))
    else:
        for k in range(nk):
            name = f"phase_map_k{k:03d}.ppm"
            with open(os.path.join(out_dir, name), "w", encoding="ascii", newline="\n") as fh:
                fh.write(render_phase_map(cells, (ni, nj, nk), k))
    tally: dict[str, int] = {}
    for cell in cells:
        tally[cell.classification.value] = tally.get(cell.classification.value, 0) + 1
    print(f"sweep: {len(cells)} cells {tally}; wrote sweep.csv and phase map(s)")


def cmd_diag(cfg: dict, out_dir: str, threads: int) -> None:
    consts = build_consts(cfg)
    icfg = build_integrator_cfg(cfg)
    dcfg = build_diag_cfg(cfg, consts)
    state = build_launch(cfg, consts)
    guard_eps = _get_float(cfg, "guard_eps", DEFAULT_GUARD_EPS)

    traj = integrate(state, consts, icfg, guard_eps=guard_eps)
    report = build_report(traj, consts, dcfg, gamma_grid=_gamma_grid(cfg, dcfg))

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_report(report))
    print(f"diag: {traj.termination.kind.value} at r={traj.r_end!r}; wrote report.txt")


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="shrinklab",
        description="Self-similar blow-up profile laboratory for radial compressible flow.",
    )
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--out", default="out", help="output directory (default: out)")
    parser.add_argument("--threads", type=int, default=1, help="sweep worker threads")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a configuration key (repeatable)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", help="integrate one trajectory; write CSV and report")
    sub.add_parser("sweep", help="run a parameter grid; write CSV and phase map")
    sub.add_parser("diag", help="integrate one trajectory; write the diagnostics report")

    args = parser.parse_args(argv)
    dispatch = {"run": cmd_run, "sweep": cmd_sweep, "diag": cmd_diag}

    try:
        cfg = load_config(args.config, args.set)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        dispatch[args.command](cfg, args.out, args.threads)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
