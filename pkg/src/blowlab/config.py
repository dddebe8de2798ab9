"""JSON run configurations and CSV/JSON emission.

A config file is a single JSON object; unknown keys anywhere are rejected
and validation reports every violation (with its field path), not just the
first.  CSV output uses shortest round-trip decimals, LF line endings and a
header row, so identical data always re-emits byte-identically.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from blowlab.experiments import SweepResult
from blowlab.lifespan_bounds import FunctionalTrace
from blowlab.solvers import (
    BlowupRecord,
    CoefficientSpec,
    EvolutionProblem,
    GridSpec,
    InitialDataSpec,
    RunControls,
)


class ConfigError(ValueError):
    """Carries the full list of validation violations."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n" + "\n".join(self.errors))


@dataclass(frozen=True)
class RunConfig:
    problem: EvolutionProblem
    controls: RunControls
    sweep_epsilons: tuple | None
    slope_tolerance: float
    trace_radii: tuple | None
    seed: int
    out_dir: str | None


_PROBLEM_KEYS = {"tau", "p", "lambda", "a_phase", "a0", "alpha", "v0", "grid", "initial"}
_GRID_KEYS = {"geometry", "extent", "num_points", "dim", "omega", "num_angles", "include_origin"}
_INITIAL_KEYS = {"center", "width", "epsilon", "amplitude", "g_amplitude"}
_CONTROL_KEYS = {
    "threshold",
    "thresholds",
    "t_max",
    "dt_init",
    "dt_min",
    "snapshot_dt",
    "growth_limit",
    "max_steps",
}
_SWEEP_KEYS = {"epsilons", "slope_tolerance"}
_TOP_KEYS = {"problem", "controls", "sweep", "trace_radii", "seed", "out_dir"}


def _complex_from(value, path, errors):
    if isinstance(value, (int, float)):
        return complex(value)
    if (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(v, (int, float)) for v in value)
    ):
        return complex(value[0], value[1])
    errors.append(f"{path}: expected a number or [re, im] pair")
    return complex(0.0)


def _number(obj, key, path, errors, required=True, default=None):
    if key not in obj:
        if required:
            errors.append(f"{path}.{key}: missing")
        return default
    v = obj[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        errors.append(f"{path}.{key}: expected a number")
        return default
    return float(v)


def _check_keys(obj, allowed, path, errors):
    for k in obj:
        if k not in allowed:
            errors.append(f"{path}.{k}: unknown key")


def config_from_dict(raw: dict) -> RunConfig:
    """Validate a parsed JSON object, collecting every violation."""
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["top level: expected a JSON object"])
    _check_keys(raw, _TOP_KEYS, "config", errors)

    prob = raw.get("problem")
    if not isinstance(prob, dict):
        errors.append("config.problem: missing or not an object")
        raise ConfigError(errors)
    _check_keys(prob, _PROBLEM_KEYS, "problem", errors)

    tau = prob.get("tau")
    if tau not in (0, 1):
        errors.append("problem.tau: must be 0 or 1")
        tau = 0
    p = _number(prob, "p", "problem", errors, default=2.0)
    if p is not None and p <= 1.0:
        errors.append("problem.p: must exceed 1")
    lam = _complex_from(prob.get("lambda", 1.0), "problem.lambda", errors)
    a_phase = _number(prob, "a_phase", "problem", errors, required=False)
    a0 = _number(prob, "a0", "problem", errors, required=False)
    alpha = _number(prob, "alpha", "problem", errors, required=False, default=0.0) or 0.0
    v0 = _number(prob, "v0", "problem", errors, required=False)
    if not 0.0 <= alpha <= 1.0:
        errors.append("problem.alpha: alpha must lie in [0,1]")
    if tau == 0:
        if a_phase is None:
            errors.append("problem.a_phase: required for tau=0")
        elif not -math.pi / 2 <= a_phase <= math.pi / 2:
            errors.append("problem.a_phase: must lie in [-pi/2, pi/2]")
        if a0 is not None or v0 is not None:
            errors.append("problem: tau=0 takes only the phase coefficient form")
    else:
        if a_phase is not None:
            errors.append("problem.a_phase: not allowed for tau=1")
        if (a0 is None) == (v0 is None):
            errors.append("problem: tau=1 needs exactly one of a0 or v0")

    grid_raw = prob.get("grid")
    grid = None
    if not isinstance(grid_raw, dict):
        errors.append("problem.grid: missing or not an object")
    else:
        _check_keys(grid_raw, _GRID_KEYS, "problem.grid", errors)
        geometry = grid_raw.get("geometry")
        extent = _number(grid_raw, "extent", "problem.grid", errors, default=1.0)
        num_points = grid_raw.get("num_points")
        if not isinstance(num_points, int) or num_points < 8:
            errors.append("problem.grid.num_points: integer >= 8 required")
            num_points = 8
        dim = grid_raw.get("dim", 1)
        if not isinstance(dim, int) or dim < 1:
            errors.append("problem.grid.dim: positive integer required")
            dim = 1
        omega = _number(grid_raw, "omega", "problem.grid", errors, required=False)
        num_angles = grid_raw.get("num_angles", 0)
        include_origin = grid_raw.get("include_origin", True)
        if not isinstance(include_origin, bool):
            errors.append("problem.grid.include_origin: boolean required")
            include_origin = True
        try:
            grid = GridSpec(
                geometry=geometry,
                extent=extent,
                num_points=num_points,
                dim=dim,
                omega=omega,
                num_angles=num_angles,
                include_origin=include_origin,
            )
        except (ValueError, TypeError) as exc:
            errors.append(f"problem.grid: {exc}")

    init_raw = prob.get("initial")
    init = None
    if not isinstance(init_raw, dict):
        errors.append("problem.initial: missing or not an object")
    else:
        _check_keys(init_raw, _INITIAL_KEYS, "problem.initial", errors)
        center = _number(init_raw, "center", "problem.initial", errors, default=0.0)
        width = _number(init_raw, "width", "problem.initial", errors, default=1.0)
        epsilon = _number(init_raw, "epsilon", "problem.initial", errors, default=1.0)
        amplitude = _complex_from(
            init_raw.get("amplitude", 1.0), "problem.initial.amplitude", errors
        )
        g_amplitude = _complex_from(
            init_raw.get("g_amplitude", 0.0), "problem.initial.g_amplitude", errors
        )
        try:
            init = InitialDataSpec(
                center=center,
                width=width,
                epsilon=epsilon,
                amplitude=amplitude,
                g_amplitude=g_amplitude,
            )
        except ValueError as exc:
            errors.append(f"problem.initial: {exc}")

    coeff = None
    if not errors:
        try:
            coeff = CoefficientSpec(
                tau=tau, p=p, lam=lam, a_phase=a_phase, a0=a0, alpha=alpha, v0=v0
            )
        except ValueError as exc:
            errors.append(f"problem: {exc}")

    controls_raw = raw.get("controls", {})
    controls = None
    if not isinstance(controls_raw, dict):
        errors.append("config.controls: expected an object")
    else:
        _check_keys(controls_raw, _CONTROL_KEYS, "controls", errors)
        kwargs = {}
        for key in ("threshold", "t_max", "dt_init", "dt_min", "snapshot_dt", "growth_limit"):
            if key in controls_raw:
                val = _number(controls_raw, key, "controls", errors, required=False)
                if val is not None:
                    kwargs[key] = val
        if "thresholds" in controls_raw:
            ths = controls_raw["thresholds"]
            if not isinstance(ths, list) or not all(
                isinstance(v, (int, float)) for v in ths
            ):
                errors.append("controls.thresholds: expected a list of numbers")
            else:
                kwargs["thresholds"] = tuple(float(v) for v in ths)
        if "max_steps" in controls_raw:
            ms = controls_raw["max_steps"]
            if not isinstance(ms, int) or ms <= 0:
                errors.append("controls.max_steps: positive integer required")
            else:
                kwargs["max_steps"] = ms
        try:
            controls = RunControls(**kwargs)
        except ValueError as exc:
            errors.append(f"controls: {exc}")

    sweep_raw = raw.get("sweep")
    sweep_eps = None
    slope_tol = 0.15
    if sweep_raw is not None:
        if not isinstance(sweep_raw, dict):
            errors.append("config.sweep: expected an object")
        else:
            _check_keys(sweep_raw, _SWEEP_KEYS, "sweep", errors)
            eps = sweep_raw.get("epsilons")
            if not isinstance(eps, list) or len(eps) < 2:
                errors.append("sweep.epsilons: expected a list of at least 2 numbers")
            elif not all(isinstance(v, (int, float)) and v > 0 for v in eps):
                errors.append("sweep.epsilons: all entries must be positive numbers")
            else:
                sweep_eps = tuple(float(v) for v in eps)
            if "slope_tolerance" in sweep_raw:
                st = _number(sweep_raw, "slope_tolerance", "sweep", errors, required=False)
                if st is not None:
                    if st <= 0:
                        errors.append("sweep.slope_tolerance: must be positive")
                    else:
                        slope_tol = st

    trace_radii = None
    if "trace_radii" in raw:
        tr = raw["trace_radii"]
        if not isinstance(tr, list) or not all(
            isinstance(v, (int, float)) and v > 0 for v in tr
        ):
            errors.append("config.trace_radii: expected a list of positive numbers")
        else:
            trace_radii = tuple(float(v) for v in tr)

    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        errors.append("config.seed: integer required")
        seed = 0
    out_dir = raw.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        errors.append("config.out_dir: string required")
        out_dir = None

    problem = None
    if not errors and coeff is not None and grid is not None and init is not None:
        try:
            problem = EvolutionProblem(coeff=coeff, grid=grid, init=init)
        except ValueError as exc:
            errors.append(f"problem: {exc}")
    if errors:
        raise ConfigError(errors)
    return RunConfig(
        problem=problem,
        controls=controls,
        sweep_epsilons=sweep_eps,
        slope_tolerance=slope_tol,
        trace_radii=trace_radii,
        seed=seed,
        out_dir=out_dir,
    )


def parse_config(path: str) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError([f"config file not found: {path}"])
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{path}: not valid JSON ({exc})"]) from exc
    return config_from_dict(raw)


def _complex_out(z: complex):
    z = complex(z)
    if z.imag == 0.0:
        return z.real
    return [z.real, z.imag]


def config_to_dict(cfg: RunConfig) -> dict:
    coeff, grid, init = cfg.problem.coeff, cfg.problem.grid, cfg.problem.init
    prob: dict = {"tau": coeff.tau, "p": coeff.p, "lambda": _complex_out(coeff.lam)}
    if coeff.a_phase is not None:
        prob["a_phase"] = coeff.a_phase
    if coeff.a0 is not None:
        prob["a0"] = coeff.a0
        prob["alpha"] = coeff.alpha
    if coeff.v0 is not None:
        prob["v0"] = coeff.v0
    grid_d: dict = {
        "geometry": grid.geometry,
        "extent": grid.extent,
        "num_points": grid.num_points,
        "dim": grid.dim,
    }
    if grid.omega is not None:
        grid_d["omega"] = grid.omega
    if grid.num_angles:
        grid_d["num_angles"] = grid.num_angles
    if not grid.include_origin:
        grid_d["include_origin"] = False
    prob["grid"] = grid_d
    prob["initial"] = {
        "center": init.center,
        "width": init.width,
        "epsilon": init.epsilon,
        "amplitude": _complex_out(init.amplitude),
        "g_amplitude": _complex_out(init.g_amplitude),
    }
    ctl = cfg.controls
    controls = {
        "threshold": ctl.threshold,
        "thresholds": list(ctl.thresholds),
        "t_max": ctl.t_max,
        "snapshot_dt": ctl.snapshot_dt,
        "growth_limit": ctl.growth_limit,
        "max_steps": ctl.max_steps,
    }
    if ctl.dt_init is not None:
        controls["dt_init"] = ctl.dt_init
    if ctl.dt_min is not None:
        controls["dt_min"] = ctl.dt_min
    out: dict = {"problem": prob, "controls": controls, "seed": cfg.seed}
    if cfg.sweep_epsilons is not None:
        out["sweep"] = {
            "epsilons": list(cfg.sweep_epsilons),
            "slope_tolerance": cfg.slope_tolerance,
        }
    if cfg.trace_radii is not None:
        out["trace_radii"] = list(cfg.trace_radii)
    if cfg.out_dir is not None:
        out["out_dir"] = cfg.out_dir
    return out


def emit_config(cfg: RunConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")


# -- CSV emission -------------------------------------------------------

RECORD_COLUMNS = (
    "epsilon",
    "p",
    "tau",
    "alpha",
    "zeta",
    "status",
    "T_at_1e3",
    "T_at_1e4",
    "T_at_1e5",
    "T_at_1e6",
    "T_extrapolated",
    "dt_final",
    "h",
    "steps",
)


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    return repr(v)


def _record_row(rec: BlowupRecord) -> list:
    lookup = dict(zip(rec.thresholds, rec.t_at_thresholds))
    return [
        rec.epsilon,
        rec.p,
        rec.tau,
        rec.alpha,
        rec.zeta,
        rec.status,
        lookup.get(1e3, math.nan),
        lookup.get(1e4, math.nan),
        lookup.get(1e5, math.nan),
        lookup.get(1e6, math.nan),
        rec.t_extrapolated,
        rec.dt_final,
        rec.h,
        rec.steps,
    ]


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def emit_record(rec: BlowupRecord, path: str) -> None:
    _write_csv(path, RECORD_COLUMNS, [_record_row(rec)])


def emit_records(records, path: str) -> None:
    _write_csv(path, RECORD_COLUMNS, [_record_row(r) for r in records])


def emit_trace(trace: FunctionalTrace, path: str) -> None:
    rows = zip(trace.radii, trace.shell_mass, trace.mass)
    _write_csv(path, ("R", "y", "m"), rows)


def emit_snapshots(
    times,
    fields,
    coords: np.ndarray,
    path: str,
    time_stride: int = 1,
    node_stride: int = 1,
) -> None:
    """Flat CSV of solution snapshots: one row per (time, node).

    Strides thin the output deterministically; multi-dimensional grids are
    flattened in row-major node order.
    """
    coords = np.asarray(coords)
    pts = coords.reshape(-1, coords.shape[-1]) if coords.ndim > 1 else coords.reshape(-1, 1)
    rows = []
    for idx in range(0, len(times), time_stride):
        t = times[idx]
        flat = np.asarray(fields[idx]).reshape(-1)
        for j in range(0, flat.size, node_stride):
            z = complex(flat[j])
            rows.append([t, *pts[j], z.real, z.imag])
    dim = pts.shape[1]
    header = ("t", *(f"x{i+1}" for i in range(dim)), "u_re", "u_im")
    _write_csv(path, header, rows)


def read_trace(path: str) -> FunctionalTrace:
    radii, y, m = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "R,y,m":
            raise ValueError(f"{path}: expected header 'R,y,m'")
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}: bad row {line!r}")
            radii.append(float(parts[0]))
            y.append(float(parts[1]))
            m.append(float(parts[2]))
    return FunctionalTrace(
        radii=np.asarray(radii), shell_mass=np.asarray(y), mass=np.asarray(m)
    )


def emit_sweep(result: SweepResult, out_dir: str, stem: str = "sweep") -> dict:
    """Write the results CSV, the plot-ready .dat and the JSON summary.

    Returns the summary dictionary.
    """
    os.makedirs(out_dir, exist_ok=True)
    emit_records(result.records, os.path.join(out_dir, f"{stem}.csv"))
    with open(os.path.join(out_dir, f"{stem}.dat"), "w", encoding="utf-8", newline="\n") as fh:
        for rec in result.blowup_rows:
            fh.write(f"{_fmt(math.log(rec.epsilon))} {_fmt(math.log(rec.t_extrapolated))}\n")
    summary = {
        "problem_id": result.problem_id,
        "fit_status": result.fit_status,
        "span_ok": result.span_ok,
        "slope": result.power_fit.slope if result.power_fit else None,
        "intercept": result.power_fit.intercept if result.power_fit else None,
        "r2_power": result.power_fit.r_squared if result.power_fit else None,
        "exp_slope": result.exponential_fit.slope if result.exponential_fit else None,
        "r2_exp": result.exponential_fit.r_squared if result.exponential_fit else None,
        "verdict": result.verdict,
    }
    with open(os.path.join(out_dir, f"{stem}_summary.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return summary
