"""Command-line interface.

Subcommands:

  simulate   integrate one collision scenario -> trajectory CSV + outcome JSON
  limits     tabulate admissible speeds per region/mode -> CSV or JSON
  sweep      workspace sweep -> sample CSV, scaling CSV, box stats, SVG
  filter     run the filtered velocity loop from a scenario file -> log CSV

Every run writes a ``run_manifest.json`` with the tool version, the resolved
configuration and SHA-256 digests of all file inputs, so results can be
reproduced exactly.  Exit codes: 0 success, 2 usage error, 3 invalid
input/configuration, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import yaml

from . import __version__, assets
from .body import ContactMode, REGION_IDS, REGION_LABELS, load_body_table
from .collision import CollisionScenario, simulate, total_energy
from .dynamics import load_robot_model, iso_effective_mass
from .errors import (ConstrainedDirectionError, ConvergenceError, DomainError,
                     PflError, ReportError, SchemaError, StepSizeError,
                     SweepError, ValidationError)
from .limits import LimitQuery, compute_limit
from .safety_filter import (FilterConfig, PlantState, filter_velocity,
                            simulate_loop, tank_init)
from .svgplot import line_chart
from .sweep import (ALL_COMBOS, MassSource, SweepConfig, render_sweep_svg,
                    run_sweep, scaling_report, write_boxstats_json,
                    write_scaling_csv, write_sweep_csv)

_USAGE_EXIT = 2
_INPUT_EXIT = 3
_NUMERIC_EXIT = 4

_MODE_ALIASES = {
    "transient": ContactMode.TRANSIENT,
    "qs-free": ContactMode.QUASI_STATIC_FREE,
    "quasi_static_free": ContactMode.QUASI_STATIC_FREE,
    "qs-clamped": ContactMode.QUASI_STATIC_CLAMPED,
    "quasi_static_clamped": ContactMode.QUASI_STATIC_CLAMPED,
}


def _parse_mode(text: str) -> ContactMode:
    try:
        return _MODE_ALIASES[text.strip().lower()]
    except KeyError:
        raise ValidationError(
            f"unknown contact mode {text!r}; valid: transient, qs-free, "
            f"qs-clamped") from None


def _parse_mass(text: str) -> float:
    value = float(text)
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    return value


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, subcommand: str, config: dict,
                    inputs: dict[str, Path], outputs: list[str]) -> None:
    manifest = {
        "tool": "pflsafe",
        "version": __version__,
        "subcommand": subcommand,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "config": config,
        "inputs": {name: {"path": str(path), "sha256": _sha256(path)}
                   for name, path in inputs.items()},
        "outputs": outputs,
    }
    with open(out_dir / "run_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ------------------------------------------------------------- simulate

def _cmd_simulate(args) -> int:
    scenario = CollisionScenario(m_r=args.mr, m_h=args.mh, k=args.k, v0=args.v0)
    traj, outcome = simulate(scenario, dt=args.dt, horizon=args.horizon)
    out = _out_dir(args)

    with open(out / "trajectory.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,v_r,v_h,dx\n")
        for i in range(len(traj.t)):
            fh.write(f"{float(traj.t[i])!r},{float(traj.v_r[i])!r},"
                     f"{float(traj.v_h[i])!r},{float(traj.dx[i])!r}\n")

    energy = total_energy(scenario, traj)
    with open(out / "outcome.json", "w", encoding="utf-8") as fh:
        json.dump({
            "v_star": outcome.v_star, "t_star": outcome.t_star,
            "dx_max": outcome.dx_max, "f_peak": outcome.f_peak,
            "delta_k": outcome.delta_k, "k0": outcome.k0,
            "k_star": outcome.k_star, "degenerate": outcome.degenerate,
            "energy_drift_rel": float(abs(energy - energy[0]).max()
                                      / max(energy[0], 1e-300)),
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")

    svg = line_chart(
        {"robot speed [m/s]": (traj.t, traj.v_r),
         "body-part speed [m/s]": (traj.t, traj.v_h),
         "compression [m]": (traj.t, traj.dx)},
        title=f"collision: m_r={args.mr:g} kg, m_h={args.mh:g} kg, "
              f"k={args.k:g} N/m, v0={args.v0:g} m/s",
        xlabel="time [s]")
    (out / "trajectory.svg").write_text(svg, encoding="utf-8")

    _write_manifest(out, "simulate",
                    {"m_r": args.mr, "m_h": args.mh, "k": args.k,
                     "v0": args.v0, "dt": args.dt, "horizon": args.horizon},
                    {}, ["trajectory.csv", "outcome.json", "trajectory.svg"])
    print(f"peak force {outcome.f_peak:.6g} N at t* = {outcome.t_star:.6g} s; "
          f"common velocity {outcome.v_star:.6g} m/s")
    return 0


# --------------------------------------------------------------- limits

def _cmd_limits(args) -> int:
    table_path = Path(args.body_table)
    table = load_body_table(table_path)
    inputs = {"body_table": table_path}

    if args.mass is not None:
        robot_mass = args.mass
        mass_note = "explicit"
    else:
        robot_path = Path(args.robot)
        robot_mass = iso_effective_mass(load_robot_model(robot_path),
                                        payload=args.payload)
        inputs["robot"] = robot_path
        mass_note = "constant (half moving mass + payload)"

    regions = REGION_IDS if args.region == "all" else (args.region,)
    modes = (tuple(ContactMode) if args.mode == "all"
             else (_parse_mode(args.mode),))

    rows = []
    for region in regions:
        params = table[region]
        for mode in modes:
            if params.clamped_only and mode is not ContactMode.QUASI_STATIC_CLAMPED:
                continue
            limit = compute_limit(
                LimitQuery(region=region, mode=mode, robot_mass=robot_mass,
                           contact_area=args.area), table)
            rows.append({
                "region": params.region_id, "mode": mode.value,
                "robot_mass_kg": robot_mass,
                "contact_area_cm2": args.area,
                "binding_criterion": limit.binding_criterion,
                "u_s_max_J": limit.u_s_max,
                "v0_max_mps": limit.v0_max,
                "k0_max_J": limit.k0_max,
            })

    out = _out_dir(args)
    if args.format == "json":
        out_name = "limits.json"
        with open(out / out_name, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        out_name = "limits.csv"
        header = ["region", "mode", "robot_mass_kg", "contact_area_cm2",
                  "binding_criterion", "u_s_max_J", "v0_max_mps", "k0_max_J"]
        with open(out / out_name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(str(row[h]) for h in header) + "\n")

    _write_manifest(out, "limits",
                    {"region": args.region, "mode": args.mode,
                     "robot_mass": robot_mass, "mass_source": mass_note,
                     "contact_area": args.area, "format": args.format},
                    inputs, [out_name])
    for row in rows:
        print(f"{REGION_LABELS[row['region']]:<20} {row['mode']:<22} "
              f"v0_max = {row['v0_max_mps']:.4f} m/s "
              f"({row['binding_criterion']} bound)")
    return 0


# ---------------------------------------------------------------- sweep

def _sweep_config_from_file(path: Path | None, workers: int | None) -> SweepConfig:
    raw = {}
    if path is not None:
        loaded = yaml.safe_load(path.read_text(encoding="utf-8"))
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise SchemaError("sweep config: top level must be a mapping")
        raw = loaded
    known = {"box_min", "box_max", "grid_spacing", "n_directions",
             "direction_style", "contact_area", "payload", "n_workers"}
    unknown = set(raw) - known
    if unknown:
        raise SchemaError(f"sweep config: unknown keys {sorted(unknown)}")
    kwargs = {k: raw[k] for k in known & set(raw)}
    if "box_min" in kwargs:
        kwargs["box_min"] = tuple(float(v) for v in kwargs["box_min"])
    if "box_max" in kwargs:
        kwargs["box_max"] = tuple(float(v) for v in kwargs["box_max"])
    if workers is not None:
        kwargs["n_workers"] = workers
    return SweepConfig(**kwargs)


def _cmd_sweep(args) -> int:
    table_path = Path(args.body_table)
    robot_path = Path(args.robot)
    table = load_body_table(table_path)
    model = load_robot_model(robot_path)
    config_path = Path(args.config) if args.config else None
    config = _sweep_config_from_file(config_path, args.workers)

    result = run_sweep(model, table, config)
    report = scaling_report(result)

    out = _out_dir(args)
    write_sweep_csv(result, out / "sweep_result.csv")
    write_scaling_csv(report, out / "scaling_report.csv")
    write_boxstats_json(result, out / "fig_boxstats.json")
    (out / "sweep_boxplot.svg").write_text(render_sweep_svg(result),
                                           encoding="utf-8")

    inputs = {"body_table": table_path, "robot": robot_path}
    if config_path is not None:
        inputs["config"] = config_path
    _write_manifest(out, "sweep",
                    {"box_min": list(config.box_min),
                     "box_max": list(config.box_max),
                     "grid_spacing": config.grid_spacing,
                     "n_directions": config.n_directions,
                     "direction_style": config.direction_style,
                     "contact_area": config.contact_area,
                     "payload": config.payload,
                     "n_workers": config.n_workers},
                    inputs,
                    ["sweep_result.csv", "scaling_report.csv",
                     "fig_boxstats.json", "sweep_boxplot.svg"])
    print(f"grid points {result.n_grid}, reachable {result.n_reachable}, "
          f"near-singular {result.n_singular}; constant effective mass "
          f"{result.iso_mass:.4f} kg")
    return 0


# --------------------------------------------------------------- filter

def _cmd_filter(args) -> int:
    scenario_path = Path(args.scenario)
    raw = yaml.safe_load(scenario_path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise SchemaError("filter scenario: top level must be a mapping")
    known = {"region", "mode", "contact_area", "robot_mass", "payload",
             "plant_mass", "budget", "duration", "period", "gain",
             "power_cap", "recycling", "velocity_filter", "nominal_speed"}
    unknown = set(raw) - known
    if unknown:
        raise SchemaError(f"filter scenario: unknown keys {sorted(unknown)}")

    table_path = Path(args.body_table)
    table = load_body_table(table_path)
    inputs = {"scenario": scenario_path, "body_table": table_path}

    mode = _parse_mode(str(raw.get("mode", "transient")))
    region = str(raw.get("region", "face"))
    payload = float(raw.get("payload", 0.0))
    mass_spec = raw.get("robot_mass", "constant")
    if mass_spec == "constant":
        robot_path = Path(args.robot)
        robot_mass = iso_effective_mass(load_robot_model(robot_path), payload)
        inputs["robot"] = robot_path
    else:
        robot_mass = float(mass_spec)

    limit = compute_limit(
        LimitQuery(region=region, mode=mode, robot_mass=robot_mass,
                   contact_area=float(raw.get("contact_area", 1.0))), table)

    budget_spec = raw.get("budget", "k0_max")
    if budget_spec == "k0_max":
        budget = limit.k0_max
    elif budget_spec == "u_s_max":
        budget = limit.u_s_max
    else:
        budget = float(budget_spec)

    duration = float(raw.get("duration", 2.0))
    cfg = FilterConfig(speed_limit=limit, period=float(raw.get("period", 1e-3)),
                       power_cap=(float(raw["power_cap"])
                                  if raw.get("power_cap") is not None else None))
    plant = PlantState(mass=float(raw.get("plant_mass") or robot_mass))
    tank = tank_init(budget, recycling_enabled=bool(raw.get("recycling", False)))
    nominal_speed = float(raw.get("nominal_speed", 2.0 * limit.v0_max))
    gain = float(raw["gain"]) if raw.get("gain") is not None else None

    log = simulate_loop(plant, lambda t: nominal_speed, cfg, tank, duration,
                        velocity_filter=bool(raw.get("velocity_filter", True)),
                        gain=gain)
    out = _out_dir(args)
    log.write_csv(out / "filter_log.csv")
    svg = line_chart(
        {"nominal [m/s]": (log.t, log.v_nominal),
         "commanded [m/s]": (log.t, log.v_commanded),
         "plant speed [m/s]": (log.t, log.velocity),
         "tank energy [J]": (log.t, log.tank_energy)},
        title=f"filtered loop: {REGION_LABELS[table[region].region_id]}, "
              f"{mode.value}",
        xlabel="time [s]",
        hlines={"v0_max": limit.v0_max})
    (out / "filter_log.svg").write_text(svg, encoding="utf-8")

    peak = float(abs(log.velocity).max())
    summary = {
        "region": table[region].region_id, "mode": mode.value,
        "robot_mass_kg": robot_mass, "v0_max_mps": limit.v0_max,
        "budget_J": budget, "peak_speed_mps": peak,
        "peak_ke_J": float(log.ke.max()),
        "tank_final_J": float(log.tank_energy[-1]),
        "injected_total_J": float(log.injected_cum[-1]),
    }
    with open(out / "filter_summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    _write_manifest(out, "filter", {k: raw.get(k) for k in sorted(known)},
                    inputs,
                    ["filter_log.csv", "filter_log.svg", "filter_summary.json"])
    print(f"peak speed {peak:.6g} m/s vs limit {limit.v0_max:.6g} m/s; "
          f"injected {summary['injected_total_J']:.6g} J of "
          f"{budget:.6g} J budget")
    return 0


# ----------------------------------------------------------------- main

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pflsafe",
        description="Power-and-force-limiting safety analysis for "
                    "collaborative robots.")
    parser.add_argument("--version", action="version",
                        version=f"pflsafe {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_sim = sub.add_parser("simulate", help="integrate one collision scenario")
    p_sim.add_argument("--mr", type=float, required=True,
                       help="robot effective mass [kg]")
    p_sim.add_argument("--mh", type=_parse_mass, required=True,
                       help="body-part effective mass [kg], 'inf' = clamped")
    p_sim.add_argument("--k", type=float, required=True,
                       help="contact stiffness [N/m]")
    p_sim.add_argument("--v0", type=float, required=True,
                       help="impact speed [m/s]")
    p_sim.add_argument("--dt", type=float, default=None,
                       help="integration step [s] (default: period/1000)")
    p_sim.add_argument("--horizon", type=float, default=None,
                       help="simulated time [s] (default: 3/4 period)")
    p_sim.add_argument("--out", default="pflsafe-out", help="output directory")
    p_sim.set_defaults(func=_cmd_simulate)

    p_lim = sub.add_parser("limits", help="tabulate admissible speeds")
    p_lim.add_argument("--region", default="all",
                       help="region id or 'all' (default)")
    p_lim.add_argument("--mode", default="all",
                       help="transient | qs-free | qs-clamped | all")
    p_lim.add_argument("--mass", type=float, default=None,
                       help="robot effective mass [kg]; default: constant "
                            "mass of --robot")
    p_lim.add_argument("--payload", type=float, default=0.0,
                       help="payload [kg] for the constant-mass default")
    p_lim.add_argument("--area", type=float, default=1.0,
                       help="contact area [cm^2] (default 1)")
    p_lim.add_argument("--body-table", default=str(assets.body_table_path()),
                       help="body-region limit table CSV")
    p_lim.add_argument("--robot", default=str(assets.robot_model_path()),
                       help="robot model YAML")
    p_lim.add_argument("--format", choices=("csv", "json"), default="csv")
    p_lim.add_argument("--out", default="pflsafe-out")
    p_lim.set_defaults(func=_cmd_limits)

    p_sweep = sub.add_parser("sweep", help="workspace speed-limit sweep")
    p_sweep.add_argument("--config", default=None,
                         help="sweep configuration YAML (defaults apply)")
    p_sweep.add_argument("--workers", type=int, default=None,
                         help="worker processes (overrides config)")
    p_sweep.add_argument("--body-table", default=str(assets.body_table_path()))
    p_sweep.add_argument("--robot", default=str(assets.robot_model_path()))
    p_sweep.add_argument("--out", default="pflsafe-out")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_filt = sub.add_parser("filter", help="run the filtered velocity loop")
    p_filt.add_argument("--scenario", required=True,
                        help="loop scenario YAML")
    p_filt.add_argument("--body-table", default=str(assets.body_table_path()))
    p_filt.add_argument("--robot", default=str(assets.robot_model_path()))
    p_filt.add_argument("--out", default="pflsafe-out")
    p_filt.set_defaults(func=_cmd_filter)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, ValidationError, DomainError, ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _INPUT_EXIT
    except KeyError as exc:
        # unknown region names surface here with the valid list attached
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return _INPUT_EXIT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _INPUT_EXIT
    except (StepSizeError, ConvergenceError, SweepError,
            ConstrainedDirectionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _NUMERIC_EXIT


if __name__ == "__main__":
    sys.exit(main())
