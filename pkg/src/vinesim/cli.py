"""Scenario runner CLI.

Subcommands reproduce the characterization and demonstration scenarios as
data files: workspace sweep, blocked-force trace, localization run, branch
steering, anti-gravity climb, burrow reconstruction, plus the teleop server.
Each run writes a manifest with a config digest, the produced files, and
summary metrics; the exit status is nonzero exactly when a configured
bound is violated.
"""

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import dynamics, environment, kinematics, localization, simulator, teleop
from .kinematics import DeviceGeometry
from .simulator import NoiseModel, SimConfig

MEASURED_DEFAULTS = {"alpha_deg": 51.7, "theta_deg": 56.0, "radius": 88.3}


def pct_err(measured: float, theoretical: float) -> float:
    """Percentage error convention: |measured - theoretical| / theoretical."""
    return 100.0 * abs(measured - theoretical) / abs(theoretical)


def load_config(path):
    if path is None:
        return {}
    return json.loads(Path(path).read_text())


def config_digest(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def geometry_from(config: dict) -> DeviceGeometry:
    return DeviceGeometry(**config.get("geometry", {}))


def sim_config_from(config: dict) -> SimConfig:
    return SimConfig(**config.get("sim", {}))


def noise_from(config: dict):
    section = config.get("noise")
    if section is None:
        return None
    return NoiseModel(**section)


def write_manifest(out_dir: Path, scenario: str, seed: int, config: dict, outputs, metrics):
    manifest = {
        "scenario": scenario,
        "seed": seed,
        "config_digest": config_digest(config),
        "outputs": [str(p) for p in outputs],
        "metrics": metrics,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def check_bounds(metrics: dict, bounds: dict) -> list:
    """Violations of configured [lo, hi] bounds (null = unbounded side)."""
    bad = []
    for name, (lo, hi) in bounds.items():
        v = metrics.get(name)
        if v is None:
            bad.append(f"bound on unknown metric {name!r}")
            continue
        if lo is not None and v < lo:
            bad.append(f"{name}={v:.6g} below {lo}")
        if hi is not None and v > hi:
            bad.append(f"{name}={v:.6g} above {hi}")
    return bad


def print_summary(title: str, metrics: dict):
    print(f"== {title}")
    width = max(len(k) for k in metrics) if metrics else 0
    for k, v in metrics.items():
        if isinstance(v, float):
            print(f"  {k:<{width}}  {v:.6g}")
        else:
            print(f"  {k:<{width}}  {v}")


# -- subcommands ---------------------------------------------------------------


def cmd_workspace(args, config, out_dir):
    geom = geometry_from(config)
    res = math.radians(args.resolution_deg)
    theta, beta, pts = kinematics.workspace_surface(geom, res)
    surface_csv = out_dir / "workspace_surface.csv"
    kinematics.write_workspace_csv(surface_csv, theta, beta, pts)
    sweep_t, sweep_b = kinematics.characterization_sweep(geom, res)
    sweep_pts = kinematics.tip_points_for_angles(sweep_t, sweep_b, geom)
    sweep_csv = out_dir / "workspace_sweep.csv"
    kinematics.write_workspace_csv(sweep_csv, sweep_t, sweep_b, sweep_pts)

    measured = dict(MEASURED_DEFAULTS)
    measured.update(config.get("measured", {}))
    alpha_deg = math.degrees(geom.alpha_max)
    polar = np.degrees(np.arccos(np.clip(pts[:, 2] / geom.r_eff, -1, 1)))
    metrics = {
        "alpha_max_deg": alpha_deg,
        "theta_max_deg": alpha_deg,
        "r_eff_m": geom.r_eff,
        "max_polar_deg": float(np.max(polar)),
        "n_samples": len(pts),
        "pct_err_alpha": pct_err(measured["alpha_deg"], alpha_deg),
        "pct_err_theta": pct_err(measured["theta_deg"], alpha_deg),
        # the fitted sphere radius is reported as a unit-agnostic value at
        # millimeter scale alongside r_eff in meters
        "pct_err_radius": pct_err(measured["radius"], 1000.0 * geom.r_eff),
    }
    return metrics, [surface_csv, sweep_csv]


def cmd_blocked_force(args, config, out_dir):
    geom = geometry_from(config)
    tau_m = config.get("stall_torque", dynamics.STALL_TORQUE)
    trace = dynamics.blocked_force_trace(tau_m=tau_m, r_m=geom.r_m, pulses=args.pulses)
    csv_path = out_dir / "blocked_force.csv"
    dynamics.write_blocked_force_csv(csv_path, *trace)
    peak = float(np.max(trace[3]))
    metrics = {
        "peak_force_N": peak,
        "stall_torque_Nm": tau_m,
        "spool_radius_m": geom.r_m,
        "back_solved_torque_Nm": peak * geom.r_m,
        "back_solved_torque_pct_dev": pct_err(peak * geom.r_m, tau_m) if tau_m else 0.0,
        "fx_peak_N": float(np.max(np.abs(trace[1]))),
        "fy_peak_N": float(np.max(np.abs(trace[2]))),
    }
    return metrics, [csv_path]


def _scenario_outputs(res, out_dir, estimate=None):
    outputs = []
    imu_csv = out_dir / "imu.csv"
    localization.write_imu_csv(imu_csv, res.frames)
    enc_csv = out_dir / "encoder.csv"
    localization.write_encoder_csv(enc_csv, res.encoder)
    truth_csv = out_dir / "ground_truth.csv"
    with open(truth_csv, "w") as f:
        f.write("x,y,z\n")
        for p in res.ground_truth:
            f.write(",".join(repr(float(v)) for v in p) + "\n")
    outputs += [imu_csv, enc_csv, truth_csv]
    if estimate is not None:
        traj = out_dir / "trajectory.ndjson"
        localization.write_trajectory_ndjson(traj, estimate)
        outputs.append(traj)
    states = out_dir / "states.ndjson"
    with open(states, "w") as f:
        for s in res.states:
            f.write(
                json.dumps(
                    {
                        "t": s.t,
                        "p": [float(v) for v in s.tip_position],
                        "q": [float(v) for v in s.orientation],
                        "everted": s.everted_length,
                        "braced": s.braced,
                        "blocked": s.motion_blocked,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )
    outputs.append(states)
    return outputs


def cmd_localize(args, config, out_dir):
    cfg = sim_config_from(config)
    noise = noise_from(config)
    res = simulator.run_scenario("pipe3d-45", noise=noise, seed=args.seed, config=cfg)
    est = localization.run_pipeline(
        res.frames, res.encoder, mode=args.mode,
        q0=res.initial_orientation, start=res.start_position,
    )
    vs_truth = localization.tracking_error(est, res.ground_truth)
    ref = environment.centerline(res.network)
    vs_center = localization.tracking_error(est, ref)
    metrics = {
        "mode": args.mode,
        "mean_error_m": vs_truth.mean,
        "std_error_m": vs_truth.std_dev,
        "mean_error_vs_centerline_m": vs_center.mean,
        "path_length_m": est.path_length,
        "growth_sum_m": float(
            sum(localization.spool_to_length(e.delta_theta, 0.02) for e in res.encoder)
        ),
    }
    return metrics, _scenario_outputs(res, out_dir, est)


def cmd_steer2d(args, config, out_dir):
    cfg = sim_config_from(config)
    script = None
    if args.script:
        script = simulator.load_script(args.script)
    elif args.null_script:
        script = {"schedule": [{"t_start": 0.0, "motor": 4, "duty": 100, "duration": 30.0}]}
    res = simulator.run_scenario("branch2d-7", noise=noise_from(config), script=script,
                                 seed=args.seed, config=cfg)
    labels = [e["label"] for e in res.junction_events]
    metrics = {
        "junctions_crossed": len(labels),
        "turns_taken": labels.count("turn"),
        "outcome_labels": ",".join(labels) or "none",
        "everted_m": res.states[-1].everted_length,
    }
    return metrics, _scenario_outputs(res, out_dir)


def cmd_climb3d(args, config, out_dir):
    cfg = sim_config_from(config)
    script = simulator.default_script("climb45", cfg)
    if args.no_bracing:
        script["schedule"] = [e for e in script["schedule"] if e.get("motor") != simulator.MOTOR_BRACE]
    res = simulator.run_scenario("climb45", noise=noise_from(config), script=script,
                                 seed=args.seed, config=cfg)
    labels = [e["label"] for e in res.junction_events]
    metrics = {
        "climb_success": int(labels == ["up"]),
        "outcome_labels": ",".join(labels) or "none",
        "bracing_used": int(not args.no_bracing),
        "everted_m": res.states[-1].everted_length,
    }
    return metrics, _scenario_outputs(res, out_dir)


def cmd_burrow(args, config, out_dir):
    cfg = sim_config_from(config)
    res = simulator.run_scenario("burrow-field", noise=noise_from(config),
                                 seed=args.seed, config=cfg)
    est = localization.run_pipeline(
        res.frames, res.encoder,
        q0=res.initial_orientation, start=res.start_position,
    )
    profile = environment.reconstruct_burrow(
        est,
        temperature=np.append(res.temperature, res.temperature[-1]),
        humidity=np.append(res.humidity, res.humidity[-1]),
    )
    burrow_csv = out_dir / "burrow_profile.csv"
    environment.write_burrow_csv(burrow_csv, profile)
    summary = profile.summary()
    metrics = {
        "displacement_x_m": summary["displacement_m"][0],
        "displacement_y_m": summary["displacement_m"][1],
        "displacement_z_m": summary["displacement_m"][2],
        "vertical_rise_m": summary["vertical_rise_m"],
        "bending_angle_deg": summary["bending_angle_deg"],
        "temperature_C": summary["temperature_C"],
        "humidity_pct": summary["humidity_pct"],
        "path_length_m": summary["path_length_m"],
    }
    return metrics, _scenario_outputs(res, out_dir) + [burrow_csv]


def cmd_serve(args, config, out_dir):
    import asyncio

    cfg = sim_config_from(config)
    network = None
    script = None
    if args.scenario:
        script = simulator.load_script(args.scenario)
        if "preset" in script:
            network = environment.preset_course(script["preset"])
    elif args.preset:
        network = environment.preset_course(args.preset)
    sim = simulator.Simulator(network, cfg, geometry_from(config), seed=args.seed)
    if script is not None:
        simulator._apply_schedule(sim, script)
    server = teleop.TeleopServer(sim, bind=args.bind, telemetry_hz=args.telemetry_hz,
                                 noise=noise_from(config))

    async def _main():
        await server.start()
        print(f"teleop: tcp {server.host}:{server.port}  ws {server.host}:{server.ws_port}")
        await asyncio.gather(
            server._server.serve_forever(), server._ws_server.serve_forever()
        )

    try:
        asyncio.run(_main())
    except KeyboardInterrupt:
        pass
    return {"served": 1}, []


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vinesim",
        description="steered soft growing robot scenarios and characterization",
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", default="runs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("workspace", help="reachable-surface sweep and angle errors")
    p.add_argument("--resolution-deg", type=float, default=0.5)
    p.set_defaults(func=cmd_workspace)

    p = sub.add_parser("blocked-force", help="stall-force pulse trace")
    p.add_argument("--pulses", type=int, default=4)
    p.set_defaults(func=cmd_blocked_force)

    p = sub.add_parser("localize", help="dead-reckoning run on the 3D pipe course")
    p.add_argument("--mode", choices=["heading", "velocity"], default="heading")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("steer2d", help="branching-course steering run")
    p.add_argument("--script", help="scenario script JSON")
    p.add_argument("--null-script", action="store_true", help="grow straight, no steering")
    p.set_defaults(func=cmd_steer2d)

    p = sub.add_parser("climb3d", help="anti-gravity branch climb")
    p.add_argument("--no-bracing", action="store_true")
    p.set_defaults(func=cmd_climb3d)

    p = sub.add_parser("burrow", help="burrow reconstruction with environment overlay")
    p.set_defaults(func=cmd_burrow)

    p = sub.add_parser("serve", help="teleoperation session service")
    p.add_argument("--bind", default=None, help="host:port (or VINESIM_BIND)")
    p.add_argument("--telemetry-hz", type=float, default=teleop.DEFAULT_TELEMETRY_HZ)
    p.add_argument("--scenario", help="scenario script JSON file")
    p.add_argument("--preset", help="course preset to load")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = load_config(args.config)
    out_dir = Path(args.out_dir) / args.command
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics, outputs = args.func(args, config, out_dir)
    summary_path = out_dir / "summary.json"
    summary_path.write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    outputs = list(outputs) + [summary_path]
    manifest_path = write_manifest(out_dir, args.command, args.seed, config, outputs, metrics)
    print_summary(args.command, metrics)
    print(f"  manifest: {manifest_path}")
    missing = [str(p) for p in outputs if not Path(p).exists()]
    if missing:
        print(f"error: missing outputs: {missing}", file=sys.stderr)
        return 2
    violations = check_bounds(metrics, config.get("bounds", {}))
    if violations:
        for v in violations:
            print(f"bound violated: {v}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
