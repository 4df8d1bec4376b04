"""Command-line entry point.

Exit codes: 0 success, 1 domain failure (e.g. IK did not converge),
2 usage / parse / validation errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .geometry import InvalidArgumentError, Pose, euler_xyz_to_matrix
from .harness import load_pose_log, repeatability_run, score_targets
from .kinematics import IkParams, JointLimitError, forward_kinematics, ik_dls
from .model import ModelFormatError, load_model
from .scene import load_scene, patient_vertices
from .statics import format_statics_report, statics_report
from .teleop import TeleopConfig, load_trace
from .workspace import bin_reachability, export_heatmap, load_targets, sample_workspace

USAGE_ERROR = 2
DOMAIN_ERROR = 1


def _parse_floats(text: str, n: int, what: str) -> np.ndarray:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != n:
        raise InvalidArgumentError(f"{what}: expected {n} numbers, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise InvalidArgumentError(f"{what}: {exc}") from exc


def _pose_text(pose: Pose, frame: int) -> str:
    pos = " ".join(f"{x:.12g}" for x in pose.position)
    rows = [" ".join(f"{x:.12g}" for x in row) for row in pose.rotation]
    return (f"frame {frame} position (m): {pos}\n"
            f"rotation (rows):\n  " + "\n  ".join(rows))


def _pose_json(pose: Pose) -> dict:
    return {"position": [float(x) for x in pose.position],
            "rotation": [[float(x) for x in row] for row in pose.rotation]}


def cmd_model(args) -> int:
    model = load_model(args.model)
    print(f"model: {model.name}")
    print("frame  type       a (m)      alpha (rad)  d (m)      theta (rad)")
    for i, row in enumerate(model.dh.rows, start=1):
        print(f"{i:>5}  {row.joint_type:<9} {row.a:<10.6g} {row.alpha:<12.6g} "
              f"{row.d_offset:<10.6g} {row.theta_offset:.6g}")
    print("joint limits:")
    for j in range(7):
        print(f"  q{j + 1}: [{model.limits.lower[j]:.6g}, {model.limits.upper[j]:.6g}]")
    print("mixing matrix (q = M m):")
    for row in model.mixing.M:
        print("  " + " ".join(f"{v:>9.4g}" for v in row))
    enc = model.encoder
    print(f"encoder: {enc.counts_per_motor_rev} counts/motor-rev, {enc.gear_ratio}:1 "
          f"-> {enc.resolution_deg_per_count:.4g} deg/count at the output shaft")
    return 0


def cmd_fk(args) -> int:
    model = load_model(args.model)
    q = _parse_floats(args.q, 7, "--q")
    pose = forward_kinematics(model.dh, q, frame=args.frame, limits=model.limits)
    if args.json:
        print(json.dumps(_pose_json(pose)))
    else:
        print(_pose_text(pose, args.frame))
    return 0


def cmd_ik(args) -> int:
    model = load_model(args.model)
    pos = _parse_floats(args.pos, 3, "--pos")
    if args.rot is not None:
        rot = _parse_floats(args.rot, 9, "--rot").reshape(3, 3)
    elif args.rpy is not None:
        rot = euler_xyz_to_matrix(_parse_floats(args.rpy, 3, "--rpy"))
    else:
        rot = np.eye(3)
    target = Pose(pos, rot).require_orthonormal(1e-6)
    q0 = (_parse_floats(args.q0, 7, "--q0") if args.q0 is not None
          else model.limits.midpoint())
    result = ik_dls(model.dh, q0, target, IkParams(), limits=model.limits)
    doc = {"q": [float(x) for x in result.q],
           "position_residual_m": result.position_residual,
           "orientation_residual_rad": result.orientation_residual,
           "iterations": result.iterations,
           "converged": result.converged}
    if args.json:
        print(json.dumps(doc))
    else:
        print("q: " + " ".join(f"{x:.12g}" for x in result.q))
        print(f"residual: {result.position_residual:.3g} m, "
              f"{result.orientation_residual:.3g} rad "
              f"({result.iterations} iterations, "
              f"{'converged' if result.converged else 'NOT converged'})")
    return 0 if result.converged else DOMAIN_ERROR


def cmd_statics(args) -> int:
    model = load_model(args.model)
    report = statics_report(run=model.cable_drive, thrust_n=args.force)
    if args.json:
        doc = {"thrust_n": report["thrust_n"],
               "torque_bounds_nm": list(report["torque_bounds_nm"]),
               "stiffness_n_per_mm": report["stiffness_n_per_mm"],
               "deflection_mm_per_n": report["deflection_mm_per_n"],
               "joint_compliance_rad_per_nm": report["joint_compliance_rad_per_nm"],
               "encoder_resolution_deg_per_count": model.encoder.resolution_deg_per_count,
               "checks": [{"name": c.name, "demand": c.demand, "limit": c.limit,
                           "passed": c.passed} for c in report["rating"].checks],
               "all_pass": report["rating"].all_pass}
        print(json.dumps(doc))
    else:
        print(format_statics_report(report))
    if args.fig:
        from .plots import render_statics_figure
        render_statics_figure(report, args.fig)
        print(f"figure written to {args.fig}", file=sys.stderr)
    return 0 if report["rating"].all_pass else DOMAIN_ERROR


def cmd_workspace(args) -> int:
    model = load_model(args.model)
    scene = load_scene(args.scene)
    if args.targets:
        targets = load_targets(args.targets)
    elif scene.targets_file:
        targets = load_targets(scene.targets_file)
    else:
        targets = patient_vertices(scene, args.target_spacing)
    samples = sample_workspace(scene, model, args.samples, seed=args.seed,
                               workers=args.workers)
    heatmap = bin_reachability(samples, targets, radius=args.radius)
    export_heatmap(heatmap, args.out)
    print(f"samples: {len(samples)}  collision-free: {samples.free_fraction:.4f}  "
          f"targets: {len(targets)}  max count: {heatmap.max_count}  "
          f"reached targets: {int(np.count_nonzero(heatmap.counts))}")
    print(f"heat map written to {args.out}")
    if args.fig:
        from .plots import render_heatmap_figure
        render_heatmap_figure(heatmap, args.fig, free_fraction=samples.free_fraction)
        print(f"figure written to {args.fig}")
    return 0


def cmd_serve(args) -> int:
    from .controller import ControllerConfig
    from .server import TeleopService, controller_config_for_model, serve_static
    model = load_model(args.model)
    scene = load_scene(args.scene) if not args.no_scene else None
    config = TeleopConfig(collision_guard=not args.no_guard and scene is not None)
    controller_config = controller_config_for_model(
        model, ControllerConfig(timestep_s=args.timestep))
    service = TeleopService(model, scene, teleop_config=config,
                            controller_config=controller_config,
                            host=args.host, tcp_port=args.port,
                            ws_port=args.ws_port, realtime=args.realtime)
    service.start()
    print(f"controller TCP protocol on {service.tcp.host}:{service.tcp.port}")
    print(f"cockpit WebSocket on ws://{service.host}:{service.ws_port}")
    print(f"mode: {'realtime' if args.realtime else 'lockstep (fast)'}")
    httpd = None
    cockpit_dir = Path(args.cockpit_dir) if args.cockpit_dir else None
    if cockpit_dir and cockpit_dir.exists():
        httpd, _ = serve_static(cockpit_dir, host=args.host, port=args.http_port)
        print(f"cockpit static files on http://{args.host}:{httpd.server_address[1]}")
    try:
        import threading
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        service.close()
        if httpd is not None:
            httpd.shutdown()
    return 0


def cmd_replay(args) -> int:
    from .server import replay_trace
    model = load_model(args.model)
    scene = load_scene(args.scene) if not args.no_scene else None
    config = TeleopConfig(collision_guard=not args.no_guard and scene is not None)
    trace = load_trace(args.trace)
    snapshot = replay_trace(model, trace, total_ticks=args.ticks, scene=scene,
                            teleop_config=config)
    print(json.dumps(snapshot, separators=(",", ":")))
    return 0


def cmd_harness(args) -> int:
    model = load_model(args.model)
    if args.harness_cmd == "repeat":
        report = repeatability_run(model, repeats=args.repeats)
        print(f"points: {report.points.shape[0]}  visits: {args.repeats}")
        print(f"worst position std:    {report.worst_position_std_m:.6g} m")
        print(f"worst orientation std: {report.worst_orientation_std_rad:.6g} rad")
        return 0
    if args.harness_cmd == "score":
        poses = load_pose_log(args.log)
        targets = load_targets(args.targets)
        result = score_targets(np.array([p.position for p in poses]), targets)
        print(f"targets: {len(targets)}  mean error: {result['mean_m'] * 1e3:.3f} mm  "
              f"std: {result['std_m'] * 1e3:.3f} mm  max: {result['max_m'] * 1e3:.3f} mm")
        return 0
    raise InvalidArgumentError("unknown harness command")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="borearm",
        description="Digital twin of a 7-DoF in-bore needle-placement arm.")
    parser.add_argument("--model", default=None, help="robot model YAML (default: shipped)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("model", help="print the robot model")

    p = sub.add_parser("fk", help="forward kinematics")
    p.add_argument("--q", required=True, help="7 joint values, comma or space separated")
    p.add_argument("--frame", type=int, default=8)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("ik", help="damped-least-squares inverse kinematics")
    p.add_argument("--pos", required=True, help="target position x,y,z (m)")
    p.add_argument("--rot", help="target rotation, 9 row-major values")
    p.add_argument("--rpy", help="target rotation as roll,pitch,yaw (rad)")
    p.add_argument("--q0", help="starting configuration (default: mid-range)")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("statics", help="torque bounds, stiffness and rating report")
    p.add_argument("--force", type=float, default=8.0, help="needle thrust (N)")
    p.add_argument("--fig", help="also render the report figure to this file")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("workspace", help="Monte Carlo reachability heat map")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scene", default=None, help="scene YAML (default: shipped)")
    p.add_argument("--targets", default=None, help="target vertex list file")
    p.add_argument("--target-spacing", type=float, default=0.02,
                   help="lattice spacing for generated patient-surface targets")
    p.add_argument("--radius", type=float, default=5e-3)
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--fig", help="also render the heat-map figure to this file")

    p = sub.add_parser("serve", help="run controller + teleop + cockpit endpoint")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7781, help="controller TCP port")
    p.add_argument("--ws-port", type=int, default=7782, help="cockpit WebSocket port")
    p.add_argument("--http-port", type=int, default=7780, help="cockpit static port")
    p.add_argument("--cockpit-dir", default=None, help="cockpit bundle directory")
    p.add_argument("--scene", default=None)
    p.add_argument("--no-scene", action="store_true")
    p.add_argument("--no-guard", action="store_true", help="disable the collision guard")
    p.add_argument("--timestep", type=float, default=1e-3,
                   help="controller tick period in seconds")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--realtime", action="store_true",
                      help="pace at wall-clock 400 Hz (default: lockstep)")
    mode.add_argument("--fast", action="store_true",
                      help="lockstep mode, one teleop tick per cockpit message")

    p = sub.add_parser("replay", help="replay an input trace offline")
    p.add_argument("--trace", required=True)
    p.add_argument("--ticks", type=int, default=None)
    p.add_argument("--scene", default=None)
    p.add_argument("--no-scene", action="store_true")
    p.add_argument("--no-guard", action="store_true")

    p = sub.add_parser("harness", help="measurement harnesses")
    hsub = p.add_subparsers(dest="harness_cmd", required=True)
    hp = hsub.add_parser("repeat", help="pose-sequence repeatability")
    hp.add_argument("--repeats", type=int, default=5)
    hp = hsub.add_parser("score", help="score logged tip poses against targets")
    hp.add_argument("--log", required=True, help="tip-pose log (JSON lines)")
    hp.add_argument("--targets", required=True, help="target centers, one x y z per line")

    return parser


_COMMANDS = {
    "model": cmd_model,
    "fk": cmd_fk,
    "ik": cmd_ik,
    "statics": cmd_statics,
    "workspace": cmd_workspace,
    "serve": cmd_serve,
    "replay": cmd_replay,
    "harness": cmd_harness,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (InvalidArgumentError, ModelFormatError, JointLimitError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DOMAIN_ERROR


if __name__ == "__main__":
    sys.exit(main())
