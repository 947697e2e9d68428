"""Command-line surface.

Subcommands: simulate (deterministic session), rt-task (reaction runs),
score (records or evaluator sheets), stats (group comparisons), replay
(record verification), serve-vehicle / pilot (live teleoperation over real
sockets), and ui-gateway (browser client backend). Exit codes: 0 ok,
1 configuration error, 2 run aborted or verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import time
from pathlib import Path

from teledrive import scoring, stats
from teledrive.link import SafetyMode, SafetyState, SupervisorInputs, safety_step
from teledrive.overlay import CommandTriple
from teledrive.session import (
    ConfigError,
    PilotConfig,
    ReplayMismatch,
    RunRecord,
    SessionConfig,
    config_from_dict,
    data_dir,
    load_config,
    replay,
    resolve_world,
    run_session,
)
from teledrive.vehicle import VehicleMode, VehicleState, step_dynamics
from teledrive.worlds import BUILTIN_WORLDS


def _session_config_from_args(args) -> SessionConfig:
    if args.config:
        return load_config(args.config)
    pilot = PilotConfig(kind=args.pilot, snr=args.snr)
    return SessionConfig(task=args.task, world=args.world, seed=args.seed,
                         pilot=pilot)


def _save_record(record: RunRecord, out: str | None) -> Path:
    directory = data_dir()
    directory.mkdir(parents=True, exist_ok=True)
    if out:
        path = Path(out)
    else:
        task = record.config.get("task", "run")
        seed = record.config.get("seed", 0)
        path = directory / f"{task}_seed{seed}.jsonl"
    record.save(path)
    return path


def cmd_simulate(args) -> int:
    cfg = _session_config_from_args(args)
    record = run_session(cfg)
    path = _save_record(record, args.out)
    print(json.dumps(record.report, indent=2))
    print(f"record: {path}", file=sys.stderr)
    return 2 if record.report.get("outcome") == "aborted" else 0


def cmd_rt_task(args) -> int:
    pilot = PilotConfig(latency_mean=args.latency_mean, latency_sd=args.latency_sd,
                        fp_rate=args.fp_rate, fn_rate=args.fn_rate)
    cfg = SessionConfig(task=args.task, seed=args.seed, pilot=pilot)
    record = run_session(cfg)
    path = _save_record(record, args.out)
    print(json.dumps(record.report, indent=2))
    print(f"record: {path}", file=sys.stderr)
    return 0


def cmd_score(args) -> int:
    if args.record:
        record = RunRecord.load(args.record)
        print(json.dumps(record.report, indent=2))
        return 0
    sheets = [scoring.load_sheet(p) for p in args.sheets]
    report = scoring.aggregate_evaluators(sheets, args.mode)
    print(report.render())
    if args.out:
        scoring.save_report(report, args.out)
    return 0


def cmd_stats(args) -> int:
    doc = json.loads(Path(args.groups).read_text())
    if not isinstance(doc, dict) or len(doc) < 2:
        raise ConfigError("groups file must map at least two labels to value lists")
    groups = [stats.SampleGroup(label, tuple(values)) for label, values in doc.items()]
    table = stats.compare_groups(groups, alpha=args.alpha)
    print(table.render())
    if len(groups) == 2:
        result = stats.welch_ttest(groups[0], groups[1], tail=args.tail)
        print(f"\nWelch t = {result.statistic:.6g}, df = {result.df:.6g}, "
              f"p ({result.tail}) = {result.p_value:.6g}")
    else:
        result = stats.oneway_anova(groups)
        df1, df2 = result.df
        print(f"\nANOVA F = {result.statistic:.6g}, df = ({df1:.0f}, {df2:.0f}), "
              f"p = {result.p_value:.6g}")
    return 0


def cmd_replay(args) -> int:
    record = RunRecord.load(args.record)
    try:
        report = replay(record)
    except ReplayMismatch as exc:
        print(f"replay FAILED: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(report, indent=2))
    print("replay ok: report reproduced exactly", file=sys.stderr)
    return 0


def cmd_serve_vehicle(args) -> int:
    """Run the vehicle side live: real sockets, local dynamics and world."""
    from teledrive.netlink import VehicleEndpoint

    world = resolve_world(args.world)
    cfg = config_from_dict({"task": args.task, "world": args.world})
    start = world.route.waypoints[0]
    nxt = world.route.waypoints[1]
    heading = math.atan2(nxt[1] - start[1], nxt[0] - start[0])
    vehicle = VehicleState(x=float(start[0]), y=float(start[1]), heading=heading)
    supervisor = SafetyState(lag_threshold=args.lag_threshold)
    server = VehicleEndpoint(host=args.host, tcp_port=args.tcp_port,
                             udp_port=args.udp_port)
    server.start()
    print(f"vehicle up: tcp={server.tcp_port} udp={server.udp_port} "
          f"world={world.name}", flush=True)
    dt = 1.0 / args.tick_rate
    last_frame = None
    frames_received = 0
    deadline = time.monotonic() + args.duration if args.duration else None
    try:
        while deadline is None or time.monotonic() < deadline:
            tick_start = time.monotonic()
            for frame in server.poll_control():
                frames_received += 1
                if last_frame is None or frame.seq >= last_frame.seq:
                    last_frame = frame
            now_ms = time.monotonic() * 1000.0
            lag = now_ms - last_frame.t_send if last_frame else 0.0
            supervisor = safety_step(supervisor, SupervisorInputs(
                lag=lag, activation_msg=True))
            if supervisor.mode is SafetyMode.TELEOP and last_frame is not None:
                cmd = CommandTriple(last_frame.steering, last_frame.speed,
                                    last_frame.brake)
                mode = VehicleMode.TELEOP
            else:
                cmd = CommandTriple(0.5, 0.0, False)
                mode = (VehicleMode.SAFETY_OVERRIDE
                        if supervisor.mode is SafetyMode.SAFETY_OVERRIDE
                        else VehicleMode.TELEOP)
            if vehicle.mode is not mode:
                vehicle = dataclasses.replace(vehicle, mode=mode)
            vehicle = step_dynamics(vehicle, cmd, cfg.vehicle, dt)
            server.send_state(vehicle.speed, vehicle.wheel_angle,
                              vehicle.mode.value, vehicle.epb)
            server.send_viewport(vehicle.x, vehicle.y, vehicle.heading,
                                 vehicle.speed)
            time.sleep(max(0.0, dt - (time.monotonic() - tick_start)))
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    print(json.dumps({"frames_received": frames_received,
                      "final_pose": [vehicle.x, vehicle.y],
                      "final_speed": vehicle.speed}))
    return 0


def cmd_pilot(args) -> int:
    """Run the operator side live against a serve-vehicle process."""
    from teledrive.netlink import OperatorEndpoint
    from teledrive.overlay import ControlState, OverlayGeometry, RampConfig
    from teledrive.overlay import tick as overlay_tick, to_vehicle_command
    from teledrive.pilots import PilotObservation, ScriptedPilot

    world = resolve_world(args.world)
    cfg = config_from_dict({"task": args.task, "world": args.world})
    client = OperatorEndpoint(args.host, args.tcp_port, args.udp_port)
    geom = OverlayGeometry()
    ramp = RampConfig()
    control = ControlState(cold_steer_enabled=True)
    pilot = ScriptedPilot(world, cfg.vehicle, geom)
    dt_ms = 1000.0 / args.tick_rate
    deadline = time.monotonic() + args.duration if args.duration else None
    probe_countdown = 0
    try:
        while deadline is None or time.monotonic() < deadline:
            tick_start = time.monotonic()
            if probe_countdown <= 0:
                client.send_clock_probe()
                probe_countdown = 10
            probe_countdown -= 1
            now_ms = time.monotonic() * 1000.0
            v = client.last_viewport
            pose = (v.x, v.y, v.heading) if v else None
            obs = PilotObservation(
                t=now_ms, pose=pose,
                pose_age_ms=(now_ms - (v.t_send - client.offset)) if v else math.inf,
                speed_mph=client.last_state.speed if client.last_state else 0.0,
                control=control,
                mode=client.last_state.mode if client.last_state else "INACTIVE")
            cursor = pilot.sample(obs, dt_ms)
            control = overlay_tick(control, cursor, geom, ramp, dt_ms)
            cmd = to_vehicle_command(control)
            client.send_control(cmd.steering, cmd.speed, cmd.brake,
                                latency_est=obs.pose_age_ms if v else 0.0)
            time.sleep(max(0.0, dt_ms / 1000.0 - (time.monotonic() - tick_start)))
    except KeyboardInterrupt:
        pass
    finally:
        client.stop()
    return 0


def cmd_ui_gateway(args) -> int:
    import uvicorn

    from teledrive.gateway import build_app

    cfg = _session_config_from_args(args) if args.config else SessionConfig(
        task=args.task, world=args.world, seed=args.seed,
        pilot=PilotConfig(kind="ui"))
    app = build_app(cfg)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teledrive",
        description="Cursor-and-click vehicle teleoperation testbench")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a deterministic session")
    sim.add_argument("--config", help="session config JSON (overrides flags)")
    sim.add_argument("--task", default="obstacle_teledrive",
                     choices=["mcity_teledrive", "town_drive", "obstacle_teledrive"])
    sim.add_argument("--world", default="obstacle_ccw_nols",
                     help=f"builtin ({', '.join(BUILTIN_WORLDS)}) or world file")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--pilot", default="scripted", choices=["scripted", "decoder"])
    sim.add_argument("--snr", type=float, default=10.0)
    sim.add_argument("--out", help="record output path")
    sim.set_defaults(func=cmd_simulate)

    rt = sub.add_parser("rt-task", help="run a reaction-time task")
    rt.add_argument("--task", default="simple_rt",
                    choices=["simple_rt", "braking_rt"])
    rt.add_argument("--seed", type=int, default=0)
    rt.add_argument("--latency-mean", type=float, default=300.0)
    rt.add_argument("--latency-sd", type=float, default=0.0)
    rt.add_argument("--fp-rate", type=float, default=0.0)
    rt.add_argument("--fn-rate", type=float, default=0.0)
    rt.add_argument("--out")
    rt.set_defaults(func=cmd_rt_task)

    sc = sub.add_parser("score", help="score a run record or evaluator sheets")
    sc.add_argument("--record", help="run record (JSONL)")
    sc.add_argument("--sheets", nargs="+", default=[],
                    help="evaluator sheet JSON files")
    sc.add_argument("--mode", default="obstacle",
                    choices=list(scoring.MODES))
    sc.add_argument("--out", help="write the aggregated report JSON here")
    sc.set_defaults(func=cmd_score)

    stp = sub.add_parser("stats", help="compare metric groups")
    stp.add_argument("--groups", required=True,
                     help="JSON file: {label: [values], ...}")
    stp.add_argument("--alpha", type=float, default=0.05)
    stp.add_argument("--tail", default="two", choices=["left", "right", "two"])
    stp.set_defaults(func=cmd_stats)

    rp = sub.add_parser("replay", help="verify a run record reproduces itself")
    rp.add_argument("--record", required=True)
    rp.set_defaults(func=cmd_replay)

    sv = sub.add_parser("serve-vehicle", help="run the vehicle side on sockets")
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--tcp-port", type=int, default=47700)
    sv.add_argument("--udp-port", type=int, default=47701)
    sv.add_argument("--task", default="obstacle_teledrive")
    sv.add_argument("--world", default="obstacle_ccw_nols")
    sv.add_argument("--tick-rate", type=float, default=50.0)
    sv.add_argument("--lag-threshold", type=float, default=1500.0)
    sv.add_argument("--duration", type=float, default=0.0,
                    help="seconds to run (0 = until interrupted)")
    sv.set_defaults(func=cmd_serve_vehicle)

    pl = sub.add_parser("pilot", help="run the operator side on sockets")
    pl.add_argument("--host", default="127.0.0.1")
    pl.add_argument("--tcp-port", type=int, default=47700)
    pl.add_argument("--udp-port", type=int, default=47701)
    pl.add_argument("--task", default="obstacle_teledrive")
    pl.add_argument("--world", default="obstacle_ccw_nols")
    pl.add_argument("--tick-rate", type=float, default=50.0)
    pl.add_argument("--duration", type=float, default=0.0)
    pl.set_defaults(func=cmd_pilot)

    ui = sub.add_parser("ui-gateway", help="serve the browser operator client")
    ui.add_argument("--host", default="127.0.0.1")
    ui.add_argument("--port", type=int, default=8000)
    ui.add_argument("--config")
    ui.add_argument("--task", default="obstacle_teledrive")
    ui.add_argument("--world", default="obstacle_ccw_nols")
    ui.add_argument("--seed", type=int, default=0)
    ui.set_defaults(func=cmd_ui_gateway)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
