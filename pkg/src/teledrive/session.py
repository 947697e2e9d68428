"""Session orchestration: configuration, the deterministic tick loop,
run records, and replay.

A driving session wires pilot -> overlay control law -> link -> vehicle ->
detectors on a fixed tick grid with simulated time, so a (config, seed)
pair always produces a byte-identical run record. Reaction-time sessions
run their task harness through the same record/replay machinery.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from teledrive import reaction, scoring
from teledrive.decoder import train_synthetic_decoder
from teledrive.link import (
    ClockProbe,
    ClockReply,
    ClockRequest,
    ControlFrame,
    DatagramChannel,
    LinkConfig,
    OffsetEstimator,
    SafetyMode,
    SafetyState,
    StateFrame,
    SupervisorInputs,
    ViewportFrame,
    commands_enabled,
    lag_monitor,
    link_channels,
    safety_step,
)
from teledrive.overlay import (
    CommandTriple,
    ControlState,
    CursorSample,
    OverlayGeometry,
    RampConfig,
    tick as overlay_tick,
    to_vehicle_command,
)
from teledrive.pilots import DecoderPilot, PilotObservation, ScriptedPilot
from teledrive.vehicle import VehicleMode, VehicleParams, VehicleState, step_dynamics
from teledrive.world import InfractionDetector, RouteTracker, WorldModel, load_world
from teledrive.worlds import BUILTIN_WORLDS, build_world

DRIVING_TASKS = {
    "mcity_teledrive": ("mcity", 4.0, True),
    "town_drive": ("town", 5.0, False),
    "obstacle_teledrive": ("obstacle", 4.0, True),
}
RT_TASKS = ("simple_rt", "braking_rt")
DATA_DIR_ENV = "TELEDRIVE_DATA_DIR"


class ConfigError(ValueError):
    """Bad session configuration (CLI exit code 1)."""


@dataclass(frozen=True)
class PilotConfig:
    kind: str = "scripted"  # scripted | decoder | ui
    # decoder pilot
    snr: float = 10.0
    train_seed: int = 7
    channels: int = 16
    sample_rate: float = 3000.0
    bin_rate: float = 30.0
    train_bins: int = 900
    # scripted reaction-time operator
    latency_mean: float = 300.0
    latency_sd: float = 0.0
    fp_rate: float = 0.0
    fn_rate: float = 0.0

    def __post_init__(self):
        if self.kind not in ("scripted", "decoder", "ui"):
            raise ConfigError(f"unknown pilot kind {self.kind!r}")


@dataclass(frozen=True)
class SessionConfig:
    task: str
    world: str = "obstacle_ccw_nols"
    seed: int = 0
    tick_rate: float = 50.0
    timeout_s: float = 300.0
    ramp: RampConfig = field(default_factory=RampConfig)
    vehicle: VehicleParams | None = None  # defaulted per task
    link: LinkConfig = field(default_factory=LinkConfig)
    lag_threshold: float = 1500.0
    clock_skew_ms: float = 0.0  # vehicle clock minus operator clock
    clock_probe_every: int = 10  # ticks
    pilot: PilotConfig = field(default_factory=PilotConfig)
    activation_at_ms: float = 0.0
    epb_at_ms: float | None = None
    operator_brake_ms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.task not in DRIVING_TASKS and self.task not in RT_TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.tick_rate <= 0:
            raise ConfigError("tick_rate must be positive")
        if self.vehicle is None:
            cap = DRIVING_TASKS.get(self.task, (None, 5.0, False))[1]
            object.__setattr__(self, "vehicle", VehicleParams(speed_cap=cap))

    @property
    def score_mode(self) -> str:
        return DRIVING_TASKS[self.task][0]

    @property
    def cold_steer(self) -> bool:
        return DRIVING_TASKS[self.task][2]


def config_to_dict(cfg: SessionConfig) -> dict:
    doc = dataclasses.asdict(cfg)
    doc["operator_brake_ms"] = [list(w) for w in cfg.operator_brake_ms]
    return doc


def config_from_dict(doc: dict) -> SessionConfig:
    doc = dict(doc)
    try:
        if "ramp" in doc:
            doc["ramp"] = RampConfig(**doc["ramp"])
        if doc.get("vehicle") is not None:
            doc["vehicle"] = VehicleParams(**doc["vehicle"])
        if "link" in doc:
            doc["link"] = LinkConfig(**doc["link"])
        if "pilot" in doc:
            doc["pilot"] = PilotConfig(**doc["pilot"])
        if "operator_brake_ms" in doc:
            doc["operator_brake_ms"] = tuple(tuple(w) for w in doc["operator_brake_ms"])
        return SessionConfig(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid session config: {exc}") from exc


def load_config(path: str | Path) -> SessionConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = config_from_dict(doc)
    # referenced world files must exist up front
    if cfg.task in DRIVING_TASKS and cfg.world not in BUILTIN_WORLDS:
        if not Path(cfg.world).exists():
            raise ConfigError(f"world file not found: {cfg.world}")
    return cfg


def resolve_world(name_or_path: str) -> WorldModel:
    if name_or_path in BUILTIN_WORLDS or name_or_path == "mcity":
        return build_world(name_or_path)
    return load_world(name_or_path)


def data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "runs"))


# ---------------------------------------------------------------------------
# run records


@dataclass
class RunRecord:
    config: dict
    events: list[dict]
    report: dict

    def to_bytes(self) -> bytes:
        lines = [json.dumps({"type": "config", "config": self.config},
                            separators=(",", ":"))]
        lines.extend(json.dumps(e, separators=(",", ":")) for e in self.events)
        lines.append(json.dumps({"type": "report", **self.report},
                                separators=(",", ":")))
        return ("\n".join(lines) + "\n").encode()

    def save(self, path: str | Path):
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "RunRecord":
        return cls.from_bytes(Path(path).read_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "RunRecord":
        lines = [json.loads(line) for line in data.decode().splitlines() if line]
        if not lines or lines[0].get("type") != "config":
            raise ValueError("run record must start with a config line")
        config = lines[0]["config"]
        report = {}
        events = lines[1:]
        if events and events[-1].get("type") == "report":
            report = {k: v for k, v in events[-1].items() if k != "type"}
            events = events[:-1]
        return cls(config, events, report)


class ReplayMismatch(AssertionError):
    pass


# ---------------------------------------------------------------------------
# the driving session


class _PlaybackPilot:
    """Replays logged cursor samples; stands in for the original pilot so a
    replay exercises every pure module downstream of the operator's input."""

    def __init__(self, cursor_events: list[dict]):
        self._samples = [CursorSample(e["x"], e["y"], e["click"], e["t"])
                         for e in cursor_events]
        self._i = 0

    def sample(self, obs: PilotObservation, dt_ms: float) -> CursorSample:
        if self._i >= len(self._samples):
            raise ReplayMismatch("log ended before the run did (truncated record)")
        s = self._samples[self._i]
        self._i += 1
        return s


class _OperatorSide:
    """Overlay control state, pilot, and the operator's view of the link."""

    def __init__(self, cfg: SessionConfig, world: WorldModel, log: list[dict],
                 pilot_override=None):
        self.cfg = cfg
        self.log = log
        self.geom = OverlayGeometry()
        self.control = ControlState(cold_steer_enabled=cfg.cold_steer)
        self.estimator = OffsetEstimator()
        self.last_state: StateFrame | None = None
        self.last_viewport: ViewportFrame | None = None
        self.viewport_rx_t: float = 0.0
        self.seq = 0
        if pilot_override is not None:
            self.pilot = pilot_override
        elif cfg.pilot.kind == "scripted":
            self.pilot = ScriptedPilot(world, cfg.vehicle, self.geom)
        elif cfg.pilot.kind == "decoder":
            rig = train_synthetic_decoder(
                seed=cfg.pilot.train_seed, snr=cfg.pilot.snr,
                n_bins=cfg.pilot.train_bins, channels=cfg.pilot.channels,
                sample_rate=cfg.pilot.sample_rate, bin_rate=cfg.pilot.bin_rate)
            self.pilot = DecoderPilot(world, cfg.vehicle, rig,
                                      noise_seed=cfg.seed + 1, geom=self.geom)
        else:
            raise ConfigError("ui pilot runs through the gateway, not run_session")

    def observe(self, t: float) -> PilotObservation:
        pose = None
        age = math.inf
        if self.last_viewport is not None:
            v = self.last_viewport
            pose = (v.x, v.y, v.heading)
            # convert the vehicle-clock stamp onto the operator clock
            age = lag_monitor(t, v.t_send, -self.estimator.offset)
        speed = self.last_state.speed if self.last_state else 0.0
        mode = self.last_state.mode if self.last_state else "INACTIVE"
        return PilotObservation(t=t, pose=pose, pose_age_ms=age,
                                speed_mph=speed, control=self.control, mode=mode)

    def step(self, t: float, dt_ms: float) -> ControlFrame:
        obs = self.observe(t)
        cursor = self.pilot.sample(obs, dt_ms)
        self.control = overlay_tick(self.control, cursor, self.geom,
                                    self.cfg.ramp, dt_ms)
        cmd = to_vehicle_command(self.control)
        frame = ControlFrame(self.seq, t, cmd.steering, cmd.speed, cmd.brake,
                             latency_est=obs.pose_age_ms if self.last_viewport else 0.0)
        self.seq = (self.seq + 1) % 2 ** 32
        self.log.append({"type": "cursor", "t": t, "x": cursor.x, "y": cursor.y,
                         "click": cursor.click})
        return frame


class _VehicleSide:
    """Vehicle state, supervisor, and infraction bookkeeping."""

    def __init__(self, cfg: SessionConfig, world: WorldModel, log: list[dict]):
        self.cfg = cfg
        self.world = world
        self.log = log
        start = world.route.waypoints[0]
        nxt = world.route.waypoints[1]
        heading = math.atan2(nxt[1] - start[1], nxt[0] - start[0])
        self.state = VehicleState(x=float(start[0]), y=float(start[1]),
                                  heading=heading)
        self.supervisor = SafetyState(lag_threshold=cfg.lag_threshold)
        self.detector = InfractionDetector(world, cfg.vehicle)
        self.tracker = RouteTracker(world.route)
        self.last_control: ControlFrame | None = None
        self.infractions: list = []
        self.seq = 0

    def step(self, tv: float, dt_ms: float, frames: list[ControlFrame],
             epb: bool, operator_brake: bool, activation: bool):
        for frame in frames:
            if self.last_control is None or frame.seq >= self.last_control.seq:
                self.last_control = frame
        if self.last_control is not None:
            lag = lag_monitor(tv, self.last_control.t_send, self.cfg.clock_skew_ms)
        else:
            lag = tv  # nothing received yet
        prev_mode = self.supervisor.mode
        self.supervisor = safety_step(self.supervisor, SupervisorInputs(
            lag=lag, epb=epb, activation_msg=activation,
            operator_brake=operator_brake))
        if self.supervisor.mode is not prev_mode:
            self.log.append({"type": "mode", "t": tv,
                             "mode": self.supervisor.mode.value})

        if self.supervisor.mode is SafetyMode.PARKED:
            vmode = VehicleMode.PARKED
        elif self.supervisor.mode is SafetyMode.SAFETY_OVERRIDE:
            vmode = VehicleMode.SAFETY_OVERRIDE
        else:
            vmode = VehicleMode.TELEOP
        if self.state.mode is not vmode:
            self.state = dataclasses.replace(
                self.state, mode=vmode, epb=self.supervisor.mode is SafetyMode.PARKED)

        if commands_enabled(self.supervisor) and self.last_control is not None:
            f = self.last_control
            cmd = CommandTriple(f.steering, f.speed, f.brake)
        else:
            # no remote authority: hold the wheel, roll to a stop
            cmd = CommandTriple(0.5, 0.0, False)

        prev = self.state
        self.state = step_dynamics(prev, cmd, self.cfg.vehicle, dt_ms / 1000.0)
        events = self.detector.step(prev, self.state, tv, dt_ms)
        for ev in events:
            self.infractions.append(ev)
            self.log.append({"type": "infraction", "t": ev.t, "kind": ev.kind,
                             "weight": ev.weight})
        self.tracker.update(self.state, dt_ms / 1000.0)
        self.log.append({
            "type": "vehicle", "t": tv, "x": self.state.x, "y": self.state.y,
            "heading": self.state.heading, "speed": self.state.speed,
            "wheel_angle": self.state.wheel_angle, "mode": self.state.mode.value,
        })

    def frames(self, tv: float) -> tuple[StateFrame, ViewportFrame]:
        s = self.state
        state = StateFrame(self.seq, tv, s.speed, s.wheel_angle,
                           s.mode.value, s.epb)
        viewport = ViewportFrame(self.seq, tv, s.x, s.y, s.heading, s.speed)
        self.seq = (self.seq + 1) % 2 ** 32
        return state, viewport


class DrivingSession:
    """Incremental driving session: one tick per step() call.

    run_session() drives it to completion; the UI gateway paces it against
    wall time instead.
    """

    def __init__(self, cfg: SessionConfig, pilot_override=None):
        self.cfg = cfg
        self.world = resolve_world(cfg.world)
        self.log: list[dict] = []
        self.operator = _OperatorSide(cfg, self.world, self.log,
                                      pilot_override=pilot_override)
        self.vehicle = _VehicleSide(cfg, self.world, self.log)
        self._control_ch, self._state_ch, self._clock_ch = link_channels(cfg.link)
        self._viewport_ch = DatagramChannel(
            cfg.link.state_delay_ms, cfg.link.state_jitter_ms, cfg.link.state_loss,
            rng=np.random.default_rng(cfg.link.seed + 1))
        self._reply_ch = DatagramChannel(
            cfg.link.clock_delay_ms, cfg.link.clock_jitter_ms, cfg.link.clock_loss,
            rng=np.random.default_rng(cfg.link.seed + 2))
        self.dt_ms = 1000.0 / cfg.tick_rate
        self.max_ticks = max(1, int(cfg.timeout_s * cfg.tick_rate))
        self._probe_pending: dict[int, float] = {}
        self._probe_seq = 0
        self.tick = 0
        self.outcome: str | None = None
        self.activated = cfg.activation_at_ms <= 0.0
        s0 = self.vehicle.state
        self.log.append({"type": "vehicle", "t": cfg.clock_skew_ms, "x": s0.x,
                         "y": s0.y, "heading": s0.heading, "speed": s0.speed,
                         "wheel_angle": s0.wheel_angle, "mode": s0.mode.value})

    @property
    def running(self) -> bool:
        return self.outcome is None

    def activate(self):
        """Out-of-band activation (the UI's 'publish activation' button)."""
        self.activated = True

    def step(self) -> bool:
        """Advance one tick; returns False once the session has ended."""
        if not self.running:
            return False
        cfg = self.cfg
        self.tick += 1
        k = self.tick
        t = k * self.dt_ms  # operator clock
        tv = t + cfg.clock_skew_ms  # vehicle clock

        # operator: ingest link arrivals
        operator, vehicle = self.operator, self.vehicle
        for frame in self._state_ch.poll(t):
            if operator.last_state is None or frame.seq >= operator.last_state.seq:
                operator.last_state = frame
        for frame in self._viewport_ch.poll(t):
            if (operator.last_viewport is None
                    or frame.seq >= operator.last_viewport.seq):
                operator.last_viewport = frame
                operator.viewport_rx_t = t
        for reply in self._reply_ch.poll(t):
            t0 = self._probe_pending.pop(reply.seq, None)
            if t0 is not None:
                operator.estimator.add_probe(ClockProbe(t0, reply.t1, reply.t2, t))

        if cfg.clock_probe_every > 0 and k % cfg.clock_probe_every == 1:
            self._probe_pending[self._probe_seq] = t
            self._clock_ch.send(t, ClockRequest(self._probe_seq, t))
            self._probe_seq += 1

        # operator: decide and transmit
        frame = operator.step(t, self.dt_ms)
        self._control_ch.send(t, frame)
        self.log.append({"type": "control_tx", "t": t, "seq": frame.seq,
                         "steering": frame.steering, "speed": frame.speed,
                         "brake": frame.brake})

        # vehicle: clock replies for probes that arrived
        for req in self._clock_ch.poll(t):
            self._reply_ch.send(t, ClockReply(req.seq, req.t0, tv, tv))

        # vehicle: supervisor + dynamics + detection
        epb = cfg.epb_at_ms is not None and tv >= cfg.epb_at_ms
        op_brake = any(a <= tv <= b for a, b in cfg.operator_brake_ms)
        activation = self.activated or tv >= cfg.activation_at_ms
        vehicle.step(tv, self.dt_ms, self._control_ch.poll(t), epb, op_brake,
                     activation)

        state_f, viewport_f = vehicle.frames(tv)
        self._state_ch.send(t, state_f)
        self._viewport_ch.send(t, viewport_f)

        if vehicle.tracker.completed:
            self.outcome = "completed"
        elif vehicle.tracker.aborted:
            self.outcome = "aborted"
        elif vehicle.supervisor.mode is SafetyMode.PARKED:
            self.outcome = "parked"
        elif k >= self.max_ticks:
            self.outcome = "timeout"
        return self.running

    def finish(self) -> RunRecord:
        counts = scoring.counts_from_events(
            self.vehicle.infractions, completion=self.vehicle.tracker.progress,
            aborted=self.vehicle.tracker.aborted)
        score = scoring.driving_score(counts, self.cfg.score_mode)
        report = {
            "task": self.cfg.task, "mode": self.cfg.score_mode,
            "outcome": self.outcome or "stopped",
            "C": counts.completion, "N_c": counts.collisions,
            "N_l": counts.lane_deviations, "N_s": counts.signs_run,
            "score": score, "duration_ms": self.tick * self.dt_ms,
        }
        return RunRecord(config_to_dict(self.cfg), self.log, report)


def run_session(cfg: SessionConfig, _pilot_override=None) -> RunRecord:
    """Execute one configured session to completion and return its record."""
    if cfg.task in RT_TASKS:
        return _run_rt_session(cfg)
    session = DrivingSession(cfg, pilot_override=_pilot_override)
    while session.step():
        pass
    return session.finish()


# ---------------------------------------------------------------------------
# reaction-time sessions


def _run_rt_session(cfg: SessionConfig) -> RunRecord:
    operator = reaction.ScriptedOperator(
        latency_mean=cfg.pilot.latency_mean, latency_sd=cfg.pilot.latency_sd,
        fp_rate=cfg.pilot.fp_rate, fn_rate=cfg.pilot.fn_rate, seed=cfg.seed)
    if cfg.task == "simple_rt":
        specs = reaction.gen_simple_run(cfg.seed)
        clicks = operator.clicks_for_simple_run(specs)
        events = reaction.build_simple_run_log(specs, clicks)
        outcomes = [reaction.label_trial(s, c) for s, c in zip(specs, clicks)]
        collisions = None
    else:
        specs = reaction.gen_braking_run(cfg.seed)
        clicks = operator.clicks_for_braking_run(specs)
        events, outcomes, collisions = _braking_log(specs, clicks)
    metrics = reaction.run_metrics(outcomes)
    report = {
        "task": cfg.task,
        "trials": len(specs),
        "accuracy": metrics.accuracy,
        "sensitivity": metrics.sensitivity,
        "specificity": metrics.specificity,
        "mean_rt": metrics.mean_rt,
        "sd_rt": metrics.sd_rt,
        "valid_rt_count": len(metrics.valid_rts),
    }
    if collisions is not None:
        report["collisions"] = collisions
    return RunRecord(config_to_dict(cfg), events, report)


def _braking_log(specs, clicks_per_trial):
    events = []
    outcomes = []
    collisions = 0
    t0 = 0.0
    for idx, (spec, clicks) in enumerate(zip(specs, clicks_per_trial)):
        events.append({"type": "trial_start", "t": t0, "index": idx,
                       "nogo_ms": spec.nogo_duration})
        events.append({"type": "obstacle_spawn", "t": t0 + spec.go_onset,
                       "rel": spec.go_onset, "index": idx})
        for c in clicks:
            events.append({"type": "click", "t": t0 + c, "rel": c, "index": idx})
        nogo, go, collided = reaction.label_braking_trial(spec, clicks)
        outcomes.extend([nogo, go])
        if collided:
            collisions += 1
            events.append({"type": "collision",
                           "t": t0 + spec.go_onset + spec.trial.ttc * 1000.0,
                           "index": idx})
        t0 += spec.go_onset + spec.go_duration + 1000.0
    return events, outcomes, collisions


# ---------------------------------------------------------------------------
# replay


def replay(record: RunRecord) -> dict:
    """Re-run the pure pipeline from the logged operator inputs and verify
    the record reproduces itself exactly.

    Driving records: the logged cursor samples are played back through the
    overlay, link, supervisor, vehicle, and detectors; the regenerated
    event stream and report must match the stored ones bit-for-bit, so any
    tampered or missing event raises ReplayMismatch. Reaction records:
    outcomes and metrics are recomputed from the logged stimuli/clicks.
    Returns the verified report.
    """
    task = record.config.get("task")
    if not record.report:
        raise ReplayMismatch("record has no report (truncated log?)")
    if task in RT_TASKS:
        recomputed = _replay_rt(record)
        stored_subset = {k: record.report.get(k) for k in recomputed}
        if recomputed != stored_subset:
            diffs = {k: (stored_subset[k], recomputed[k]) for k in recomputed
                     if stored_subset[k] != recomputed[k]}
            raise ReplayMismatch(f"replay diverges from stored report: {diffs}")
        return record.report
    return _replay_driving(record)


def _replay_driving(record: RunRecord) -> dict:
    cfg = config_from_dict(record.config)
    cursor_events = [e for e in record.events if e["type"] == "cursor"]
    regenerated = run_session(cfg, _pilot_override=_PlaybackPilot(cursor_events))
    if regenerated.events != record.events:
        for i, (a, b) in enumerate(zip(record.events, regenerated.events)):
            if a != b:
                raise ReplayMismatch(
                    f"event {i} diverges under replay: stored={a} replayed={b}")
        raise ReplayMismatch(
            f"event count differs: stored {len(record.events)}, "
            f"replayed {len(regenerated.events)}")
    if regenerated.report != record.report:
        raise ReplayMismatch(
            f"report diverges: stored={record.report} replayed={regenerated.report}")
    return record.report


def _replay_rt(record: RunRecord) -> dict:
    task = record.config.get("task")
    if task == "simple_rt":
        outcomes = reaction.outcomes_from_simple_log(record.events)
    else:
        outcomes = _braking_outcomes_from_log(record.events)
    metrics = reaction.run_metrics(outcomes)
    return {"accuracy": metrics.accuracy, "sensitivity": metrics.sensitivity,
            "specificity": metrics.specificity, "mean_rt": metrics.mean_rt,
            "valid_rt_count": len(metrics.valid_rts)}


def _braking_outcomes_from_log(events) -> list:
    trials: dict[int, dict] = {}
    for ev in events:
        idx = ev.get("index")
        if idx is None:
            continue
        slot = trials.setdefault(idx, {"clicks": []})
        if ev["type"] == "trial_start":
            slot["nogo_ms"] = ev["nogo_ms"]
        elif ev["type"] == "click":
            slot["clicks"].append(ev["rel"])
    outcomes = []
    for idx in sorted(trials):
        slot = trials[idx]
        spec = reaction.BrakingTrialSpec(nogo_duration=slot["nogo_ms"])
        nogo, go, _ = reaction.label_braking_trial(spec, slot["clicks"])
        outcomes.extend([nogo, go])
    return outcomes
