"""Deterministic kinematic vehicle model and the braking-trial runner.

Speed is tracked in mph (the unit of every cap and rubric in the driving
tasks); poses are meters/radians. Commands arrive as the normalized
steering/speed/brake triple produced by the overlay control law.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace

from teledrive.overlay import CommandTriple

logger = logging.getLogger(__name__)

MPH_TO_MPS = 0.44704
MAX_WHEEL_ANGLE_DEG = 601.5  # steering wheel hard stop, either direction


class VehicleMode(str, enum.Enum):
    TELEOP = "TELEOP"
    SAFETY_OVERRIDE = "SAFETY_OVERRIDE"
    PARKED = "PARKED"


@dataclass(frozen=True)
class VehicleParams:
    speed_cap: float = 4.0  # mph (4 teledriving, 5 simulated town)
    wheelbase: float = 2.98  # m
    steer_ratio: float = 16.0  # steering wheel deg per road wheel deg
    accel_tau: float = 1.0  # s, first-order speed response
    brake_stop_time: float = 2.0  # s for a 5 mph -> 0 full-brake stop
    length: float = 4.7  # m, footprint for collision checks
    width: float = 1.9  # m

    def __post_init__(self):
        for name in ("speed_cap", "wheelbase", "steer_ratio", "accel_tau",
                     "brake_stop_time", "length", "width"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def brake_decel(self) -> float:
        """mph per second under full braking (5 mph -> 0 in brake_stop_time)."""
        return 5.0 / self.brake_stop_time


@dataclass(frozen=True)
class VehicleState:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0  # rad, 0 along +x
    speed: float = 0.0  # mph, >= 0
    wheel_angle: float = 0.0  # steering wheel deg in [-601.5, 601.5]
    mode: VehicleMode = VehicleMode.TELEOP
    epb: bool = False

    def __post_init__(self):
        if self.speed < 0:
            raise ValueError("speed cannot be negative")
        if abs(self.wheel_angle) > MAX_WHEEL_ANGLE_DEG + 1e-9:
            raise ValueError("wheel angle beyond hard stop")


def steering_to_wheel_angle(steering: float) -> float:
    """Normalized [0, 1] steering command to wheel-angle degrees (0.5 -> 0)."""
    angle = (steering - 0.5) * 2.0 * MAX_WHEEL_ANGLE_DEG
    return min(MAX_WHEEL_ANGLE_DEG, max(-MAX_WHEEL_ANGLE_DEG, angle))


def wheel_angle_to_steering(angle: float) -> float:
    return angle / (2.0 * MAX_WHEEL_ANGLE_DEG) + 0.5


def _advance_pose(state: VehicleState, wheel_angle: float, speed_mph: float,
                  params: VehicleParams, dt: float) -> tuple[float, float, float]:
    v = speed_mph * MPH_TO_MPS
    delta = math.radians(wheel_angle / params.steer_ratio)
    x = state.x + v * math.cos(state.heading) * dt
    y = state.y + v * math.sin(state.heading) * dt
    heading = state.heading + v / params.wheelbase * math.tan(delta) * dt
    return x, y, heading


def step_dynamics(state: VehicleState, cmd: CommandTriple,
                  params: VehicleParams, dt: float) -> VehicleState:
    """Advance the vehicle by dt seconds.

    TELEOP follows the command triple: first-order speed response toward
    cmd.speed * speed_cap (or a fixed-rate braking ramp when cmd.brake),
    wheel angle mapped linearly from the steering command, pose advanced
    by the kinematic bicycle model. SAFETY_OVERRIDE ignores remote
    commands and brakes to a stop; PARKED holds everything.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if state.mode is VehicleMode.PARKED:
        return state
    if state.mode is VehicleMode.SAFETY_OVERRIDE:
        # Scripted safe agent: straighten slightly is unnecessary; just stop.
        speed = max(0.0, state.speed - params.brake_decel * dt)
        x, y, heading = _advance_pose(state, state.wheel_angle, speed, params, dt)
        return replace(state, x=x, y=y, heading=heading, speed=speed)

    finite = all(math.isfinite(v) for v in (cmd.steering, cmd.speed))
    if not finite:
        # Hold the previous actuation: current wheel angle, current speed.
        logger.warning("non-finite command; holding previous actuation")
        x, y, heading = _advance_pose(state, state.wheel_angle, state.speed,
                                      params, dt)
        return replace(state, x=x, y=y, heading=heading)

    if cmd.brake:
        speed = max(0.0, state.speed - params.brake_decel * dt)
    else:
        target = min(1.0, max(0.0, cmd.speed)) * params.speed_cap
        alpha = 1.0 - math.exp(-dt / params.accel_tau)
        speed = state.speed + alpha * (target - state.speed)
    speed = min(params.speed_cap, max(0.0, speed))
    wheel_angle = steering_to_wheel_angle(cmd.steering)
    x, y, heading = _advance_pose(state, wheel_angle, speed, params, dt)
    return replace(state, x=x, y=y, heading=heading, speed=speed,
                   wheel_angle=wheel_angle)


def footprint(state: VehicleState, params: VehicleParams) -> list[tuple[float, float]]:
    """Axis-aligned-in-body rectangle corners (counterclockwise), with the
    rear axle at the pose point and the body extending mostly forward."""
    rear_overhang = 0.7
    xf = params.length - rear_overhang
    xr = -rear_overhang
    half_w = params.width / 2.0
    cos_h, sin_h = math.cos(state.heading), math.sin(state.heading)
    corners = []
    for bx, by in ((xr, -half_w), (xf, -half_w), (xf, half_w), (xr, half_w)):
        corners.append((state.x + bx * cos_h - by * sin_h,
                        state.y + bx * sin_h + by * cos_h))
    return corners


# ---------------------------------------------------------------------------
# braking trial


@dataclass(frozen=True)
class BrakeTrialSpec:
    """The timing triple governs the outcome: the vehicle must be fully
    stopped by the time-to-collision moment, which means the brake must
    begin within reaction_budget = ttc - brake_stop seconds. The displayed
    obstacle distance is cosmetic."""
    ttc: float = 5.0  # s until collision with no braking
    brake_stop: float = 2.0  # s of constant braking from trial speed to 0
    speed: float = 5.0  # mph, constant until the brake is applied
    displayed_distance: float = 20.0  # m, what the operator sees

    @property
    def reaction_budget(self) -> float:
        return self.ttc - self.brake_stop


@dataclass(frozen=True)
class BrakeTrialResult:
    collision: bool
    event_time: float  # collision time, or the time the vehicle stopped
    brake_onset: float | None


def spawn_brake_trial(speed_mph: float = 5.0) -> BrakeTrialSpec:
    """Trial geometry for one GO phase of the braking task."""
    return BrakeTrialSpec(speed=speed_mph)


def run_brake_trial(spec: BrakeTrialSpec, brake_onset: float | None,
                    dt: float = 0.02) -> BrakeTrialResult:
    """Simulate one GO phase on a fixed tick grid.

    The vehicle holds trial speed until the brake onset, then decelerates
    linearly so a full stop takes spec.brake_stop seconds; an onset inside
    a tick brakes for exactly the covered fraction, so the outcome is
    independent of the grid. A collision is recorded at the tick reaching
    spec.ttc if the vehicle is still moving.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    decel = spec.speed / spec.brake_stop  # mph per s
    speed = spec.speed
    stopped_at = None
    k = 0
    while True:
        k += 1
        t0, t1 = (k - 1) * dt, k * dt
        if brake_onset is not None and t1 > brake_onset:
            braking_time = t1 - max(t0, brake_onset)
            speed = max(0.0, speed - decel * braking_time)
            if speed <= 1e-9 and stopped_at is None:
                speed = 0.0
                stopped_at = t1
        if t1 >= spec.ttc - 1e-9:
            if speed > 1e-9:
                return BrakeTrialResult(True, t1, brake_onset)
            return BrakeTrialResult(False, stopped_at if stopped_at is not None else t1,
                                    brake_onset)
