"""Overlay control law: cursor position and clicks to steering/speed/brake.

The operator sees a blue circle (horizontal = steering) and a red circle
(vertical = speed) over the viewport. Dwelling in a red hot zone ramps the
corresponding command exponentially toward that zone's limit; the central
gray cold zone nudges steering proportionally (teledrive mode only); a
click slams speed to zero and holds it there for a fixed interval.

Coordinates are normalized to [0, 1] with y = 0 at the bottom edge and
y = 1 at the top. Commands are normalized to [0, 1] with steering 0.5 as
straight-ahead neutral.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OverlayGeometry:
    """Zone layout as fractions of the overlay width/height."""
    left_hot: float = 0.2
    right_hot: float = 0.2
    top_hot: float = 0.2
    bottom_hot: float = 0.2
    cold_half_width: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.left_hot < 0.5 - self.cold_half_width):
            raise ValueError("left hot zone must end before the cold zone")
        if not (0.5 + self.cold_half_width < 1.0 - self.right_hot):
            raise ValueError("cold zone must end before the right hot zone")
        if not (0.0 < self.bottom_hot and self.bottom_hot < 1.0 - self.top_hot):
            raise ValueError("top/bottom hot zones must be disjoint")
        if self.cold_half_width < 0.0:
            raise ValueError("cold_half_width must be non-negative")

    def steer_zone(self, x: float) -> str:
        """'left', 'right', 'cold', or 'neutral' for a clamped x."""
        if x <= self.left_hot:
            return "left"
        if x >= 1.0 - self.right_hot:
            return "right"
        if abs(x - 0.5) <= self.cold_half_width:
            return "cold"
        return "neutral"

    def speed_zone(self, y: float) -> str:
        """'top', 'bottom', or 'neutral' for a clamped y (y=1 is the top)."""
        if y >= 1.0 - self.top_hot:
            return "top"
        if y <= self.bottom_hot:
            return "bottom"
        return "neutral"


@dataclass(frozen=True)
class CursorSample:
    """One decoded (or captured) cursor sample on the session clock."""
    x: float
    y: float
    click: bool = False
    t: float = 0.0  # ms

    def __post_init__(self):
        # Marginally out-of-range positions are decoder noise: clamp, don't
        # reject. Non-finite values are left as-is for tick() to flag.
        if math.isfinite(self.x):
            object.__setattr__(self, "x", min(1.0, max(0.0, self.x)))
        if math.isfinite(self.y):
            object.__setattr__(self, "y", min(1.0, max(0.0, self.y)))

    @property
    def finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


@dataclass(frozen=True)
class RampConfig:
    tau_steer: float = 800.0  # ms
    tau_speed: float = 800.0  # ms
    cold_gain: float = 0.1  # steering units per second at full cold-zone offset
    brake_hold: float = 1000.0  # ms

    def __post_init__(self):
        if self.tau_steer <= 0 or self.tau_speed <= 0:
            raise ValueError("time constants must be positive")
        if self.cold_gain < 0:
            raise ValueError("cold_gain must be non-negative")
        if self.brake_hold <= 0:
            raise ValueError("brake_hold must be positive")


@dataclass(frozen=True)
class ControlState:
    steering_cmd: float = 0.5
    speed_cmd: float = 0.0
    brake_hold_remaining: float = 0.0  # ms
    cold_steer_enabled: bool = False

    def __post_init__(self):
        if not (0.0 <= self.steering_cmd <= 1.0 and 0.0 <= self.speed_cmd <= 1.0):
            raise ValueError("commands must stay in [0, 1]")
        if self.brake_hold_remaining < 0:
            raise ValueError("brake hold cannot be negative")
        if self.brake_hold_remaining > 0:
            # Invariant: an active hold always pins the speed command.
            object.__setattr__(self, "speed_cmd", 0.0)


@dataclass(frozen=True)
class CommandTriple:
    steering: float
    speed: float
    brake: bool


def _ramp(value: float, limit: float, dt: float, tau: float) -> float:
    """First-order exponential approach; a convex combination, so the
    result never overshoots the limit."""
    alpha = 1.0 - math.exp(-dt / tau)
    return value + alpha * (limit - value)


def tick(state: ControlState, cursor: CursorSample, geom: OverlayGeometry,
         cfg: RampConfig, dt: float) -> ControlState:
    """Advance the control law by dt milliseconds with one cursor sample.

    Steering ramps toward 1 in the right hot zone, toward 0 in the left,
    and drifts proportionally to the offset from center inside the cold
    zone (teledrive mode only). Speed ramps toward 1 in the top hot zone
    and toward 0 in the bottom one; elsewhere it holds. An active brake
    hold pins speed to zero; if the hold expires mid-tick, the ramp resumes
    for exactly the remaining fraction of dt, so the hold length is
    independent of the tick schedule.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not cursor.finite:
        logger.warning("rejected non-finite cursor sample at t=%s", cursor.t)
        return state

    steering = state.steering_cmd
    zone = geom.steer_zone(cursor.x)
    if zone == "right":
        steering = _ramp(steering, 1.0, dt, cfg.tau_steer)
    elif zone == "left":
        steering = _ramp(steering, 0.0, dt, cfg.tau_steer)
    elif zone == "cold" and state.cold_steer_enabled:
        steering += cfg.cold_gain * (cursor.x - 0.5) * (dt / 1000.0)
        steering = min(1.0, max(0.0, steering))

    speed = state.speed_cmd
    hold = state.brake_hold_remaining
    ramp_dt = dt
    if hold > 0.0:
        consumed = min(hold, dt)
        hold -= consumed
        ramp_dt = dt - consumed
        speed = 0.0
    if ramp_dt > 0.0:
        speed_zone = geom.speed_zone(cursor.y)
        if speed_zone == "top":
            speed = _ramp(speed, 1.0, ramp_dt, cfg.tau_speed)
        elif speed_zone == "bottom":
            speed = _ramp(speed, 0.0, ramp_dt, cfg.tau_speed)

    next_state = ControlState(steering, speed, hold, state.cold_steer_enabled)
    if cursor.click:
        next_state = apply_click(next_state, cfg)
    return next_state


def apply_click(state: ControlState, cfg: RampConfig) -> ControlState:
    """Full-stop brake: speed to zero immediately, held for cfg.brake_hold ms."""
    return replace(state, speed_cmd=0.0, brake_hold_remaining=cfg.brake_hold)


def to_vehicle_command(state: ControlState) -> CommandTriple:
    """Project the control state onto the wire command triple."""
    braking = state.brake_hold_remaining > 0.0
    return CommandTriple(
        steering=state.steering_cmd,
        speed=0.0 if braking else state.speed_cmd,
        brake=braking,
    )
