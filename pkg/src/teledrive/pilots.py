"""Pilot agents producing cursor samples for a live session.

The scripted pilot drives the route by pure pursuit, translated into the
overlay's bang-bang cursor vocabulary (dwell in a hot zone until the
ramped command reaches its target, then recenter). The decoder pilot
routes the same intentions through the synthetic-broadband decode
pipeline, closing the loop through decoded cursor positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from teledrive.decoder import DecoderRig, LiveSynth, StreamingDecoder
from teledrive.overlay import ControlState, CursorSample, OverlayGeometry
from teledrive.vehicle import VehicleParams, wheel_angle_to_steering
from teledrive.world import WorldModel, project_to_polyline
from teledrive.worlds import build_world  # noqa: F401  (re-export convenience)


@dataclass(frozen=True)
class PilotObservation:
    """What the operator can see: the viewport pose feed (the video
    substitute, possibly stale under link impairments), telemetry from the
    latest state frame, and the overlay's own control state."""
    t: float  # ms, operator clock
    pose: tuple[float, float, float] | None  # x, y, heading from the viewport
    pose_age_ms: float
    speed_mph: float
    control: ControlState
    mode: str


class ScriptedPilot:
    """Deterministic route follower driving through the overlay interface."""

    def __init__(self, world: WorldModel, params: VehicleParams,
                 geom: OverlayGeometry | None = None,
                 lookahead: float = 6.0, steer_tol: float = 0.004,
                 speed_tol: float = 0.02):
        self.world = world
        self.params = params
        self.geom = geom or OverlayGeometry()
        self.lookahead = lookahead
        self.steer_tol = steer_tol
        self.speed_tol = speed_tol
        self._s = 0.0  # believed route progress (m)
        self._stop_plan = self._plan_stops()
        self._dwell_ms = 0.0
        self._active_stop: int | None = None

    def _plan_stops(self) -> list[dict]:
        """Arc-length positions of stop lines and traffic lights along the
        route, in driving order."""
        route = self.world.route
        plans = []
        for idx, sign in enumerate(self.world.stop_signs):
            mid = ((sign.line[0][0] + sign.line[1][0]) / 2.0,
                   (sign.line[0][1] + sign.line[1][1]) / 2.0)
            s, d = project_to_polyline(route.waypoints, route.cum, mid)
            if d <= route.corridor + 3.0:
                plans.append({"kind": "stop", "s": s, "index": idx, "done": False})
        for idx, light in enumerate(self.world.traffic_lights):
            mid = ((light.line[0][0] + light.line[1][0]) / 2.0,
                   (light.line[0][1] + light.line[1][1]) / 2.0)
            s, d = project_to_polyline(route.waypoints, route.cum, mid)
            if d <= route.corridor + 3.0:
                plans.append({"kind": "light", "s": s, "index": idx, "light": light})
        plans.sort(key=lambda p: p["s"])
        return plans

    # -- intent computation -------------------------------------------------

    def desired(self, obs: PilotObservation, dt_ms: float) -> tuple[float, float, bool]:
        """(steering_target, speed_target, brake_wanted) in command units."""
        route = self.world.route
        if obs.pose is None:
            return 0.5, 0.0, False
        x, y, heading = obs.pose
        s, dist = project_to_polyline(route.waypoints, route.cum, (x, y),
                                      self._s - 5.0, self._s + 25.0)
        if dist <= route.corridor * 2.0 and s > self._s:
            self._s = s

        steering_target = self._pursuit_steering(x, y, heading)
        speed_target, brake = self._speed_plan(obs, dt_ms)
        return steering_target, speed_target, brake

    def _pursuit_steering(self, x: float, y: float, heading: float) -> float:
        route = self.world.route
        target_s = min(self._s + self.lookahead, route.total_length)
        tx, ty = _point_at_arclength(route.waypoints, route.cum, target_s)
        dx, dy = tx - x, ty - y
        dist = math.hypot(dx, dy)
        if dist < 1e-6:
            return 0.5
        alpha = _wrap_angle(math.atan2(dy, dx) - heading)
        delta = math.atan2(2.0 * self.params.wheelbase * math.sin(alpha), dist)
        wheel = math.degrees(delta) * self.params.steer_ratio
        wheel = min(601.5, max(-601.5, wheel))
        return wheel_angle_to_steering(wheel)

    def _speed_plan(self, obs: PilotObservation, dt_ms: float) -> tuple[float, bool]:
        """Cruise at the cap except when a stop or red light is close."""
        stop_margin = 2.6  # m before the line to start a full-stop brake
        for plan in self._stop_plan:
            ahead = plan["s"] - self._s
            if plan["kind"] == "stop" and not plan["done"]:
                if ahead < -1.0:
                    plan["done"] = True  # passed it (should not happen)
                    continue
                if ahead <= stop_margin:
                    if obs.speed_mph < 0.05:
                        self._dwell_ms += dt_ms
                    if self._dwell_ms >= 1200.0:
                        plan["done"] = True
                        self._dwell_ms = 0.0
                        return 1.0, False
                    return 0.0, True
                break  # nothing closer matters
            if plan["kind"] == "light":
                if -1.0 <= ahead <= stop_margin and plan["light"].is_red(obs.t):
                    return 0.0, True
                if ahead > stop_margin:
                    break
        return 1.0, False

    # -- overlay translation -------------------------------------------------

    def cursor_for(self, obs: PilotObservation, steering_target: float,
                   speed_target: float, brake: bool, t: float) -> CursorSample:
        """Bang-bang cursor placement: dwell in the hot zone that moves the
        ramped command toward its target, recenter once close."""
        geom = self.geom
        control = obs.control
        err_steer = steering_target - control.steering_cmd
        if err_steer > self.steer_tol:
            cx = 1.0 - geom.right_hot / 2.0
        elif err_steer < -self.steer_tol:
            cx = geom.left_hot / 2.0
        else:
            cx = 0.5  # cold-zone center: exactly zero drift
        if brake:
            return CursorSample(x=cx, y=geom.bottom_hot / 2.0, click=True, t=t)
        err_speed = speed_target - control.speed_cmd
        if err_speed > self.speed_tol:
            cy = 1.0 - geom.top_hot / 2.0
        elif err_speed < -self.speed_tol:
            cy = geom.bottom_hot / 2.0
        else:
            cy = 0.5
        return CursorSample(x=cx, y=cy, click=False, t=t)

    def sample(self, obs: PilotObservation, dt_ms: float) -> CursorSample:
        steering_target, speed_target, brake = self.desired(obs, dt_ms)
        return self.cursor_for(obs, steering_target, speed_target, brake, obs.t)


class DecoderPilot:
    """The scripted intentions pushed through the synthetic decode pipeline.

    At each decoder bin the pilot forms an intended cursor velocity toward
    the scripted target position (plus a click intent), synthesizes one
    broadband window with the rig's fixed channel mixing, and decodes it;
    between bins the last decoded sample holds.
    """

    def __init__(self, world: WorldModel, params: VehicleParams,
                 rig: DecoderRig, noise_seed: int,
                 geom: OverlayGeometry | None = None,
                 gain: float = 14.0, max_speed: float = 0.9):
        self.scripted = ScriptedPilot(world, params, geom)
        self.rig = rig
        self.synth = LiveSynth(rig.synth_cfg, rig.noise_std, noise_seed)
        self.decoder = StreamingDecoder(rig.model)
        self.gain = gain  # cursor units/s per unit of position error
        self.max_speed = max_speed
        self._bin_ms = 1000.0 / rig.model.bin_rate
        self._next_bin = 0.0
        self._last = CursorSample(x=0.5, y=0.5, t=0.0)

    def sample(self, obs: PilotObservation, dt_ms: float) -> CursorSample:
        if obs.t + 1e-9 < self._next_bin:
            return CursorSample(self._last.x, self._last.y, False, obs.t)
        self._next_bin += self._bin_ms
        steering_target, speed_target, brake = self.scripted.desired(obs, self._bin_ms)
        target = self.scripted.cursor_for(obs, steering_target, speed_target,
                                          brake, obs.t)
        vx = _clamp(self.gain * (target.x - self.decoder.x), self.max_speed)
        vy = _clamp(self.gain * (target.y - self.decoder.y), self.max_speed)
        window = self.synth.gen_bin(np.array([vx, vy, 1.0 if brake else 0.0]))
        out = self.decoder.decode_bin(window)
        sample = CursorSample(x=out.x, y=out.y, click=self.decoder.click_held,
                              t=obs.t)
        self._last = sample
        return sample


def _point_at_arclength(points: np.ndarray, cum: np.ndarray,
                        s: float) -> tuple[float, float]:
    s = min(max(s, 0.0), float(cum[-1]))
    idx = int(np.searchsorted(cum, s, side="right")) - 1
    idx = min(max(idx, 0), len(points) - 2)
    seg = cum[idx + 1] - cum[idx]
    frac = 0.0 if seg <= 0 else (s - cum[idx]) / seg
    p = points[idx] + frac * (points[idx + 1] - points[idx])
    return float(p[0]), float(p[1])


def _wrap_angle(a: float) -> float:
    while a > math.pi:
        a -= 2.0 * math.pi
    while a < -math.pi:
        a += 2.0 * math.pi
    return a


def _clamp(v: float, limit: float) -> float:
    return min(limit, max(-limit, v))
