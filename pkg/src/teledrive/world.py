"""World model and infraction detection.

A world is data: lane centerlines with widths, a route polyline with a
corridor radius, convex obstacle polygons, stop signs (stop line plus an
approach zone), and traffic lights with periodic red phases. Detection is
stateful per run (contact episodes, excursion debouncing, dwell tracking)
and fully deterministic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from teledrive.vehicle import VehicleParams, VehicleState, footprint

WORLD_VERSION = 1


# ---------------------------------------------------------------------------
# geometry primitives


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 2:
        raise ValueError("need an (n, 2) array of at least two points")
    return arr


def polyline_lengths(points: np.ndarray) -> np.ndarray:
    """Cumulative arc length at each vertex, starting at 0."""
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def project_to_polyline(points: np.ndarray, cum: np.ndarray,
                        p: tuple[float, float],
                        s_lo: float = -math.inf,
                        s_hi: float = math.inf) -> tuple[float, float]:
    """Closest point on the polyline to p, restricted to arc lengths in
    [s_lo, s_hi]. Returns (arc_length, distance)."""
    a = points[:-1]
    d = points[1:] - a
    seg_len2 = (d * d).sum(axis=1)
    pv = np.asarray(p, dtype=float)
    safe = np.where(seg_len2 == 0.0, 1.0, seg_len2)
    t = np.clip(((pv - a) * d).sum(axis=1) / safe, 0.0, 1.0)
    t = np.where(seg_len2 == 0.0, 0.0, t)
    closest = a + t[:, None] * d
    d2 = ((pv - closest) ** 2).sum(axis=1)
    s = cum[:-1] + t * np.sqrt(seg_len2)
    valid = (cum[1:] >= s_lo) & (cum[:-1] <= s_hi) & (s >= s_lo) & (s <= s_hi)
    if not valid.any():
        return 0.0, math.inf
    d2 = np.where(valid, d2, math.inf)
    i = int(np.argmin(d2))
    return float(s[i]), float(math.sqrt(d2[i]))


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Proper or touching intersection of segments p1p2 and q1q2."""
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(v) < 1e-12:
            return 0
        return 1 if v > 0 else -1

    def on_segment(a, b, c):
        return (min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12
                and min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_segment(p1, p2, q1):
        return True
    if o2 == 0 and on_segment(p1, p2, q2):
        return True
    if o3 == 0 and on_segment(q1, q2, p1):
        return True
    if o4 == 0 and on_segment(q1, q2, p2):
        return True
    return False


def convex_polygons_overlap(poly_a, poly_b) -> bool:
    """Separating-axis test for two convex polygons."""
    def axes(poly):
        out = []
        n = len(poly)
        for i in range(n):
            x1, y1 = poly[i]
            x2, y2 = poly[(i + 1) % n]
            out.append((y1 - y2, x2 - x1))  # outward-ish normal; sign irrelevant
        return out

    for ax, ay in axes(poly_a) + axes(poly_b):
        proj_a = [ax * x + ay * y for x, y in poly_a]
        proj_b = [ax * x + ay * y for x, y in poly_b]
        if max(proj_a) < min(proj_b) or max(proj_b) < min(proj_a):
            return False
    return True


def point_in_convex_polygon(p, poly) -> bool:
    sign = 0
    n = len(poly)
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        cross = (bx - ax) * (p[1] - ay) - (by - ay) * (p[0] - ax)
        if abs(cross) < 1e-12:
            continue
        s = 1 if cross > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return True


# ---------------------------------------------------------------------------
# world data


@dataclass(frozen=True, eq=False)
class Lane:
    centerline: np.ndarray
    width: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "centerline", _as_points(self.centerline))
        if self.width <= 0:
            raise ValueError("lane width must be positive")
        object.__setattr__(self, "_cum", polyline_lengths(self.centerline))

    def lateral_offset(self, p) -> float:
        _, d = project_to_polyline(self.centerline, self._cum, p)
        return d


@dataclass(frozen=True, eq=False)
class Route:
    waypoints: np.ndarray
    corridor: float = 2.5  # m, radius within which the vehicle counts as on-route

    def __post_init__(self):
        object.__setattr__(self, "waypoints", _as_points(self.waypoints))
        if self.corridor <= 0:
            raise ValueError("corridor must be positive")
        cum = polyline_lengths(self.waypoints)
        if cum[-1] <= 0:
            raise ValueError("route must have positive length")
        object.__setattr__(self, "cum", cum)

    @property
    def total_length(self) -> float:
        return float(self.cum[-1])


@dataclass(frozen=True, eq=False)
class Obstacle:
    polygon: np.ndarray  # convex, counterclockwise

    def __post_init__(self):
        arr = np.asarray(self.polygon, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 3:
            raise ValueError("obstacle polygon needs at least 3 vertices")
        area = 0.0
        for i in range(len(arr)):
            x1, y1 = arr[i]
            x2, y2 = arr[(i + 1) % len(arr)]
            area += x1 * y2 - x2 * y1
        if abs(area) < 1e-9:
            raise ValueError("degenerate obstacle polygon")
        object.__setattr__(self, "polygon", arr)


@dataclass(frozen=True, eq=False)
class StopSign:
    line: tuple[tuple[float, float], tuple[float, float]]
    approach_zone: np.ndarray  # convex polygon covering the approach

    def __post_init__(self):
        object.__setattr__(self, "approach_zone",
                           np.asarray(self.approach_zone, dtype=float))


@dataclass(frozen=True)
class TrafficLight:
    line: tuple[tuple[float, float], tuple[float, float]]
    period: float  # s
    red_from: float  # s within the period
    red_to: float

    def __post_init__(self):
        if not (0 <= self.red_from < self.red_to <= self.period):
            raise ValueError("red window must lie within the period")

    def is_red(self, t_ms: float) -> bool:
        phase = (t_ms / 1000.0) % self.period
        return self.red_from <= phase < self.red_to


@dataclass
class WorldModel:
    name: str
    lanes: list[Lane]
    route: Route
    obstacles: list[Obstacle] = field(default_factory=list)
    stop_signs: list[StopSign] = field(default_factory=list)
    traffic_lights: list[TrafficLight] = field(default_factory=list)

    def nearest_lane(self, p) -> tuple[Lane, float]:
        """Nearest lane by centerline distance; also covers the off-all-lanes
        case (the nearest one is still used)."""
        best, best_d = None, math.inf
        for lane in self.lanes:
            d = lane.lateral_offset(p)
            if d < best_d:
                best, best_d = lane, d
        if best is None:
            raise ValueError("world has no lanes")
        return best, best_d


# ---------------------------------------------------------------------------
# route tracking (progress, off-route abort)


@dataclass
class RouteTracker:
    """Monotone route progress plus the 10 s off-corridor abort rule.

    Progress advances only when the vehicle's local projection onto the
    route lies within the corridor; the search window moves forward with
    the vehicle so closed loops do not alias their start and end.
    """
    route: Route
    offroute_abort_s: float = 10.0
    search_back: float = 5.0
    search_ahead: float = 25.0
    _s: float = 0.0
    _offroute_s: float = 0.0
    aborted: bool = False
    completed: bool = False

    def update(self, state: VehicleState, dt: float) -> float:
        """Advance with the latest vehicle state; dt in seconds."""
        if self.aborted:
            return self.progress
        s, d = project_to_polyline(
            self.route.waypoints, self.route.cum, (state.x, state.y),
            self._s - self.search_back, self._s + self.search_ahead)
        if d <= self.route.corridor:
            self._offroute_s = 0.0
            if s > self._s:
                self._s = s
        else:
            self._offroute_s += dt
            if self._offroute_s > self.offroute_abort_s:
                self.aborted = True
        if self.route.total_length - self._s <= self.route.corridor:
            self.completed = True
            self._s = self.route.total_length
        return self.progress

    @property
    def progress(self) -> float:
        """C in [0, 1]; frozen at its current value once aborted."""
        if self.completed:
            return 1.0
        return min(1.0, self._s / self.route.total_length)

    @property
    def offroute_time(self) -> float:
        return self._offroute_s


def route_progress(state: VehicleState, route: Route) -> float:
    """One-shot progress for a single state (fresh tracker semantics)."""
    tracker = RouteTracker(route)
    return tracker.update(state, 0.0)


# ---------------------------------------------------------------------------
# infraction detection


@dataclass(frozen=True)
class InfractionEvent:
    kind: str  # collision | lane_deviation | ran_stop | ran_red
    t: float  # ms
    weight: float = 1.0

    def __post_init__(self):
        if self.kind not in ("collision", "lane_deviation", "ran_stop", "ran_red"):
            raise ValueError(f"unknown infraction kind {self.kind!r}")
        if self.weight not in (0.5, 1.0):
            raise ValueError("event weight must be 0.5 or 1.0")


@dataclass(frozen=True)
class DetectorConfig:
    lane_margin: float = 0.2  # m beyond the half-width before an excursion
    lane_debounce_ms: float = 500.0
    stop_eps_mph: float = 0.1
    stop_dwell_ms: float = 1000.0


class InfractionDetector:
    """Stateful per-run detector; feed consecutive states through step()."""

    def __init__(self, world: WorldModel, params: VehicleParams,
                 cfg: DetectorConfig | None = None):
        self.world = world
        self.params = params
        self.cfg = cfg or DetectorConfig()
        self._in_contact: set[int] = set()
        self._excursion_ms = 0.0
        self._excursion_counted = False
        self._dwell_ms = {i: 0.0 for i in range(len(world.stop_signs))}
        self._in_zone = {i: False for i in range(len(world.stop_signs))}

    def step(self, prev: VehicleState, nxt: VehicleState,
             t_ms: float, dt_ms: float) -> list[InfractionEvent]:
        events: list[InfractionEvent] = []
        events.extend(self._collisions(nxt, t_ms))
        events.extend(self._lane_deviation(nxt, t_ms, dt_ms))
        events.extend(self._stop_signs(prev, nxt, t_ms, dt_ms))
        events.extend(self._red_lights(prev, nxt, t_ms))
        return events

    def _collisions(self, state: VehicleState, t_ms: float) -> list[InfractionEvent]:
        events = []
        body = footprint(state, self.params)
        for idx, obstacle in enumerate(self.world.obstacles):
            hit = convex_polygons_overlap(body, obstacle.polygon.tolist())
            if hit and idx not in self._in_contact:
                # one event per contact episode
                self._in_contact.add(idx)
                events.append(InfractionEvent("collision", t_ms))
            elif not hit:
                self._in_contact.discard(idx)
        return events

    def _lane_deviation(self, state: VehicleState, t_ms: float,
                        dt_ms: float) -> list[InfractionEvent]:
        if not self.world.lanes:
            return []
        lane, offset = self.world.nearest_lane((state.x, state.y))
        outside = offset > lane.width / 2.0 + self.cfg.lane_margin
        events = []
        if outside:
            self._excursion_ms += dt_ms
            if (self._excursion_ms >= self.cfg.lane_debounce_ms
                    and not self._excursion_counted):
                self._excursion_counted = True
                events.append(InfractionEvent("lane_deviation", t_ms))
        else:
            self._excursion_ms = 0.0
            self._excursion_counted = False
        return events

    def _stop_signs(self, prev: VehicleState, nxt: VehicleState,
                    t_ms: float, dt_ms: float) -> list[InfractionEvent]:
        events = []
        for idx, sign in enumerate(self.world.stop_signs):
            in_zone = point_in_convex_polygon((nxt.x, nxt.y), sign.approach_zone.tolist())
            if in_zone:
                if not self._in_zone[idx]:
                    self._dwell_ms[idx] = 0.0  # fresh approach episode
                if nxt.speed < self.cfg.stop_eps_mph:
                    self._dwell_ms[idx] += dt_ms
            self._in_zone[idx] = in_zone
            crossed = segments_intersect((prev.x, prev.y), (nxt.x, nxt.y),
                                         sign.line[0], sign.line[1])
            if crossed and self._dwell_ms[idx] < self.cfg.stop_dwell_ms:
                events.append(InfractionEvent("ran_stop", t_ms))
            if crossed:
                self._dwell_ms[idx] = 0.0
        return events

    def _red_lights(self, prev: VehicleState, nxt: VehicleState,
                    t_ms: float) -> list[InfractionEvent]:
        events = []
        for light in self.world.traffic_lights:
            crossed = segments_intersect((prev.x, prev.y), (nxt.x, nxt.y),
                                         light.line[0], light.line[1])
            if crossed and light.is_red(t_ms):
                events.append(InfractionEvent("ran_red", t_ms))
        return events


# ---------------------------------------------------------------------------
# world persistence (structured-text documents)


def save_world(world: WorldModel, path: str | Path):
    doc = {
        "version": WORLD_VERSION,
        "name": world.name,
        "lanes": [{"centerline": lane.centerline.tolist(), "width": lane.width}
                  for lane in world.lanes],
        "route": {"waypoints": world.route.waypoints.tolist(),
                  "corridor": world.route.corridor},
        "obstacles": [o.polygon.tolist() for o in world.obstacles],
        "stop_signs": [{"line": [list(p) for p in s.line],
                        "approach_zone": s.approach_zone.tolist()}
                       for s in world.stop_signs],
        "traffic_lights": [{"line": [list(p) for p in l.line], "period": l.period,
                            "red_from": l.red_from, "red_to": l.red_to}
                           for l in world.traffic_lights],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_world(path: str | Path) -> WorldModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != WORLD_VERSION:
        raise ValueError(f"unsupported world version {doc.get('version')!r}")
    return WorldModel(
        name=doc["name"],
        lanes=[Lane(np.array(l["centerline"]), l["width"]) for l in doc["lanes"]],
        route=Route(np.array(doc["route"]["waypoints"]), doc["route"]["corridor"]),
        obstacles=[Obstacle(np.array(p)) for p in doc["obstacles"]],
        stop_signs=[StopSign((tuple(s["line"][0]), tuple(s["line"][1])),
                             np.array(s["approach_zone"]))
                    for s in doc["stop_signs"]],
        traffic_lights=[TrafficLight((tuple(l["line"][0]), tuple(l["line"][1])),
                                     l["period"], l["red_from"], l["red_to"])
                        for l in doc["traffic_lights"]],
    )
