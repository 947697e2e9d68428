"""Built-in world fixtures.

Four obstacle-course loop variants (clockwise/counterclockwise, with or
without a lane-switch segment), four mock-urban free-driving routes, and a
town route with six traffic lights whose composition mirrors the simulated
town task (two right turns, two left turns, a right curve, a left lane
switch).
"""

from __future__ import annotations

import math

import numpy as np

from teledrive.world import (
    Lane,
    Obstacle,
    Route,
    StopSign,
    TrafficLight,
    WorldModel,
)

BUILTIN_WORLDS = (
    "obstacle_cw_ls", "obstacle_cw_nols", "obstacle_ccw_ls", "obstacle_ccw_nols",
    "mcity_route1", "mcity_route2", "mcity_route3", "mcity_route4",
    "town",
)


def _arc(cx: float, cy: float, r: float, a0_deg: float, a1_deg: float,
         step_deg: float = 7.5) -> np.ndarray:
    """Polyline along a circular arc; direction follows the angle sweep."""
    steps = max(2, int(math.ceil(abs(a1_deg - a0_deg) / step_deg)))
    angles = np.radians(np.linspace(a0_deg, a1_deg, steps + 1))
    return np.column_stack([cx + r * np.cos(angles), cy + r * np.sin(angles)])


def _join(*parts) -> np.ndarray:
    """Stack path pieces, dropping duplicate points at the joins."""
    pts = np.vstack([np.atleast_2d(p) for p in parts])
    keep = [0]
    for i in range(1, len(pts)):
        if np.linalg.norm(pts[i] - pts[keep[-1]]) > 1e-9:
            keep.append(i)
    return pts[keep]


# ---------------------------------------------------------------------------
# obstacle course (four variants)


def _loop_centerline() -> np.ndarray:
    """Rounded-rectangle loop, counterclockwise, starting mid-bottom."""
    r = 9.0
    return _join(
        [[0.0, -15.0], [21.0, -15.0]],
        _arc(21.0, -6.0, r, -90.0, 0.0),
        [[30.0, 6.0]],
        _arc(21.0, 6.0, r, 0.0, 90.0),
        [[-21.0, 15.0]],
        _arc(-21.0, 6.0, r, 90.0, 180.0),
        [[-30.0, -6.0]],
        _arc(-21.0, -6.0, r, 180.0, 270.0),
        [[0.0, -15.0]],
    )


def _with_lane_switch(base: np.ndarray) -> np.ndarray:
    """Replace part of the top straight with a ramp to the inner parallel
    lane (4 m toward the loop center) and a ramp back."""
    out = []
    for x, y in base:
        on_top_straight = y > 14.0 and -14.0 <= x <= 14.0
        if on_top_straight:
            continue
        out.append((x, y))
        if y > 14.0 and abs(x - 21.0) < 1e-6:
            out.extend([(14.0, 15.0), (10.0, 11.0), (-6.0, 11.0),
                        (-10.0, 15.0), (-14.0, 15.0)])
    return np.array(out)


def obstacle_course(variant: str) -> WorldModel:
    """variant: '<cw|ccw>_<ls|nols>' for direction and lane-switch segment."""
    direction, _, switch = variant.partition("_")
    if direction not in ("cw", "ccw") or switch not in ("ls", "nols"):
        raise ValueError(f"unknown obstacle-course variant {variant!r}")
    center = _loop_centerline()
    lanes = [Lane(center, width=4.0)]
    route_pts = center
    if switch == "ls":
        lanes.append(Lane(np.array([[12.0, 11.0], [-8.0, 11.0]]), width=4.0))
        route_pts = _with_lane_switch(center)
    if direction == "cw":
        route_pts = route_pts[::-1].copy()

    # stop sign on the bottom straight; approach zone sits before the line
    # for the travel direction
    stop_line = ((10.0, -17.5), (10.0, -12.5))
    if direction == "ccw":
        zone = np.array([[2.0, -17.5], [10.5, -17.5], [10.5, -12.5], [2.0, -12.5]])
    else:
        zone = np.array([[9.5, -17.5], [18.0, -17.5], [18.0, -12.5], [9.5, -12.5]])

    obstacles = [
        Obstacle(np.array([[-8.0, -6.0], [-4.0, -6.0], [-4.0, -2.0], [-8.0, -2.0]])),
        Obstacle(np.array([[4.0, 2.0], [8.0, 2.0], [8.0, 6.0], [4.0, 6.0]])),
        Obstacle(np.array([[34.5, -2.0], [36.5, -2.0], [36.5, 2.0], [34.5, 2.0]])),
    ]
    return WorldModel(
        name=f"obstacle_{variant}",
        lanes=lanes,
        route=Route(route_pts, corridor=2.5),
        obstacles=obstacles,
        stop_signs=[StopSign(stop_line, zone)],
    )


# ---------------------------------------------------------------------------
# mock-urban free-driving map (four routes)


def mcity_world(route_id: int = 1) -> WorldModel:
    """Free-driving routes over a small urban block: an L, an out-and-back
    with a U-turn, an S, and a roundabout. Signals are ignored by the task
    protocol (scores use mode='mcity'), so none are modeled."""
    r = 8.0
    if route_id == 1:  # east, right... no: east then left to north
        pts = _join(
            [[0.0, 0.0], [40.0 - r, 0.0]],
            _arc(40.0 - r, r, r, -90.0, 0.0),
            [[40.0, 50.0]],
        )
    elif route_id == 2:  # east, U-turn, back west
        pts = _join(
            [[0.0, 0.0], [44.0, 0.0]],
            _arc(44.0, 7.0, 7.0, -90.0, 90.0),
            [[0.0, 14.0]],
        )
    elif route_id == 3:  # S-curve: east, north, east
        pts = _join(
            [[0.0, 0.0], [20.0 - r, 0.0]],
            _arc(20.0 - r, r, r, -90.0, 0.0),
            [[20.0, 30.0 - r]],
            _arc(20.0 + r, 30.0 - r, r, 180.0, 90.0),
            [[52.0, 30.0]],
        )
    elif route_id == 4:  # roundabout: 1.5 laps, exit north
        pts = _join(
            [[0.0, 0.0], [20.0, 0.0]],
            _arc(30.0, 0.0, 10.0, 180.0, 720.0, step_deg=10.0),
            [[40.0, 45.0]],
        )
    else:
        raise ValueError("route_id must be 1..4")
    return WorldModel(
        name=f"mcity_route{route_id}",
        lanes=[Lane(pts, width=4.0)],
        route=Route(pts, corridor=2.5),
        obstacles=[Obstacle(np.array([[10.0, 8.0], [14.0, 8.0], [14.0, 12.0],
                                      [10.0, 12.0]]))],
    )


# ---------------------------------------------------------------------------
# town route with traffic lights


def town_world() -> WorldModel:
    r = 9.0
    pts = _join(
        [[0.0, 0.0], [31.0, 0.0]],
        _arc(31.0, -9.0, r, 90.0, 0.0),        # right turn 1: east -> south
        [[40.0, -31.0]],
        _arc(49.0, -31.0, r, 180.0, 270.0),    # left turn 1: south -> east
        [[71.0, -40.0]],
        _arc(71.0, -31.0, r, -90.0, 0.0),      # left turn 2: east -> north
        [[80.0, -16.0]],
        [[76.0, -8.0]],                        # left lane switch (4 m)
        [[76.0, 6.0]],
        _arc(85.0, 6.0, r, 180.0, 90.0),       # right curve: north -> east
        [[100.0, 15.0]],
        _arc(100.0, 6.0, r, 90.0, 0.0),        # right turn 2: east -> south
        [[109.0, -10.0]],
    )
    lanes = [
        Lane(pts, width=4.0),
        # pre-switch lane continues straight north past the merge
        Lane(np.array([[80.0, -16.0], [80.0, 8.0]]), width=4.0),
    ]
    lights = [
        TrafficLight(((20.0, -2.5), (20.0, 2.5)), period=30.0, red_from=0.0, red_to=8.0),
        TrafficLight(((37.5, -20.0), (42.5, -20.0)), period=30.0, red_from=10.0, red_to=18.0),
        TrafficLight(((60.0, -42.5), (60.0, -37.5)), period=28.0, red_from=5.0, red_to=13.0),
        TrafficLight(((77.5, -24.0), (82.5, -24.0)), period=26.0, red_from=0.0, red_to=7.0),
        TrafficLight(((73.5, 0.0), (78.5, 0.0)), period=24.0, red_from=12.0, red_to=19.0),
        TrafficLight(((92.0, 12.5), (92.0, 17.5)), period=30.0, red_from=3.0, red_to=11.0),
    ]
    return WorldModel(
        name="town",
        lanes=lanes,
        route=Route(pts, corridor=2.5),
        obstacles=[Obstacle(np.array([[18.0, -10.0], [22.0, -10.0], [22.0, -6.0],
                                      [18.0, -6.0]]))],
        traffic_lights=lights,
    )


def build_world(name: str) -> WorldModel:
    """Resolve a built-in world by name (see BUILTIN_WORLDS)."""
    if name.startswith("obstacle_"):
        return obstacle_course(name.removeprefix("obstacle_"))
    if name.startswith("mcity_route"):
        return mcity_world(int(name.removeprefix("mcity_route")))
    if name == "mcity":
        return mcity_world(1)
    if name == "town":
        return town_world()
    raise ValueError(f"unknown world {name!r}; built-ins: {BUILTIN_WORLDS}")


def fixture_path(name: str):
    """Path of the packaged world file for a built-in name."""
    from pathlib import Path

    return Path(__file__).parent / "data" / "worlds" / f"{name}.json"
