"""Browser gateway: serves the operator client bundle and bridges it to a
live driving session over a WebSocket.

The message schema (versioned, field names mirroring the wire frames) is
the only protocol the browser speaks; the raw vehicle link stays inside
the session. Snapshots flow gateway -> browser at tick cadence; input
samples and session controls flow back.
"""

from __future__ import annotations

import asyncio
import json
import time
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from teledrive.overlay import CursorSample
from teledrive.pilots import PilotObservation
from teledrive.session import DrivingSession, SessionConfig, data_dir

GATEWAY_SCHEMA_VERSION = 1
FRONTEND_DIST = Path(__file__).resolve().parents[2] / "frontend" / "dist"

QUANT = 2048  # pointer coordinates arrive pre-quantized to 1/2048


class UiPilot:
    """Bridges browser input messages into the session's pilot slot."""

    def __init__(self):
        self.x = 0.5
        self.y = 0.5
        self._click_pending = False

    def push_input(self, msg: dict):
        self.x = min(1.0, max(0.0, float(msg["x"])))
        self.y = min(1.0, max(0.0, float(msg["y"])))
        if msg.get("click"):
            self._click_pending = True

    def sample(self, obs: PilotObservation, dt_ms: float) -> CursorSample:
        click = self._click_pending
        self._click_pending = False
        return CursorSample(self.x, self.y, click, obs.t)


def world_payload(session: DrivingSession) -> dict:
    w = session.world
    return {
        "v": GATEWAY_SCHEMA_VERSION,
        "type": "world",
        "name": w.name,
        "lanes": [{"centerline": lane.centerline.tolist(), "width": lane.width}
                  for lane in w.lanes],
        "route": w.route.waypoints.tolist(),
        "obstacles": [o.polygon.tolist() for o in w.obstacles],
        "stop_lines": [[list(s.line[0]), list(s.line[1])] for s in w.stop_signs],
        "light_lines": [[list(l.line[0]), list(l.line[1])]
                        for l in w.traffic_lights],
        "geometry": {
            "left_hot": session.operator.geom.left_hot,
            "right_hot": session.operator.geom.right_hot,
            "top_hot": session.operator.geom.top_hot,
            "bottom_hot": session.operator.geom.bottom_hot,
            "cold_half_width": session.operator.geom.cold_half_width,
        },
        "lag_threshold": session.cfg.lag_threshold,
    }


def snapshot_payload(session: DrivingSession) -> dict:
    op = session.operator
    veh = session.vehicle
    s = veh.state
    control = op.control
    lag = 0.0
    if op.last_viewport is not None:
        t = session.tick * session.dt_ms
        lag = max(0.0, t - (op.last_viewport.t_send - op.estimator.offset))
    return {
        "v": GATEWAY_SCHEMA_VERSION,
        "type": "snapshot",
        "t": session.tick * session.dt_ms,
        "control": {"steering": control.steering_cmd, "speed": control.speed_cmd,
                    "brake_hold_remaining": control.brake_hold_remaining},
        "vehicle": {"x": s.x, "y": s.y, "heading": s.heading, "speed": s.speed,
                    "wheel_angle": s.wheel_angle, "mode": s.mode.value,
                    "epb": s.epb},
        "mode": veh.supervisor.mode.value,
        "lag_ms": lag,
        "progress": veh.tracker.progress,
        "infractions": len(veh.infractions),
        "running": session.running,
        "outcome": session.outcome,
    }


def build_app(cfg: SessionConfig) -> FastAPI:
    app = FastAPI(title="teledrive operator gateway")
    app.state.config = cfg
    app.state.last_record = None

    if FRONTEND_DIST.exists():
        app.mount("/assets", StaticFiles(directory=FRONTEND_DIST), name="assets")

        @app.get("/")
        def index():
            return FileResponse(FRONTEND_DIST / "index.html")
    else:
        @app.get("/")
        def index_missing():
            return JSONResponse(
                {"error": "frontend bundle not built; run `npm run build` "
                          "in frontend/"}, status_code=503)

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "task": cfg.task, "world": cfg.world}

    @app.websocket("/ws")
    async def ws(socket: WebSocket):
        await socket.accept()
        pilot = UiPilot()
        session = DrivingSession(cfg, pilot_override=pilot)
        await socket.send_text(json.dumps(world_payload(session)))
        tick_s = session.dt_ms / 1000.0
        next_tick = time.monotonic()
        try:
            while True:
                # drain any pending client messages without blocking the loop
                while True:
                    try:
                        raw = await asyncio.wait_for(socket.receive_text(),
                                                     timeout=0.0005)
                    except asyncio.TimeoutError:
                        break
                    msg = json.loads(raw)
                    if msg.get("type") == "input":
                        pilot.push_input(msg)
                    elif msg.get("type") == "activate":
                        session.activate()
                    elif msg.get("type") == "stop":
                        session.outcome = session.outcome or "stopped"
                if session.running:
                    session.step()
                await socket.send_text(json.dumps(snapshot_payload(session)))
                if not session.running:
                    record = session.finish()
                    app.state.last_record = record
                    directory = data_dir()
                    directory.mkdir(parents=True, exist_ok=True)
                    record.save(directory / "ui_session.jsonl")
                    await socket.send_text(json.dumps(
                        {"v": GATEWAY_SCHEMA_VERSION, "type": "report",
                         **record.report}))
                    break
                next_tick += tick_s
                delay = next_tick - time.monotonic()
                if delay > 0:
                    await asyncio.sleep(delay)
        except WebSocketDisconnect:
            pass

    return app
