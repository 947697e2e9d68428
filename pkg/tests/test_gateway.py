"""Gateway message bridge: schema, input round-trip, session lifecycle."""

import json

import pytest
from fastapi.testclient import TestClient

from teledrive.gateway import build_app
from teledrive.session import PilotConfig, SessionConfig

QUANT = 2048


@pytest.fixture
def client(tmp_path, monkeypatch):
    monkeypatch.setenv("TELEDRIVE_DATA_DIR", str(tmp_path))
    cfg = SessionConfig(task="obstacle_teledrive", world="obstacle_ccw_nols",
                        seed=1, tick_rate=100.0, timeout_s=1.0,
                        pilot=PilotConfig(kind="ui"))
    app = build_app(cfg)
    return TestClient(app), app


def test_healthz(client):
    tc, _ = client
    body = tc.get("/healthz").json()
    assert body["ok"] is True
    assert body["world"] == "obstacle_ccw_nols"


def test_world_payload_first(client):
    tc, _ = client
    with tc.websocket_connect("/ws") as ws:
        world = json.loads(ws.receive_text())
        assert world["type"] == "world"
        assert world["geometry"]["left_hot"] == 0.2
        assert len(world["route"]) > 10
        ws.send_text(json.dumps({"type": "stop"}))
        # drain until the final report
        while True:
            msg = json.loads(ws.receive_text())
            if msg["type"] == "report":
                break


def test_input_round_trip_preserves_quantized_coords(client):
    tc, app = client
    x = 1311 / QUANT
    y = 401 / QUANT
    with tc.websocket_connect("/ws") as ws:
        ws.receive_text()  # world
        # keep sending so at least one tick samples the pointer regardless of
        # scheduling between the test and the gateway loop
        for _ in range(40):
            ws.send_text(json.dumps({"type": "input", "x": x, "y": y,
                                     "click": True}))
            msg = json.loads(ws.receive_text())
            if msg["type"] == "report":
                break
        ws.send_text(json.dumps({"type": "stop"}))
        while msg["type"] != "report":
            msg = json.loads(ws.receive_text())
    record = app.state.last_record
    assert record is not None
    cursor_events = [e for e in record.events if e["type"] == "cursor"]
    matched = [e for e in cursor_events if e["x"] == x and e["y"] == y]
    assert matched, "quantized pointer sample must appear verbatim in the log"
    assert any(e["click"] for e in matched)


def test_snapshot_carries_mode_and_control(client):
    tc, _ = client
    with tc.websocket_connect("/ws") as ws:
        ws.receive_text()
        ws.send_text(json.dumps({"type": "activate"}))
        msg = json.loads(ws.receive_text())
        assert msg["type"] == "snapshot"
        assert msg["mode"] in ("INACTIVE", "TELEOP")
        assert 0.0 <= msg["control"]["steering"] <= 1.0
        assert "lag_ms" in msg
        ws.send_text(json.dumps({"type": "stop"}))
        while json.loads(ws.receive_text())["type"] != "report":
            pass


def test_session_times_out_with_report(client):
    tc, app = client
    with tc.websocket_connect("/ws") as ws:
        ws.receive_text()
        while True:
            msg = json.loads(ws.receive_text())
            if msg["type"] == "report":
                assert msg["outcome"] in ("timeout", "stopped")
                break
    assert app.state.last_record.report["task"] == "obstacle_teledrive"
