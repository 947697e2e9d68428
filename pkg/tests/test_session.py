"""Session orchestration: determinism, replay, safety paths, RT tasks."""

import json

import pytest

from teledrive.link import LinkConfig
from teledrive.session import (
    ConfigError,
    PilotConfig,
    ReplayMismatch,
    RunRecord,
    SessionConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    replay,
    run_session,
)

FAST = dict(task="obstacle_teledrive", world="obstacle_ccw_nols", seed=1)


@pytest.fixture(scope="module")
def obstacle_record():
    return run_session(SessionConfig(**FAST))


class TestDrivingSession:
    def test_scripted_pilot_perfect_obstacle_run(self, obstacle_record):
        r = obstacle_record.report
        assert r["outcome"] == "completed"
        assert r["score"] == 1.0
        assert r["C"] == 1.0
        assert r["N_c"] == r["N_l"] == r["N_s"] == 0.0

    def test_byte_identical_reruns(self, obstacle_record):
        again = run_session(SessionConfig(**FAST))
        assert again.to_bytes() == obstacle_record.to_bytes()

    def test_record_save_load_round_trip(self, obstacle_record, tmp_path):
        path = tmp_path / "run.jsonl"
        obstacle_record.save(path)
        loaded = RunRecord.load(path)
        assert loaded.config == obstacle_record.config
        assert loaded.events == obstacle_record.events
        assert loaded.report == obstacle_record.report

    def test_replay_reproduces_report(self, obstacle_record):
        copy = RunRecord.from_bytes(obstacle_record.to_bytes())
        assert replay(copy) == obstacle_record.report

    def test_tampered_event_detected(self, obstacle_record):
        rec = RunRecord.from_bytes(obstacle_record.to_bytes())
        for ev in rec.events:
            if ev["type"] == "vehicle" and ev["t"] > 30_000:
                ev["y"] += 25.0
                break
        with pytest.raises(ReplayMismatch):
            replay(rec)

    def test_truncated_log_flagged(self, obstacle_record):
        rec = RunRecord.from_bytes(obstacle_record.to_bytes())
        rec.events = rec.events[: len(rec.events) // 2]
        with pytest.raises(ReplayMismatch):
            replay(rec)

    def test_missing_report_flagged(self, obstacle_record):
        rec = RunRecord.from_bytes(obstacle_record.to_bytes())
        rec.report = {}
        with pytest.raises(ReplayMismatch, match="report"):
            replay(rec)


class TestSafetyIntegration:
    def test_lossy_state_link_still_completes(self):
        cfg = SessionConfig(**FAST, link=LinkConfig(state_loss=0.4,
                                                    state_jitter_ms=40.0, seed=9))
        report = run_session(cfg).report
        assert report["outcome"] == "completed"

    def test_control_delay_triggers_override(self):
        cfg = SessionConfig(task="obstacle_teledrive", world="obstacle_ccw_nols",
                            seed=5, timeout_s=30,
                            link=LinkConfig(control_delay_ms=2000.0))
        record = run_session(cfg)
        modes = [e["mode"] for e in record.events if e["type"] == "mode"]
        assert "SAFETY_OVERRIDE" in modes
        assert record.report["outcome"] != "completed"

    def test_epb_parks_and_ends_run(self):
        cfg = SessionConfig(task="obstacle_teledrive", world="obstacle_ccw_nols",
                            seed=6, epb_at_ms=5000.0, timeout_s=60)
        record = run_session(cfg)
        assert record.report["outcome"] == "parked"
        modes = [e["mode"] for e in record.events if e["type"] == "mode"]
        assert modes[-1] == "PARKED"

    def test_operator_brake_window_pauses_teleop(self):
        cfg = SessionConfig(task="obstacle_teledrive", world="obstacle_ccw_nols",
                            seed=7, operator_brake_ms=((4000.0, 8000.0),),
                            timeout_s=20)
        record = run_session(cfg)
        modes = [e["mode"] for e in record.events if e["type"] == "mode"]
        assert "SAFETY_OVERRIDE" in modes
        assert modes.count("TELEOP") >= 2  # resumed after the window


class TestDecoderPilotSession:
    def test_decoder_pilot_completes_with_high_score(self):
        cfg = SessionConfig(task="obstacle_teledrive", world="obstacle_ccw_nols",
                            seed=2, pilot=PilotConfig(kind="decoder", snr=10.0),
                            timeout_s=400)
        report = run_session(cfg).report
        assert report["outcome"] == "completed"
        assert report["score"] >= 0.9


class TestRTSessions:
    def test_simple_rt_deterministic_and_replayable(self):
        cfg = SessionConfig(task="simple_rt", seed=11,
                            pilot=PilotConfig(latency_mean=280.0, latency_sd=60.0,
                                              fp_rate=0.1, fn_rate=0.05))
        rec = run_session(cfg)
        assert rec.report["trials"] == 50
        assert run_session(cfg).to_bytes() == rec.to_bytes()
        assert replay(RunRecord.from_bytes(rec.to_bytes())) == rec.report

    def test_braking_rt_reports_collisions(self):
        cfg = SessionConfig(task="braking_rt", seed=3,
                            pilot=PilotConfig(latency_mean=300.0, fn_rate=0.2))
        rec = run_session(cfg)
        assert rec.report["trials"] == 40
        assert rec.report["collisions"] >= 1  # misses collide
        assert replay(RunRecord.from_bytes(rec.to_bytes())) == rec.report

    def test_rt_click_tamper_detected(self):
        cfg = SessionConfig(task="simple_rt", seed=11,
                            pilot=PilotConfig(latency_mean=280.0))
        rec = RunRecord.from_bytes(run_session(cfg).to_bytes())
        for ev in rec.events:
            if ev["type"] == "click":
                ev["rel"] += 500.0
                break
        with pytest.raises(ReplayMismatch):
            replay(rec)


class TestConfig:
    def test_round_trips_through_dict(self):
        cfg = SessionConfig(task="town_drive", seed=4,
                            pilot=PilotConfig(kind="decoder", snr=5.0))
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_task_defaults_speed_cap(self):
        assert SessionConfig(task="town_drive").vehicle.speed_cap == 5.0
        assert SessionConfig(task="obstacle_teledrive").vehicle.speed_cap == 4.0

    def test_unknown_task_rejected(self):
        with pytest.raises(ConfigError):
            SessionConfig(task="flying")

    def test_load_config_validates_world_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"task": "obstacle_teledrive",
                                    "world": "/nonexistent/world.json"}))
        with pytest.raises(ConfigError, match="world file"):
            load_config(path)

    def test_load_config_rejects_bad_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_cold_steer_enabled_only_for_teledrive(self):
        assert SessionConfig(task="obstacle_teledrive").cold_steer
        assert SessionConfig(task="mcity_teledrive").cold_steer
        assert not SessionConfig(task="town_drive").cold_steer
