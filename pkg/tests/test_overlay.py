"""Hot-zone ramp law, cold-zone steering, and click brake hold."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from teledrive.overlay import (
    CommandTriple,
    ControlState,
    CursorSample,
    OverlayGeometry,
    RampConfig,
    apply_click,
    tick,
    to_vehicle_command,
)

GEOM = OverlayGeometry()
CFG = RampConfig()

RIGHT = CursorSample(x=0.95, y=0.5)
LEFT = CursorSample(x=0.05, y=0.5)
TOP = CursorSample(x=0.5, y=0.95)
BOTTOM = CursorSample(x=0.5, y=0.05)
CENTER = CursorSample(x=0.5, y=0.5)


class TestGeometry:
    def test_zone_classification(self):
        assert GEOM.steer_zone(0.05) == "left"
        assert GEOM.steer_zone(0.95) == "right"
        assert GEOM.steer_zone(0.5) == "cold"
        assert GEOM.steer_zone(0.3) == "neutral"
        assert GEOM.speed_zone(0.95) == "top"
        assert GEOM.speed_zone(0.05) == "bottom"
        assert GEOM.speed_zone(0.5) == "neutral"

    def test_overlapping_zones_rejected(self):
        with pytest.raises(ValueError):
            OverlayGeometry(left_hot=0.5, cold_half_width=0.1)
        with pytest.raises(ValueError):
            OverlayGeometry(top_hot=0.6, bottom_hot=0.5)


class TestSteeringRamp:
    def test_gap_halving(self):
        # dt such that 1 - exp(-dt/tau) = 0.5 halves the distance to the limit
        dt = CFG.tau_steer * math.log(2.0)
        s1 = tick(ControlState(), RIGHT, GEOM, CFG, dt)
        assert s1.steering_cmd == pytest.approx(0.75, abs=1e-12)

    def test_left_zone_symmetric(self):
        dt = CFG.tau_steer * math.log(2.0)
        s1 = tick(ControlState(), LEFT, GEOM, CFG, dt)
        assert s1.steering_cmd == pytest.approx(0.25, abs=1e-12)

    def test_cold_center_no_change(self):
        state = ControlState(steering_cmd=0.37, cold_steer_enabled=True)
        for dt in (1.0, 20.0, 500.0):
            assert tick(state, CENTER, GEOM, CFG, dt).steering_cmd == 0.37

    def test_cold_zone_proportional_drift(self):
        state = ControlState(cold_steer_enabled=True)
        cursor = CursorSample(x=0.55, y=0.5)  # inside cold zone, offset +0.05
        out = tick(state, cursor, GEOM, CFG, dt=100.0)
        assert out.steering_cmd == pytest.approx(0.5 + 0.1 * 0.05 * 0.1, abs=1e-12)

    def test_cold_zone_disabled_outside_teledrive(self):
        state = ControlState(cold_steer_enabled=False)
        cursor = CursorSample(x=0.55, y=0.5)
        assert tick(state, cursor, GEOM, CFG, dt=100.0).steering_cmd == 0.5

    def test_neutral_gap_holds(self):
        state = ControlState(steering_cmd=0.8)
        cursor = CursorSample(x=0.3, y=0.5)
        assert tick(state, cursor, GEOM, CFG, dt=200.0).steering_cmd == 0.8

    def test_exponential_residual_law_over_ticks(self):
        # |limit - value| should shrink exactly as exp(-t/tau) tick by tick
        state = ControlState()
        dt, n = 20.0, 1000
        for k in range(1, n + 1):
            state = tick(state, RIGHT, GEOM, CFG, dt)
            expected = 0.5 * math.exp(-k * dt / CFG.tau_steer)
            assert abs((1.0 - state.steering_cmd) - expected) < 1e-9


class TestSpeedRamp:
    def test_top_zone_ramps_up_bottom_down(self):
        dt = CFG.tau_speed * math.log(2.0)
        up = tick(ControlState(speed_cmd=0.0), TOP, GEOM, CFG, dt)
        assert up.speed_cmd == pytest.approx(0.5, abs=1e-12)
        down = tick(ControlState(speed_cmd=0.8), BOTTOM, GEOM, CFG, dt)
        assert down.speed_cmd == pytest.approx(0.4, abs=1e-12)

    def test_between_zones_holds(self):
        state = ControlState(speed_cmd=0.42)
        assert tick(state, CENTER, GEOM, CFG, dt=300.0).speed_cmd == 0.42


class TestClickBrake:
    def test_click_zeroes_speed_and_arms_hold(self):
        state = apply_click(ControlState(speed_cmd=0.9), CFG)
        assert state.speed_cmd == 0.0
        assert state.brake_hold_remaining == 1000.0

    def test_hold_dominates_ramp(self):
        state = ControlState(speed_cmd=0.3, brake_hold_remaining=400.0)
        out = tick(state, TOP, GEOM, CFG, dt=100.0)
        assert out.speed_cmd == 0.0
        assert out.brake_hold_remaining == 300.0

    def test_hold_not_elapsed_at_999ms(self):
        state = apply_click(ControlState(speed_cmd=0.9), CFG)
        for _ in range(999):
            state = tick(state, TOP, GEOM, CFG, dt=1.0)
        assert state.speed_cmd == 0.0

    def test_ramp_resumes_after_hold(self):
        state = apply_click(ControlState(speed_cmd=0.9), CFG)
        out = tick(state, TOP, GEOM, CFG, dt=1001.0)
        assert out.brake_hold_remaining == 0.0
        assert out.speed_cmd > 0.0
        # only the 1 ms past the hold end ramps
        assert out.speed_cmd == pytest.approx(1.0 - math.exp(-1.0 / CFG.tau_speed), abs=1e-12)

    def test_hold_length_independent_of_tick_schedule(self):
        # zero emitted speed for exactly brake_hold ms of accumulated dt
        for dt in (1.0, 7.0, 33.0, 250.0):
            state = apply_click(ControlState(speed_cmd=1.0), CFG)
            elapsed = 0.0
            while elapsed + dt <= CFG.brake_hold:
                state = tick(state, TOP, GEOM, CFG, dt)
                elapsed += dt
                assert to_vehicle_command(state).speed == 0.0
            state = tick(state, TOP, GEOM, CFG, dt)
            leftover = elapsed + dt - CFG.brake_hold
            assert state.speed_cmd == pytest.approx(
                1.0 - math.exp(-leftover / CFG.tau_speed), abs=1e-12)

    def test_click_in_sample_applies_immediately(self):
        state = ControlState(speed_cmd=0.7)
        out = tick(state, CursorSample(x=0.5, y=0.95, click=True), GEOM, CFG, dt=20.0)
        assert out.speed_cmd == 0.0
        assert out.brake_hold_remaining == CFG.brake_hold

    def test_steering_unaffected_by_hold(self):
        state = ControlState(steering_cmd=0.5, brake_hold_remaining=500.0)
        out = tick(state, RIGHT, GEOM, CFG, dt=100.0)
        assert out.steering_cmd > 0.5


class TestVehicleCommand:
    def test_neutral_projection(self):
        assert to_vehicle_command(ControlState(0.5, 0.0)) == CommandTriple(0.5, 0.0, False)

    def test_hold_zeroes_speed_and_sets_brake(self):
        state = ControlState(1.0, 1.0, brake_hold_remaining=500.0)
        assert to_vehicle_command(state) == CommandTriple(1.0, 0.0, True)

    @given(steer=st.floats(0, 1), speed=st.floats(0, 1), hold=st.floats(0, 2000))
    def test_triple_stays_in_unit_ranges(self, steer, speed, hold):
        cmd = to_vehicle_command(ControlState(steer, speed, hold))
        assert 0.0 <= cmd.steering <= 1.0
        assert 0.0 <= cmd.speed <= 1.0


class TestRejection:
    def test_nonfinite_sample_leaves_state_unchanged(self, caplog):
        state = ControlState(0.6, 0.4, 0.0)
        bad = CursorSample(x=float("nan"), y=0.5)
        with caplog.at_level("WARNING"):
            out = tick(state, bad, GEOM, CFG, dt=50.0)
        assert out == state
        assert any("non-finite" in r.message for r in caplog.records)

    def test_out_of_range_sample_clamped(self):
        s = CursorSample(x=1.3, y=-0.2)
        assert s.x == 1.0
        assert s.y == 0.0

    def test_nonpositive_dt_rejected(self):
        with pytest.raises(ValueError):
            tick(ControlState(), CENTER, GEOM, CFG, dt=0.0)


@settings(max_examples=200)
@given(
    xs=st.lists(st.floats(-0.5, 1.5), min_size=1, max_size=50),
    ys=st.lists(st.floats(-0.5, 1.5), min_size=1, max_size=50),
    clicks=st.lists(st.booleans(), min_size=1, max_size=50),
    dt=st.floats(0.1, 400.0),
)
def test_commands_never_leave_unit_interval(xs, ys, clicks, dt):
    state = ControlState(cold_steer_enabled=True)
    for x, y, click in zip(xs, ys, clicks):
        state = tick(state, CursorSample(x=x, y=y, click=click), GEOM, CFG, dt)
        assert 0.0 <= state.steering_cmd <= 1.0
        assert 0.0 <= state.speed_cmd <= 1.0
        assert state.brake_hold_remaining >= 0.0


def test_determinism_bitwise():
    def run():
        state = ControlState(cold_steer_enabled=True)
        trace = []
        for i in range(500):
            x = 0.5 + 0.6 * math.sin(i * 0.13)
            y = 0.5 + 0.6 * math.cos(i * 0.07)
            state = tick(state, CursorSample(x=x, y=y, click=(i % 97 == 0)), GEOM, CFG, 20.0)
            trace.append((state.steering_cmd, state.speed_cmd, state.brake_hold_remaining))
        return trace

    assert run() == run()
