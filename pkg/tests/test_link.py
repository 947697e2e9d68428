"""Wire codec laws, clock-offset estimation, lag, supervisor, channels."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from teledrive.link import (
    ClockProbe,
    ClockReply,
    ClockRequest,
    ControlFrame,
    DatagramChannel,
    FrameError,
    LinkConfig,
    OffsetEstimator,
    ReliableChannel,
    SafetyMode,
    SafetyState,
    StateFrame,
    SupervisorInputs,
    commands_enabled,
    decode_datagram,
    decode_stream,
    encode_datagram,
    encode_stream,
    estimate_offset,
    glass_to_glass,
    lag_monitor,
    link_channels,
    safety_step,
)

GOLDEN_FRAME = ControlFrame(seq=1, t_send=0.0, steering=0.5, speed=0.0,
                            brake=False, latency_est=0.0)


def random_control(rng) -> ControlFrame:
    return ControlFrame(
        seq=int(rng.integers(0, 2 ** 32)),
        t_send=float(np.round(rng.uniform(0, 1e7), 6)),
        steering=float(rng.random()),
        speed=float(rng.random()),
        brake=bool(rng.integers(0, 2)),
        latency_est=float(np.round(rng.uniform(0, 5000), 6)),
    )


def random_state(rng) -> StateFrame:
    return StateFrame(
        seq=int(rng.integers(0, 2 ** 32)),
        t_send=float(np.round(rng.uniform(0, 1e7), 6)),
        speed=float(rng.uniform(0, 5)),
        wheel_angle=float(rng.uniform(-601.5, 601.5)),
        mode=str(rng.choice(["TELEOP", "SAFETY_OVERRIDE", "PARKED"])),
        epb=bool(rng.integers(0, 2)),
    )


class TestCodec:
    def test_round_trip_control_corpus(self):
        rng = np.random.default_rng(0)
        for _ in range(2000):
            frame = random_control(rng)
            decoded, consumed = decode_stream(encode_stream(frame))
            assert decoded == frame
            assert consumed == len(encode_stream(frame))

    def test_round_trip_datagram_corpus(self):
        rng = np.random.default_rng(1)
        for _ in range(2000):
            frame = random_state(rng)
            assert decode_datagram(encode_datagram(frame)) == frame
        for _ in range(200):
            req = ClockRequest(int(rng.integers(0, 1000)), float(rng.uniform(0, 1e6)))
            assert decode_datagram(encode_datagram(req)) == req
            rep = ClockReply(req.seq, req.t0, req.t0 + 5.0, req.t0 + 6.0)
            assert decode_datagram(encode_datagram(rep)) == rep

    def test_golden_frame_bytes(self, request):
        golden_path = request.path.parent / "data" / "golden_control_frame.bin"
        assert encode_stream(GOLDEN_FRAME) == golden_path.read_bytes()

    def test_encode_is_deterministic(self):
        assert encode_stream(GOLDEN_FRAME) == encode_stream(GOLDEN_FRAME)

    def test_truncated_buffer_raises_no_partial_frame(self):
        data = encode_stream(GOLDEN_FRAME)
        for cut in (0, 2, LENGTH := 4, len(data) - 1):
            with pytest.raises(FrameError) as err:
                decode_stream(data[:cut])
            assert err.value.offset <= cut

    def test_stream_parsing_consumes_back_to_back_frames(self):
        rng = np.random.default_rng(2)
        frames = [random_control(rng) for _ in range(10)]
        buffer = b"".join(encode_stream(f) for f in frames)
        offset, out = 0, []
        while offset < len(buffer):
            frame, offset = decode_stream(buffer, offset)
            out.append(frame)
        assert out == frames

    def test_unknown_version_rejected(self):
        raw = encode_datagram(GOLDEN_FRAME).replace(b'"v":1', b'"v":9')
        with pytest.raises(FrameError, match="version"):
            decode_datagram(raw)

    def test_malformed_bytes_offset(self):
        with pytest.raises(FrameError):
            decode_datagram(b"{not json")

    def test_unknown_type_rejected(self):
        raw = encode_datagram(GOLDEN_FRAME).replace(b'"control"', b'"mystery"')
        with pytest.raises(FrameError, match="type"):
            decode_datagram(raw)


class TestClockOffset:
    @given(theta=st.floats(-5e5, 5e5), d=st.floats(1e-3, 1e4),
           t0=st.floats(0, 1e6), turnaround=st.floats(0, 100))
    def test_exact_under_symmetric_delay(self, theta, d, t0, turnaround):
        t1 = t0 + d + theta
        t2 = t1 + turnaround
        t3 = t2 + d - theta
        offset, rtt = estimate_offset(ClockProbe(t0, t1, t2, t3))
        assert offset == pytest.approx(theta, abs=1e-6)
        assert rtt == pytest.approx(2 * d, abs=1e-6)

    def test_equal_clocks_symmetric_10ms(self):
        probe = ClockProbe(t0=0.0, t1=10.0, t2=10.0, t3=20.0)
        offset, rtt = estimate_offset(probe)
        assert offset == 0.0
        assert rtt == 20.0

    def test_asymmetry_biases_by_half(self):
        # forward 10 ms, return 30 ms, true offset 0
        probe = ClockProbe(t0=0.0, t1=10.0, t2=10.0, t3=40.0)
        offset, rtt = estimate_offset(probe)
        assert offset == pytest.approx(-10.0)
        assert rtt == pytest.approx(40.0)

    def test_negative_rtt_discarded(self):
        bad = ClockProbe(t0=0.0, t1=100.0, t2=200.0, t3=50.0)
        with pytest.raises(ValueError, match="discarded"):
            estimate_offset(bad)
        est = OffsetEstimator()
        assert not est.add_probe(bad)
        assert est.probe_count == 0

    def test_median_of_window(self):
        est = OffsetEstimator()
        for theta in (5.0, 5.0, 5.0, 100.0):  # one outlier from asymmetry
            est.add_probe(ClockProbe(0.0, 10.0 + theta, 10.0 + theta, 20.0))
        assert est.offset == 5.0


class TestLag:
    def test_zero_case(self):
        assert lag_monitor(now=1000.0, last_state_t_send=1000.0, offset=0.0) == 0.0

    def test_synthetic_timeline_fixtures(self):
        # frame stamped 400 on a sender 100 ahead of us: local send time 500
        assert lag_monitor(now=1500.0, last_state_t_send=400.0, offset=100.0) == 1000.0
        assert lag_monitor(now=700.0, last_state_t_send=650.0, offset=0.0) == 50.0
        assert lag_monitor(now=100.0, last_state_t_send=400.0, offset=0.0) == 0.0

    def test_offset_correction_identity(self):
        uncorrected = lag_monitor(2000.0, 1200.0, 0.0)
        corrected = lag_monitor(2000.0, 1200.0, 300.0)
        assert corrected == uncorrected - 300.0

    def test_glass_to_glass(self):
        assert glass_to_glass(0.0, 0.0) == 0.0
        assert glass_to_glass(1000.0, 1600.0) == 600.0
        # additive composition over two stages
        a = glass_to_glass(0.0, 250.0)
        b = glass_to_glass(250.0, 600.0)
        assert a + b == glass_to_glass(0.0, 600.0)


class TestSupervisor:
    def test_lag_trips_override_in_one_tick(self):
        s = SafetyState(mode=SafetyMode.TELEOP)
        out = safety_step(s, SupervisorInputs(lag=2000.0))
        assert out.mode is SafetyMode.SAFETY_OVERRIDE

    def test_epb_parks_from_any_mode(self):
        for mode in SafetyMode:
            out = safety_step(SafetyState(mode=mode), SupervisorInputs(epb=True))
            assert out.mode is SafetyMode.PARKED

    def test_parked_absorbs_until_activation(self):
        s = SafetyState(mode=SafetyMode.PARKED)
        assert safety_step(s, SupervisorInputs()).mode is SafetyMode.PARKED
        assert safety_step(s, SupervisorInputs(lag=5000.0)).mode is SafetyMode.PARKED
        out = safety_step(s, SupervisorInputs(activation_msg=True))
        assert out.mode is SafetyMode.TELEOP

    def test_inactive_requires_activation(self):
        s = SafetyState()
        assert safety_step(s, SupervisorInputs()).mode is SafetyMode.INACTIVE
        assert not commands_enabled(s)
        out = safety_step(s, SupervisorInputs(activation_msg=True))
        assert out.mode is SafetyMode.TELEOP
        assert commands_enabled(out)

    def test_override_clears_when_condition_clears(self):
        s = SafetyState(mode=SafetyMode.SAFETY_OVERRIDE)
        still = safety_step(s, SupervisorInputs(lag=1800.0))
        assert still.mode is SafetyMode.SAFETY_OVERRIDE
        back = safety_step(s, SupervisorInputs(lag=100.0))
        assert back.mode is SafetyMode.TELEOP

    def test_operator_brake_overrides(self):
        s = SafetyState(mode=SafetyMode.TELEOP)
        assert safety_step(s, SupervisorInputs(operator_brake=True)).mode \
            is SafetyMode.SAFETY_OVERRIDE

    def test_threshold_range_validated(self):
        with pytest.raises(ValueError):
            SafetyState(lag_threshold=500.0)
        SafetyState(lag_threshold=1000.0)
        SafetyState(lag_threshold=2000.0)

    @settings(max_examples=200)
    @given(st.lists(st.tuples(st.floats(0, 4000), st.booleans(), st.booleans(),
                              st.booleans()), min_size=1, max_size=40))
    def test_commands_only_in_teleop(self, steps):
        s = SafetyState()
        for lag, epb, act, brake in steps:
            s = safety_step(s, SupervisorInputs(lag, epb, act, brake))
            if commands_enabled(s):
                assert s.mode is SafetyMode.TELEOP


class TestChannels:
    def test_reliable_in_order_gap_free_under_state_loss(self):
        control, state, _ = link_channels(LinkConfig(state_loss=0.5, seed=3))
        for i in range(500):
            t = float(i)
            control.send(t, i)
            state.send(t, i)
        received = control.poll(1e9)
        assert received == list(range(500))
        delivered_states = state.poll(1e9)
        assert 0 < len(delivered_states) < 500  # lossy but functional

    def test_reliable_delay_preserves_order(self):
        ch = ReliableChannel(delay_ms=100.0)
        ch.send(0.0, "a")
        ch.send(1.0, "b")
        assert ch.poll(50.0) == []
        assert ch.poll(100.0) == ["a"]
        assert ch.poll(101.0) == ["b"]

    def test_datagram_loss_rate_statistics(self):
        ch = DatagramChannel(loss=0.3, rng=np.random.default_rng(7))
        n = 10_000
        for i in range(n):
            ch.send(0.0, i)
        got = len(ch.poll(1.0))
        assert got == pytest.approx(n * 0.7, rel=0.05)

    def test_datagram_jitter_can_reorder(self):
        ch = DatagramChannel(delay_ms=5.0, jitter_ms=50.0,
                             rng=np.random.default_rng(11))
        for i in range(50):
            ch.send(float(i), i)
        out = ch.poll(1e6)
        assert sorted(out) == list(range(50))
        assert out != list(range(50))

    def test_channels_deterministic_for_seed(self):
        def run():
            _, state, _ = link_channels(LinkConfig(state_loss=0.4,
                                                   state_jitter_ms=30.0, seed=9))
            for i in range(200):
                state.send(float(i), i)
            return state.poll(1e9)

        assert run() == run()
