"""Teleoperation link internals.

Clock offset from the four-timestamp exchange, lag-driven safety
supervision, and the effect of datagram impairments versus the reliable
control stream.
"""

import numpy as np

from teledrive.link import (
    ClockProbe,
    LinkConfig,
    OffsetEstimator,
    SafetyMode,
    SafetyState,
    SupervisorInputs,
    estimate_offset,
    lag_monitor,
    link_channels,
    safety_step,
)

print("== four-timestamp clock offset ==")
true_offset, delay = 350.0, 42.0
probe = ClockProbe(t0=1000.0, t1=1000.0 + delay + true_offset,
                   t2=1010.0 + delay + true_offset, t3=1010.0 + 2 * delay)
offset, rtt = estimate_offset(probe)
print(f"  symmetric {delay:.0f} ms path, true offset {true_offset:.0f} ms "
      f"-> estimate {offset:.1f} ms (exact), rtt {rtt:.1f} ms")

est = OffsetEstimator()
rng = np.random.default_rng(0)
for _ in range(8):
    d_fwd = rng.uniform(20, 60)
    d_back = rng.uniform(20, 60)
    t0 = float(rng.uniform(0, 1e5))
    est.add_probe(ClockProbe(t0, t0 + d_fwd + true_offset,
                             t0 + d_fwd + true_offset + 5.0,
                             t0 + d_fwd + d_back + 5.0))
print(f"  asymmetric jittery paths, median of 8 probes -> "
      f"{est.offset:.1f} ms (true {true_offset:.0f})")

print("\n== lag monitor and safety supervisor ==")
state = SafetyState()
timeline = [
    ("activation message", SupervisorInputs(activation_msg=True)),
    ("nominal traffic, 80 ms lag", SupervisorInputs(lag=80.0)),
    ("stalled link, 2000 ms lag", SupervisorInputs(lag=2000.0)),
    ("link recovers, 120 ms lag", SupervisorInputs(lag=120.0)),
    ("safety driver holds the brake", SupervisorInputs(operator_brake=True)),
    ("brake released", SupervisorInputs()),
    ("EPB engaged", SupervisorInputs(epb=True)),
    ("more frames arrive", SupervisorInputs(lag=10.0)),
    ("activation message again", SupervisorInputs(activation_msg=True)),
]
for label, inputs in timeline:
    state = safety_step(state, inputs)
    print(f"  {label:<34} -> {state.mode.value}")
assert state.mode is SafetyMode.TELEOP

print("\n== impaired datagrams vs the reliable control stream ==")
control, state_ch, _ = link_channels(LinkConfig(state_loss=0.5,
                                                state_jitter_ms=80.0, seed=3))
for i in range(200):
    control.send(float(i), i)
    state_ch.send(float(i), i)
delivered = state_ch.poll(1e9)
stream = control.poll(1e9)
print(f"  state datagrams delivered: {len(delivered)}/200 "
      f"(50% injected loss), order scrambled: {delivered != sorted(delivered)}")
print(f"  control stream: {len(stream)}/200, in order and gap-free: "
      f"{stream == list(range(200))}")

print("\n== staleness math ==")
print(f"  lag_monitor(now=1500, t_send=400, offset=100) = "
      f"{lag_monitor(1500.0, 400.0, 100.0):.0f} ms")
