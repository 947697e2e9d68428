"""Overlay control law walkthrough.

Shows the exponential hot-zone ramps, the cold-zone steering nudge, and
the click-triggered full-stop brake hold. Saves a ramp plot next to this
script when matplotlib is available.
"""

from pathlib import Path

from teledrive.overlay import (
    ControlState,
    CursorSample,
    OverlayGeometry,
    RampConfig,
    apply_click,
    tick,
    to_vehicle_command,
)

geom = OverlayGeometry()
cfg = RampConfig()
dt = 20.0  # ms per tick

print("== hot-zone ramp: cursor held in the right hot zone ==")
state = ControlState()
trace = [state.steering_cmd]
for k in range(250):
    state = tick(state, CursorSample(x=0.95, y=0.5), geom, cfg, dt)
    trace.append(state.steering_cmd)
for ms in (100, 400, 800, 1600, 3200):
    print(f"  t={ms:5d} ms  steering_cmd = {trace[int(ms / dt)]:.4f}")
print(f"  (time constant tau = {cfg.tau_steer:.0f} ms, limit 1.0)")

print("\n== cold zone: slight proportional steering (teledrive mode) ==")
state = ControlState(cold_steer_enabled=True)
for k in range(100):
    state = tick(state, CursorSample(x=0.55, y=0.5), geom, cfg, dt)
print(f"  2 s at x=0.55 -> steering_cmd = {state.steering_cmd:.4f} "
      f"(rate {cfg.cold_gain}/s at full offset)")

print("\n== click brake: speed pinned to zero for exactly 1 s ==")
state = ControlState(speed_cmd=0.8)
state = apply_click(state, cfg)
t = 0.0
released_at = None
while t < 2000.0:
    state = tick(state, CursorSample(x=0.5, y=0.95), geom, cfg, dt)
    t += dt
    speed = to_vehicle_command(state).speed
    if speed > 0.0 and released_at is None:
        released_at = t
print(f"  click at t=0, cursor held in the top hot zone")
print(f"  speed first exceeds zero at t = {released_at:.0f} ms "
      f"(hold = {cfg.brake_hold:.0f} ms)")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ts = [k * dt / 1000.0 for k in range(len(trace))]
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.plot(ts, trace)
    ax.axhline(1.0, ls="--", c="gray", lw=0.8)
    ax.set_xlabel("time in right hot zone (s)")
    ax.set_ylabel("steering command")
    ax.set_title("first-order exponential approach (tau = 0.8 s)")
    out = Path(__file__).with_suffix(".png")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(f"\nramp plot saved to {out}")
except ImportError:
    pass
