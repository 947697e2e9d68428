"""Braking-trial timing law.

The trial gives the operator a 3 s reaction budget: the vehicle cruises at
5 mph, an unbraked run hits the obstacle at 5.0 s, and a full stop takes
2.0 s of constant braking, so the brake must begin by 3.0 s.
"""

from teledrive.vehicle import run_brake_trial, spawn_brake_trial

spec = spawn_brake_trial()
print(f"trial: {spec.speed:.0f} mph, time-to-collision {spec.ttc:.1f} s, "
      f"brake-to-stop {spec.brake_stop:.1f} s, "
      f"reaction budget {spec.reaction_budget:.1f} s")
print(f"(displayed obstacle distance {spec.displayed_distance:.0f} m is "
      "cosmetic; the timing law governs)\n")

print(f"{'brake onset (s)':>16} {'outcome':>12} {'event time (s)':>15}")
for onset in (None, 0.5, 1.0, 2.0, 2.9, 3.0, 3.1, 3.2, 4.0, 6.0):
    result = run_brake_trial(spec, onset, dt=0.02)
    label = "collision" if result.collision else "stopped"
    onset_str = "none" if onset is None else f"{onset:.1f}"
    print(f"{onset_str:>16} {label:>12} {result.event_time:>15.2f}")
