"""Closed-loop obstacle-course sessions.

Runs one scripted-pilot loop and one decoded-intent loop on the same
course, prints the infraction reports, verifies the records replay
exactly, and draws the driven trajectory over the world when matplotlib
is available.
"""

from pathlib import Path

from teledrive.session import (
    PilotConfig,
    RunRecord,
    SessionConfig,
    replay,
    run_session,
)
from teledrive.worlds import build_world


def describe(record):
    r = record.report
    print(f"  outcome={r['outcome']}  C={r['C']:.3f}  "
          f"N_c={r['N_c']:g} N_l={r['N_l']:g} N_s={r['N_s']:g}  "
          f"score={r['score']:.4f}  ({r['duration_ms'] / 1000.0:.1f} s simulated)")


print("== scripted pilot, counterclockwise loop with lane switch ==")
cfg = SessionConfig(task="obstacle_teledrive", world="obstacle_ccw_ls", seed=1)
scripted = run_session(cfg)
describe(scripted)

print("== decoded-intent pilot at SNR 10, same course ==")
cfg_dec = SessionConfig(task="obstacle_teledrive", world="obstacle_ccw_ls", seed=1,
                        pilot=PilotConfig(kind="decoder", snr=10.0), timeout_s=400)
decoded = run_session(cfg_dec)
describe(decoded)

out = Path(__file__).parent / "obstacle_run.jsonl"
scripted.save(out)
verified = replay(RunRecord.load(out))
print(f"\nrecord saved to {out}; replay reproduced the report exactly: "
      f"{verified == scripted.report}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    world = build_world("obstacle_ccw_ls")
    fig, ax = plt.subplots(figsize=(7, 4.2))
    route = world.route.waypoints
    ax.plot(route[:, 0], route[:, 1], "g--", lw=1, label="route")
    for lane in world.lanes:
        ax.plot(lane.centerline[:, 0], lane.centerline[:, 1], c="0.8", lw=6,
                zorder=0)
    for obstacle in world.obstacles:
        poly = obstacle.polygon
        ax.fill(poly[:, 0], poly[:, 1], "firebrick", alpha=0.6)
    for label, record, color in (("scripted", scripted, "C0"),
                                 ("decoded", decoded, "C1")):
        xs = [e["x"] for e in record.events if e["type"] == "vehicle"]
        ys = [e["y"] for e in record.events if e["type"] == "vehicle"]
        ax.plot(xs, ys, color, lw=1.2, label=label)
    sign = world.stop_signs[0]
    ax.plot(*zip(*sign.line), "r-", lw=2, label="stop line")
    ax.set_aspect("equal")
    ax.legend(loc="center")
    ax.set_title("obstacle course: driven trajectories")
    png = Path(__file__).with_suffix(".png")
    fig.tight_layout()
    fig.savefig(png, dpi=120)
    print(f"trajectory plot saved to {png}")
except ImportError:
    pass
