"""Cross-process teleoperation: serve-vehicle and pilot over real sockets."""

import json
import subprocess
import sys
import time

TCP, UDP = 47810, 47811


def test_serve_vehicle_and_pilot_exchange_frames():
    server = subprocess.Popen(
        [sys.executable, "-m", "teledrive.cli", "serve-vehicle",
         "--tcp-port", str(TCP), "--udp-port", str(UDP),
         "--duration", "4", "--tick-rate", "50"],
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True)
    try:
        # wait for the listener banner
        line = server.stdout.readline()
        assert "vehicle up" in line, line

        pilot = subprocess.run(
            [sys.executable, "-m", "teledrive.cli", "pilot",
             "--tcp-port", str(TCP), "--udp-port", str(UDP),
             "--duration", "2.5", "--tick-rate", "50"],
            capture_output=True, text=True, timeout=30)
        assert pilot.returncode == 0, pilot.stderr

        out, _ = server.communicate(timeout=30)
        assert server.returncode == 0, out
        summary = json.loads(out.strip().splitlines()[-1])
        # the pilot streamed ~125 control frames; the vehicle moved
        assert summary["frames_received"] > 50
        assert summary["final_pose"] != [0.0, -15.0]
    finally:
        if server.poll() is None:
            server.kill()
