"""Socket endpoints for cross-process teleoperation on a real network.

The vehicle side listens on TCP for the reliable control stream and serves
state frames plus clock replies over one UDP socket; the operator side
connects, streams control frames, probes the clock, and consumes state
frames. Frame payloads reuse the canonical wire codec.
"""

from __future__ import annotations

import logging
import socket
import threading
import time
from collections import deque

from teledrive.link import (
    ClockProbe,
    ClockReply,
    ClockRequest,
    ControlFrame,
    FrameError,
    OffsetEstimator,
    StateFrame,
    ViewportFrame,
    decode_datagram,
    decode_stream,
    encode_datagram,
    encode_stream,
)

logger = logging.getLogger(__name__)


def _now_ms() -> float:
    return time.monotonic() * 1000.0


class VehicleEndpoint:
    """Vehicle-side server: control in (TCP), state and clock out (UDP)."""

    def __init__(self, host: str = "127.0.0.1", tcp_port: int = 0,
                 udp_port: int = 0, clock=_now_ms):
        self._clock = clock
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((host, tcp_port))
        self._listener.listen(1)
        self._udp = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._udp.bind((host, udp_port))
        self._udp.settimeout(0.05)
        self._listener.settimeout(0.2)
        self.tcp_port = self._listener.getsockname()[1]
        self.udp_port = self._udp.getsockname()[1]
        self._control: deque[ControlFrame] = deque()
        self._client_addr = None
        self._state_seq = 0
        self._running = False
        self._threads: list[threading.Thread] = []

    def start(self):
        self._running = True
        for target in (self._accept_loop, self._udp_loop):
            t = threading.Thread(target=target, daemon=True)
            t.start()
            self._threads.append(t)

    def _accept_loop(self):
        buffer = b""
        conn = None
        while self._running:
            if conn is None:
                try:
                    conn, _ = self._listener.accept()
                    conn.settimeout(0.05)
                except socket.timeout:
                    continue
                except OSError:
                    break
            try:
                chunk = conn.recv(4096)
            except socket.timeout:
                continue
            except OSError:
                break
            if not chunk:
                conn.close()
                conn, buffer = None, b""
                continue
            buffer += chunk
            while True:
                try:
                    frame, consumed = decode_stream(buffer)
                except FrameError:
                    break  # wait for more bytes
                buffer = buffer[consumed:]
                if isinstance(frame, ControlFrame):
                    self._control.append(frame)
        if conn is not None:
            conn.close()

    def _udp_loop(self):
        while self._running:
            try:
                data, addr = self._udp.recvfrom(4096)
            except socket.timeout:
                continue
            except OSError:
                break
            t1 = self._clock()
            self._client_addr = addr
            try:
                msg = decode_datagram(data)
            except FrameError as exc:
                logger.warning("bad datagram: %s", exc)
                continue
            if isinstance(msg, ClockRequest):
                reply = ClockReply(msg.seq, msg.t0, t1, self._clock())
                try:
                    self._udp.sendto(encode_datagram(reply), addr)
                except OSError:
                    pass

    def poll_control(self) -> list[ControlFrame]:
        out = []
        while self._control:
            out.append(self._control.popleft())
        return out

    def send_state(self, speed: float, wheel_angle: float, mode: str,
                   epb: bool) -> bool:
        """Best-effort state frame to the last seen client; False if no
        client has probed yet."""
        if self._client_addr is None:
            return False
        frame = StateFrame(self._state_seq, self._clock(), speed,
                           wheel_angle, mode, epb)
        self._state_seq = (self._state_seq + 1) % 2 ** 32
        try:
            self._udp.sendto(encode_datagram(frame), self._client_addr)
        except OSError:
            return False
        return True

    def send_viewport(self, x: float, y: float, heading: float,
                      speed: float) -> bool:
        """Pose snapshot (the video substitute) to the last seen client."""
        if self._client_addr is None:
            return False
        frame = ViewportFrame(self._state_seq, self._clock(), x, y, heading, speed)
        self._state_seq = (self._state_seq + 1) % 2 ** 32
        try:
            self._udp.sendto(encode_datagram(frame), self._client_addr)
        except OSError:
            return False
        return True

    def stop(self):
        self._running = False
        for t in self._threads:
            t.join(timeout=1.0)
        self._listener.close()
        self._udp.close()


class OperatorEndpoint:
    """Operator-side client: control out (TCP), state and clock in (UDP)."""

    def __init__(self, host: str, tcp_port: int, udp_port: int, clock=_now_ms):
        self._clock = clock
        self._host = host
        self._udp_target = (host, udp_port)
        self._tcp = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._tcp.connect((host, tcp_port))
        self._udp = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._udp.bind(("0.0.0.0", 0))
        self._udp.settimeout(0.05)
        self._seq = 0
        self._probe_seq = 0
        self._pending_probes: dict[int, float] = {}
        self.estimator = OffsetEstimator()
        self.last_state: StateFrame | None = None
        self.last_viewport: ViewportFrame | None = None
        self._running = True
        self._thread = threading.Thread(target=self._udp_loop, daemon=True)
        self._thread.start()

    def send_control(self, steering: float, speed: float, brake: bool,
                     latency_est: float = 0.0):
        frame = ControlFrame(self._seq, self._clock(), steering, speed,
                             brake, latency_est)
        self._seq = (self._seq + 1) % 2 ** 32
        self._tcp.sendall(encode_stream(frame))

    def send_clock_probe(self):
        req = ClockRequest(self._probe_seq, self._clock())
        self._pending_probes[self._probe_seq] = req.t0
        self._probe_seq = (self._probe_seq + 1) % 2 ** 32
        self._udp.sendto(encode_datagram(req), self._udp_target)

    def _udp_loop(self):
        while self._running:
            try:
                data, _ = self._udp.recvfrom(4096)
            except socket.timeout:
                continue
            except OSError:
                break
            t3 = self._clock()
            try:
                msg = decode_datagram(data)
            except FrameError as exc:
                logger.warning("bad datagram: %s", exc)
                continue
            if isinstance(msg, StateFrame):
                if self.last_state is None or msg.seq >= self.last_state.seq:
                    self.last_state = msg
            elif isinstance(msg, ViewportFrame):
                if self.last_viewport is None or msg.seq >= self.last_viewport.seq:
                    self.last_viewport = msg
            elif isinstance(msg, ClockReply):
                t0 = self._pending_probes.pop(msg.seq, None)
                if t0 is not None:
                    self.estimator.add_probe(ClockProbe(t0, msg.t1, msg.t2, t3))

    @property
    def offset(self) -> float:
        """Vehicle clock relative to ours (median of recent probes)."""
        return self.estimator.offset

    def stop(self):
        self._running = False
        self._thread.join(timeout=1.0)
        self._tcp.close()
        self._udp.close()
