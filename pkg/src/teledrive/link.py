"""Teleoperation link: wire frames, clock sync, lag, and safety supervision.

Control frames travel over a reliable in-order stream (length-prefixed
canonical records); vehicle state and clock probes are single best-effort
datagrams. Clock offset uses the four-timestamp exchange; the supervisor
trips into SAFETY_OVERRIDE on stale state or an operator brake and into
PARKED (absorbing) on EPB engagement.
"""

from __future__ import annotations

import enum
import json
import logging
import statistics
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

logger = logging.getLogger(__name__)

WIRE_VERSION = 1
LENGTH_PREFIX_BYTES = 4


class FrameError(ValueError):
    """Malformed wire data; offset points at the failing byte."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class ControlFrame:
    seq: int
    t_send: float  # ms, sender clock
    steering: float
    speed: float
    brake: bool
    latency_est: float = 0.0  # ms, telemetry only

    def __post_init__(self):
        if not 0 <= self.seq < 2 ** 32:
            raise ValueError("seq must fit in u32")
        for name in ("t_send", "steering", "speed", "latency_est"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or v != v or v in (float("inf"), float("-inf")):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class StateFrame:
    seq: int
    t_send: float  # ms, vehicle clock
    speed: float  # mph
    wheel_angle: float  # deg
    mode: str
    epb: bool

    def __post_init__(self):
        if not 0 <= self.seq < 2 ** 32:
            raise ValueError("seq must fit in u32")


@dataclass(frozen=True)
class ViewportFrame:
    """Pose snapshot streamed with the state flow; the stand-in for the
    study's camera feed, and the carrier for glass-to-glass probing."""
    seq: int
    t_send: float  # ms, vehicle clock (capture time)
    x: float
    y: float
    heading: float
    speed: float  # mph


@dataclass(frozen=True)
class ClockRequest:
    seq: int
    t0: float  # client send, client clock


@dataclass(frozen=True)
class ClockReply:
    seq: int
    t0: float
    t1: float  # server receive, server clock
    t2: float  # server send, server clock


@dataclass(frozen=True)
class ClockProbe:
    """A completed four-timestamp exchange."""
    t0: float
    t1: float
    t2: float
    t3: float  # client receive, client clock

    def __post_init__(self):
        if self.t3 < self.t0:
            raise ValueError("t3 must be >= t0 (same clock)")
        if self.t2 < self.t1:
            raise ValueError("t2 must be >= t1 (same clock)")


# ---------------------------------------------------------------------------
# codec: canonical structured-text records


_FIELD_ORDER = {
    "control": ("seq", "t_send", "steering", "speed", "brake", "latency_est"),
    "state": ("seq", "t_send", "speed", "wheel_angle", "mode", "epb"),
    "viewport": ("seq", "t_send", "x", "y", "heading", "speed"),
    "clock_request": ("seq", "t0"),
    "clock_reply": ("seq", "t0", "t1", "t2"),
}
_TYPES = {
    "control": ControlFrame,
    "state": StateFrame,
    "viewport": ViewportFrame,
    "clock_request": ClockRequest,
    "clock_reply": ClockReply,
}
_TYPE_TAGS = {cls: tag for tag, cls in _TYPES.items()}


def encode_record(frame) -> bytes:
    """Canonical serialization: fixed field order, version first."""
    tag = _TYPE_TAGS.get(type(frame))
    if tag is None:
        raise TypeError(f"cannot encode {type(frame).__name__}")
    fields = _FIELD_ORDER[tag]
    body = {"v": WIRE_VERSION, "type": tag}
    for name in fields:
        body[name] = getattr(frame, name)
    return json.dumps(body, separators=(",", ":")).encode()


def decode_record(data: bytes, offset: int = 0):
    """Parse one record; raises FrameError with an offset on malformed data."""
    try:
        doc = json.loads(data.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        pos = getattr(exc, "pos", getattr(exc, "start", 0))
        raise FrameError(f"malformed record: {exc}", offset + int(pos)) from exc
    if not isinstance(doc, dict):
        raise FrameError("record is not an object", offset)
    if doc.get("v") != WIRE_VERSION:
        raise FrameError(f"unknown wire version {doc.get('v')!r}", offset)
    tag = doc.get("type")
    cls = _TYPES.get(tag)
    if cls is None:
        raise FrameError(f"unknown frame type {tag!r}", offset)
    try:
        return cls(**{name: doc[name] for name in _FIELD_ORDER[tag]})
    except (KeyError, TypeError, ValueError) as exc:
        raise FrameError(f"invalid {tag} frame: {exc}", offset) from exc


def encode_stream(frame) -> bytes:
    """Length-prefixed record for the reliable control stream."""
    record = encode_record(frame)
    return len(record).to_bytes(LENGTH_PREFIX_BYTES, "big") + record


def decode_stream(buffer: bytes, offset: int = 0):
    """Decode one length-prefixed record starting at offset.

    Returns (frame, next_offset). Raises FrameError on truncation or
    malformed content; nothing is emitted for a partial frame.
    """
    if len(buffer) - offset < LENGTH_PREFIX_BYTES:
        raise FrameError("truncated length prefix", offset)
    length = int.from_bytes(buffer[offset:offset + LENGTH_PREFIX_BYTES], "big")
    start = offset + LENGTH_PREFIX_BYTES
    if len(buffer) - start < length:
        raise FrameError("truncated record body", start)
    frame = decode_record(buffer[start:start + length], start)
    return frame, start + length


def encode_datagram(frame) -> bytes:
    """One record per datagram for state/clock flows."""
    return encode_record(frame)


def decode_datagram(data: bytes):
    return decode_record(data)


# ---------------------------------------------------------------------------
# clock synchronization and lag


def estimate_offset(probe: ClockProbe) -> tuple[float, float]:
    """Offset of the server clock relative to the client clock, plus RTT.

    offset = ((t1 - t0) + (t2 - t3)) / 2; rtt = (t3 - t0) - (t2 - t1).
    Exact when forward and return path delays are equal. A negative RTT
    marks a corrupt probe and is rejected.
    """
    offset = ((probe.t1 - probe.t0) + (probe.t2 - probe.t3)) / 2.0
    rtt = (probe.t3 - probe.t0) - (probe.t2 - probe.t1)
    if rtt < 0:
        raise ValueError(f"negative rtt {rtt}: probe discarded")
    return offset, rtt


class OffsetEstimator:
    """Median of the last 8 accepted probes smooths asymmetric-path noise."""

    def __init__(self, window: int = 8):
        self._offsets: deque[float] = deque(maxlen=window)
        self.last_rtt: float | None = None

    def add_probe(self, probe: ClockProbe) -> bool:
        try:
            offset, rtt = estimate_offset(probe)
        except ValueError as exc:
            logger.warning("%s", exc)
            return False
        self._offsets.append(offset)
        self.last_rtt = rtt
        return True

    @property
    def offset(self) -> float:
        if not self._offsets:
            return 0.0
        return statistics.median(self._offsets)

    @property
    def probe_count(self) -> int:
        return len(self._offsets)


def lag_monitor(now: float, last_state_t_send: float, offset: float) -> float:
    """Age of the freshest state frame on the local clock, floored at 0.

    `offset` is the additive correction taking sender timestamps onto the
    local clock (local = sender + offset); with the four-timestamp estimate
    of the sender clock relative to ours, that correction is its negation.
    """
    return max(0.0, now - (last_state_t_send + offset))


def glass_to_glass(source_t: float, display_t: float, offset: float = 0.0) -> float:
    """Latency from capture at the source to display: display_time minus the
    source timestamp expressed on the display clock (source + offset)."""
    return display_t - (source_t + offset)


# ---------------------------------------------------------------------------
# safety supervisor


class SafetyMode(str, enum.Enum):
    INACTIVE = "INACTIVE"
    TELEOP = "TELEOP"
    SAFETY_OVERRIDE = "SAFETY_OVERRIDE"
    PARKED = "PARKED"


@dataclass(frozen=True)
class SafetyState:
    mode: SafetyMode = SafetyMode.INACTIVE
    lag_threshold: float = 1500.0  # ms; intervention band is 1-2 s
    last_state_frame_age: float = 0.0

    def __post_init__(self):
        if not 1000.0 <= self.lag_threshold <= 2000.0:
            raise ValueError("lag threshold must be within 1000-2000 ms")


@dataclass(frozen=True)
class SupervisorInputs:
    lag: float = 0.0  # ms
    epb: bool = False
    activation_msg: bool = False
    operator_brake: bool = False


def safety_step(state: SafetyState, inputs: SupervisorInputs) -> SafetyState:
    """One supervisor tick; a total function over all mode/input pairs.

    EPB engagement parks from any mode and absorbs until a fresh activation
    message; teleoperation only ever starts via the activation message;
    excessive lag or the safety driver's brake suspends remote control until
    the condition clears.
    """
    mode = state.mode
    if inputs.epb:
        mode = SafetyMode.PARKED
    elif mode in (SafetyMode.INACTIVE, SafetyMode.PARKED):
        if inputs.activation_msg:
            mode = SafetyMode.TELEOP
    elif mode is SafetyMode.TELEOP:
        if inputs.lag > state.lag_threshold or inputs.operator_brake:
            mode = SafetyMode.SAFETY_OVERRIDE
    elif mode is SafetyMode.SAFETY_OVERRIDE:
        if inputs.lag <= state.lag_threshold and not inputs.operator_brake:
            mode = SafetyMode.TELEOP
    return replace(state, mode=mode, last_state_frame_age=inputs.lag)


def commands_enabled(state: SafetyState) -> bool:
    """Remote commands reach the vehicle only in TELEOP."""
    return state.mode is SafetyMode.TELEOP


# ---------------------------------------------------------------------------
# simulated channels (deterministic, simulated-time)


@dataclass(frozen=True)
class LinkConfig:
    control_delay_ms: float = 0.0
    state_delay_ms: float = 0.0
    state_jitter_ms: float = 0.0
    state_loss: float = 0.0
    clock_delay_ms: float = 0.0
    clock_jitter_ms: float = 0.0
    clock_loss: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("state_loss", "clock_loss"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")


class ReliableChannel:
    """In-order lossless delivery with per-message delay (stream semantics:
    a delayed message also delays everything after it)."""

    def __init__(self, delay_ms: float = 0.0):
        self.delay_ms = delay_ms
        self._queue: deque[tuple[float, object]] = deque()
        self._last_delivery = -float("inf")

    def send(self, t_ms: float, payload):
        deliver = max(t_ms + self.delay_ms, self._last_delivery)
        self._last_delivery = deliver
        self._queue.append((deliver, payload))

    def poll(self, t_ms: float) -> list:
        out = []
        while self._queue and self._queue[0][0] <= t_ms:
            out.append(self._queue.popleft()[1])
        return out


class DatagramChannel:
    """Best-effort delivery: seeded loss and delay jitter, reordering allowed."""

    def __init__(self, delay_ms: float = 0.0, jitter_ms: float = 0.0,
                 loss: float = 0.0, rng: np.random.Generator | None = None):
        self.delay_ms = delay_ms
        self.jitter_ms = jitter_ms
        self.loss = loss
        self._rng = rng if rng is not None else np.random.default_rng(0)
        self._pending: list[tuple[float, int, object]] = []
        self._counter = 0

    def send(self, t_ms: float, payload):
        if self.loss > 0.0 and self._rng.random() < self.loss:
            return
        jitter = self._rng.uniform(0.0, self.jitter_ms) if self.jitter_ms > 0 else 0.0
        deliver = t_ms + self.delay_ms + jitter
        self._pending.append((deliver, self._counter, payload))
        self._counter += 1

    def poll(self, t_ms: float) -> list:
        ready = [p for p in self._pending if p[0] <= t_ms]
        if not ready:
            return []
        self._pending = [p for p in self._pending if p[0] > t_ms]
        ready.sort()
        return [payload for _, _, payload in ready]


def link_channels(config: LinkConfig) -> tuple[ReliableChannel, DatagramChannel, DatagramChannel]:
    """The three flows of the teleoperation link: reliable control stream,
    best-effort state datagrams, best-effort clock datagrams."""
    rng = np.random.default_rng(config.seed)
    control = ReliableChannel(config.control_delay_ms)
    state = DatagramChannel(config.state_delay_ms, config.state_jitter_ms,
                            config.state_loss, rng)
    clock = DatagramChannel(config.clock_delay_ms, config.clock_jitter_ms,
                            config.clock_loss, rng)
    return control, state, clock
