"""Framed binary protocol for the device <-> app serial link.

Frame layout, byte-exact:

    [0xAA SOF] [type] [len] [payload ... len bytes] [checksum]

checksum = XOR of the type byte, the length byte, and every payload byte.
Payloads are at most 32 bytes, so a frame is at most 36 bytes. Integers
on the wire are big-endian; temperatures travel as signed 16-bit
centi-degrees, battery voltage as unsigned 16-bit millivolts.

The stream decoder scans for the SOF, validates type, length, and
checksum, and resynchronises after a bad frame by discarding through the
offending SOF byte. The XOR checksum catches every single-bit corruption
of a frame at its own alignment; a corrupted or noisy stream can still
contain byte runs that happen to form a checksum-valid frame, and such
alignments decode as frames. For uniform random noise the acceptance
probability is (1/256)(7/256)(33/256)(1/256) ~ 5e-8 per byte position
(SOF, known type, plausible length, matching checksum).
"""

from __future__ import annotations

import hmac
from dataclasses import dataclass
from enum import IntEnum

SOF = 0xAA
MAX_PAYLOAD = 32
HEADER_LEN = 3  # SOF + type + len
FRAME_OVERHEAD = 4  # header + checksum
MAX_FRAME = MAX_PAYLOAD + FRAME_OVERHEAD

MAX_PASSWORD_BYTES = 16

TELEMETRY_PAYLOAD_LEN = 10


class ProtocolError(ValueError):
    """Frame construction violated the wire contract."""


class FrameType(IntEnum):
    AUTH_REQ = 0x01
    AUTH_ACK = 0x02
    SET_LEVEL = 0x03
    TELEMETRY = 0x04
    HEARTBEAT = 0x05
    FAULT_EVT = 0x06
    ACK = 0x07


_VALID_TYPES = frozenset(t.value for t in FrameType)

AUTH_OK = 0x00
AUTH_FAIL = 0x01


@dataclass(frozen=True, slots=True)
class Frame:
    frame_type: FrameType
    payload: bytes = b""


def checksum(frame_type: int, payload: bytes) -> int:
    ck = frame_type ^ len(payload)
    for b in payload:
        ck ^= b
    return ck


def encode_frame(frame: Frame) -> bytes:
    if len(frame.payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload too long: {len(frame.payload)} > {MAX_PAYLOAD}")
    t = int(frame.frame_type)
    if t not in _VALID_TYPES:
        raise ProtocolError(f"unknown frame type {t:#x}")
    return bytes([SOF, t, len(frame.payload)]) + frame.payload + bytes(
        [checksum(t, frame.payload)]
    )


@dataclass
class DecodeStats:
    """Non-fatal decode error counters, cumulative for a StreamDecoder."""

    checksum_errors: int = 0
    type_errors: int = 0
    length_errors: int = 0
    junk_bytes: int = 0

    @property
    def total_errors(self) -> int:
        return self.checksum_errors + self.type_errors + self.length_errors


class StreamDecoder:
    """Incremental frame scanner with bounded memory.

    Junk before a SOF is discarded, so the internal buffer never holds
    more than one frame's worth of undecided bytes (< 36).
    """

    def __init__(self) -> None:
        self._buf = bytearray()
        self.stats = DecodeStats()

    def feed(self, data: bytes) -> list[Frame]:
        self._buf.extend(data)
        frames: list[Frame] = []
        buf = self._buf
        while True:
            start = buf.find(SOF)
            if start < 0:
                self.stats.junk_bytes += len(buf)
                buf.clear()
                return frames
            if start > 0:
                self.stats.junk_bytes += start
                del buf[:start]
            if len(buf) < HEADER_LEN:
                return frames  # incomplete header, wait for more bytes
            ftype = buf[1]
            if ftype not in _VALID_TYPES:
                self.stats.type_errors += 1
                del buf[:1]
                continue
            length = buf[2]
            if length > MAX_PAYLOAD:
                self.stats.length_errors += 1
                del buf[:1]
                continue
            total = FRAME_OVERHEAD + length
            if len(buf) < total:
                return frames  # incomplete frame, wait for more bytes
            payload = bytes(buf[HEADER_LEN : HEADER_LEN + length])
            if buf[total - 1] != checksum(ftype, payload):
                self.stats.checksum_errors += 1
                del buf[:1]  # discard through the bad SOF, rescan
                continue
            frames.append(Frame(FrameType(ftype), payload))
            del buf[:total]

    @property
    def pending(self) -> bytes:
        return bytes(self._buf)


def decode_stream(buffer: bytes) -> tuple[list[Frame], bytes, DecodeStats]:
    """One-shot decode: (complete frames, unconsumed tail, error counters)."""
    dec = StreamDecoder()
    frames = dec.feed(buffer)
    return frames, dec.pending, dec.stats


# ---------------------------------------------------------------------------
# Typed payloads


def make_auth(password: str) -> Frame:
    """AUTH_REQ carrying the pairing password in clear (HC-05 style secret)."""
    raw = password.encode("utf-8")
    if not 1 <= len(raw) <= MAX_PASSWORD_BYTES:
        raise ProtocolError(
            f"password must be 1..{MAX_PASSWORD_BYTES} UTF-8 bytes, got {len(raw)}"
        )
    return Frame(FrameType.AUTH_REQ, raw)


def verify_auth(frame: Frame, stored_password: str) -> bool:
    """Constant-content comparison; any mismatch or wrong length rejects."""
    if frame.frame_type is not FrameType.AUTH_REQ or not frame.payload:
        return False
    return hmac.compare_digest(frame.payload, stored_password.encode("utf-8"))


def make_auth_ack(ok: bool) -> Frame:
    return Frame(FrameType.AUTH_ACK, bytes([AUTH_OK if ok else AUTH_FAIL]))


def make_set_level(level: int) -> Frame:
    if not 0 <= level <= 3:
        raise ProtocolError(f"level byte must be 0..3, got {level}")
    return Frame(FrameType.SET_LEVEL, bytes([level]))


def make_heartbeat() -> Frame:
    return Frame(FrameType.HEARTBEAT)


def make_fault(code: int) -> Frame:
    return Frame(FrameType.FAULT_EVT, bytes([code & 0xFF]))


def make_ack(acked: FrameType) -> Frame:
    return Frame(FrameType.ACK, bytes([int(acked)]))


@dataclass(frozen=True, slots=True)
class TelemetryPayload:
    """1 Hz device report: three zone temps, pack voltage, mode, fault.

    Temps are exact at 0.01 degC over [-327.68, 327.67]; values outside
    clamp to the int16 rails.
    """

    zone_temps: tuple[float, float, float]
    battery_millivolts: int
    mode: int
    fault_flags: int


def _centi(t: float) -> int:
    return min(max(round(t * 100.0), -32768), 32767)


def make_telemetry(payload: TelemetryPayload) -> Frame:
    raw = b"".join(
        _centi(t).to_bytes(2, "big", signed=True) for t in payload.zone_temps
    )
    raw += min(max(payload.battery_millivolts, 0), 0xFFFF).to_bytes(2, "big")
    raw += bytes([payload.mode & 0xFF, payload.fault_flags & 0xFF])
    return Frame(FrameType.TELEMETRY, raw)


def parse_telemetry(frame: Frame) -> TelemetryPayload:
    if frame.frame_type is not FrameType.TELEMETRY:
        raise ProtocolError(f"not a telemetry frame: {frame.frame_type!r}")
    raw = frame.payload
    if len(raw) != TELEMETRY_PAYLOAD_LEN:
        raise ProtocolError(f"telemetry payload must be {TELEMETRY_PAYLOAD_LEN} bytes")
    temps = tuple(
        int.from_bytes(raw[i : i + 2], "big", signed=True) / 100.0 for i in (0, 2, 4)
    )
    return TelemetryPayload(
        zone_temps=temps,  # type: ignore[arg-type]
        battery_millivolts=int.from_bytes(raw[6:8], "big"),
        mode=raw[8],
        fault_flags=raw[9],
    )
