"""Simulated Bluetooth serial link with seeded fault injection.

Each direction is an independent byte pipe. A send() enqueues the whole
byte block with a delivery time of now + base latency + a uniform jitter
draw; the block may instead be dropped outright (drop_probability) or
silently discarded inside a disconnect window. Loss granularity is the
send call -- a stalling serial link loses whole writes, not single bytes.

Every direction draws from its own pseudo-random stream split off the
link seed, so traffic on one direction never perturbs the other, and a
fixed seed replays an identical delivery schedule.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from random import Random


class LinkConfigError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class LinkConfig:
    base_latency_ms: float = 0.0
    jitter_ms: float = 0.0
    drop_probability: float = 0.0
    disconnect_windows: tuple[tuple[float, float], ...] = ()
    seed: int | None = None  # None: inherit the scenario seed

    def __post_init__(self) -> None:
        if self.base_latency_ms < 0 or self.jitter_ms < 0:
            raise LinkConfigError("latency and jitter must be >= 0")
        if not 0.0 <= self.drop_probability < 1.0:
            raise LinkConfigError("drop_probability must be in [0, 1)")
        prev_end = None
        for start, end in self.disconnect_windows:
            if end <= start:
                raise LinkConfigError(f"empty disconnect window ({start}, {end})")
            if prev_end is not None and start < prev_end:
                raise LinkConfigError("disconnect windows must be ordered and non-overlapping")
            prev_end = end

    def to_dict(self) -> dict:
        return {
            "base_latency_ms": self.base_latency_ms,
            "jitter_ms": self.jitter_ms,
            "drop_probability": self.drop_probability,
            "disconnect_windows": [list(w) for w in self.disconnect_windows],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinkConfig":
        seed = d.get("seed")
        return cls(
            base_latency_ms=float(d.get("base_latency_ms", 0.0)),
            jitter_ms=float(d.get("jitter_ms", 0.0)),
            drop_probability=float(d.get("drop_probability", 0.0)),
            disconnect_windows=tuple(
                (float(s), float(e)) for s, e in d.get("disconnect_windows", [])
            ),
            seed=None if seed is None else int(seed),
        )


class SimLink:
    """One direction of the simulated serial link."""

    def __init__(self, config: LinkConfig, direction: str, seed: int | None = None):
        self.config = config
        effective = config.seed if config.seed is not None else (seed or 0)
        self._rng = Random(f"{effective}:{direction}")
        self._queue: list[tuple[float, int, bytes]] = []
        self._seq = 0
        self.sent_blocks = 0
        self.dropped_blocks = 0
        self.delivered_blocks = 0

    def _disconnected(self, now: float) -> bool:
        return any(start <= now < end for start, end in self.config.disconnect_windows)

    def send(self, data: bytes, now: float) -> None:
        """Enqueue a byte block at simulation time now (seconds)."""
        self.sent_blocks += 1
        if self._disconnected(now):
            self.dropped_blocks += 1
            return
        if self.config.drop_probability > 0.0 and self._rng.random() < self.config.drop_probability:
            self.dropped_blocks += 1
            return
        delay = self.config.base_latency_ms / 1000.0
        if self.config.jitter_ms > 0.0:
            delay += self._rng.uniform(0.0, self.config.jitter_ms / 1000.0)
        heapq.heappush(self._queue, (now + delay, self._seq, data))
        self._seq += 1

    def poll(self, now: float) -> bytes:
        """All bytes due by now, in delivery order (FIFO among ties)."""
        out = bytearray()
        while self._queue and self._queue[0][0] <= now:
            _, _, data = heapq.heappop(self._queue)
            self.delivered_blocks += 1
            out.extend(data)
        return bytes(out)

    @property
    def pending_blocks(self) -> int:
        return len(self._queue)


class DuplexLink:
    """App <-> device pair sharing one config; disconnects cut both ways."""

    def __init__(self, config: LinkConfig, seed: int | None = None):
        self.config = config
        self.app_to_dev = SimLink(config, "app_to_dev", seed)
        self.dev_to_app = SimLink(config, "dev_to_app", seed)
