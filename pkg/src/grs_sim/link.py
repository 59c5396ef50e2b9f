"""Simulated full-duplex serial line between two endpoints.

The line is a pair of independent unidirectional channels. Each transmit
occupies the channel for one frame time (bytes queue behind each other,
FIFO per direction) and arrives after the frame time plus the propagation
delay. A fault plan can corrupt scheduled frames to exercise receiver
error handling. Every frame is appended to a machine-parseable trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .clock import Scheduler
from .framing import (
    DEFAULT_BAUD,
    FramingError,
    SerialFrame,
    frame_byte,
    unframe_bits,
)


class LinkClosedError(Exception):
    pass


@dataclass(frozen=True)
class FaultRule:
    """Mutation applied to the nth frame (0-based) in one direction.

    kind: "drop-stop" forces the stop bit low, "drop-start" forces the
    start bit high, "flip-bit" inverts data bit `bit` (0..7).
    """

    direction: str           # "a->b" or "b->a"
    frame_index: int
    kind: str
    bit: int = 0

    def apply(self, bits: tuple[int, ...]) -> tuple[int, ...]:
        mutable = list(bits)
        if self.kind == "drop-stop":
            mutable[9] = 0
        elif self.kind == "drop-start":
            mutable[0] = 1
        elif self.kind == "flip-bit":
            mutable[1 + self.bit] ^= 1
        else:
            raise ValueError(f"unknown fault kind {self.kind!r}")
        return tuple(mutable)


@dataclass
class LinkConfig:
    baud: float = DEFAULT_BAUD
    propagation_delay: float = 0.0   # ~150 m of cable is sub-microsecond
    fault_plan: list[FaultRule] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.baud <= 0:
            raise ValueError("baud must be positive")
        if self.propagation_delay < 0:
            raise ValueError("propagation delay cannot be negative")


@dataclass(frozen=True)
class Delivery:
    """What the receiving endpoint observes for one frame."""

    t_sent: float
    t_delivered: float
    direction: str
    bits: tuple[int, ...]
    data: int | None          # None when the frame failed framing checks
    error: str | None         # FramingError kind, if any

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class TraceRecord:
    t_us: int
    direction: str
    byte_hex: str
    bits: str
    verdict: str

    def line(self) -> str:
        return f"{self.t_us:012d} {self.direction} {self.byte_hex} {self.bits} {self.verdict}"


class Endpoint:
    """One side of the link; attach a receiver callback to consume bytes."""

    def __init__(self, link: "SerialLink", side: str):
        self._link = link
        self.side = side
        self.on_receive: Callable[[Delivery], None] | None = None

    def send(self, data: int) -> None:
        self._link.transmit(self.side, data)


class SerialLink:
    def __init__(self, scheduler: Scheduler, cfg: LinkConfig | None = None,
                 name: str = "link"):
        self.scheduler = scheduler
        self.cfg = cfg if cfg is not None else LinkConfig()
        self.name = name
        self.a = Endpoint(self, "a")
        self.b = Endpoint(self, "b")
        self.open = True
        self.trace: list[TraceRecord] = []
        self._frame_counts = {"a->b": 0, "b->a": 0}
        self._channel_free_at = {"a->b": 0.0, "b->a": 0.0}

    @property
    def frame_time(self) -> float:
        return 10.0 / self.cfg.baud

    def close(self) -> None:
        self.open = False

    def transmit(self, side: str, data: int) -> None:
        """Queue one byte; it lands at the far end after frame + propagation."""
        if not self.open:
            raise LinkClosedError(f"{self.name} is closed")
        direction = "a->b" if side == "a" else "b->a"
        frame = frame_byte(data, self.cfg.baud)
        index = self._frame_counts[direction]
        self._frame_counts[direction] = index + 1

        bits = frame.bits
        for rule in self.cfg.fault_plan:
            if rule.direction == direction and rule.frame_index == index:
                bits = rule.apply(bits)

        now = self.scheduler.now
        start = max(now, self._channel_free_at[direction])
        self._channel_free_at[direction] = start + frame.duration
        t_delivered = start + frame.duration + self.cfg.propagation_delay
        self.scheduler.call_at(
            t_delivered, self._deliver, direction, now, t_delivered, bits)

    def _deliver(self, direction: str, t_sent: float, t_delivered: float,
                 bits: tuple[int, ...]) -> None:
        if not self.open:
            return
        try:
            data: int | None = unframe_bits(bits)
            error = None
        except FramingError as exc:
            data = None
            error = exc.kind
        delivery = Delivery(t_sent, t_delivered, direction, bits, data, error)
        self._record(delivery)
        receiver = self.b if direction == "a->b" else self.a
        if receiver.on_receive is not None:
            receiver.on_receive(delivery)

    def _record(self, d: Delivery) -> None:
        self.trace.append(TraceRecord(
            t_us=int(round(d.t_delivered * 1e6)),
            direction=d.direction,
            byte_hex=f"0x{d.data:02x}" if d.data is not None else "0x--",
            bits="".join(str(b) for b in d.bits),
            verdict="ok" if d.ok else d.error or "error",
        ))

    def trace_text(self) -> str:
        return "\n".join(r.line() for r in self.trace) + ("\n" if self.trace else "")


def loopback_pair(scheduler: Scheduler, cfg: LinkConfig | None = None) -> SerialLink:
    """Convenience constructor used by tests."""
    return SerialLink(scheduler, cfg)


def make_frame(data: int, cfg: LinkConfig) -> SerialFrame:
    """Frame a byte with the link's configured baud rate."""
    return frame_byte(data, cfg.baud)
