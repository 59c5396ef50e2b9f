"""Bit-level 8N1 framing for the simulated serial line.

A frame is exactly ten logic levels: one start bit (low), eight data bits
least-significant first, one stop bit (high). No parity. The idle line
level is high, so the start bit is always a visible falling edge.
"""

from __future__ import annotations

from dataclasses import dataclass

DEFAULT_BAUD = 9600.0
FRAME_BITS = 10
IDLE_LEVEL = 1


class FramingError(Exception):
    """Start or stop bit missing from a received frame."""

    def __init__(self, kind: str):
        super().__init__(kind)
        self.kind = kind  # "missing-start" or "missing-stop"


@dataclass(frozen=True)
class SerialFrame:
    data: int
    bits: tuple[int, ...]
    bit_duration: float

    @property
    def duration(self) -> float:
        return FRAME_BITS * self.bit_duration

    def bit_string(self) -> str:
        return "".join(str(b) for b in self.bits)


def frame_byte(data: int, baud: float = DEFAULT_BAUD) -> SerialFrame:
    """Frame one byte: start low, 8 data bits LSB-first, stop high."""
    if not 0 <= data <= 0xFF:
        raise ValueError(f"not a byte: {data}")
    if baud <= 0:
        raise ValueError("baud must be positive")
    bits = (0,) + tuple((data >> i) & 1 for i in range(8)) + (1,)
    return SerialFrame(data=data, bits=bits, bit_duration=1.0 / baud)


def unframe_bits(bits: tuple[int, ...] | list[int]) -> int:
    """Recover the byte from ten levels; raises FramingError on bad framing."""
    if len(bits) != FRAME_BITS:
        raise ValueError(f"frame must be {FRAME_BITS} bits, got {len(bits)}")
    if bits[0] != 0:
        raise FramingError("missing-start")
    if bits[9] != 1:
        raise FramingError("missing-stop")
    data = 0
    for i in range(8):
        data |= (bits[1 + i] & 1) << i
    return data


@dataclass(frozen=True)
class WaveTrace:
    """Piecewise-constant level trace of one frame, starting at t=0 where
    the line leaves idle. Points are (time, level) at each transition."""

    points: tuple[tuple[float, int], ...]
    duration: float

    def level_at(self, t: float) -> int:
        level = IDLE_LEVEL
        for start, lvl in self.points:
            if t >= start:
                level = lvl
            else:
                break
        return level

    def segments(self) -> list[tuple[float, float, int]]:
        """(t_start, t_end, level) runs across the frame."""
        out = []
        for i, (start, lvl) in enumerate(self.points):
            end = self.points[i + 1][0] if i + 1 < len(self.points) else self.duration
            out.append((start, end, lvl))
        return out


def render_waveform(frame: SerialFrame) -> WaveTrace:
    """Collapse the ten bit cells into transition points for plotting."""
    points: list[tuple[float, int]] = []
    prev = IDLE_LEVEL
    for i, bit in enumerate(frame.bits):
        if bit != prev:
            points.append((i * frame.bit_duration, bit))
            prev = bit
    return WaveTrace(points=tuple(points), duration=frame.duration)


def waveform_columns(frame: SerialFrame) -> str:
    """Columnar dump: one `time_s level` row per bit cell plus a terminal
    row, directly plottable as a step ("post") plot."""
    lines = ["# time_s level"]
    for i, bit in enumerate(frame.bits):
        lines.append(f"{i * frame.bit_duration:.9f} {bit}")
    lines.append(f"{frame.duration:.9f} {frame.bits[-1]}")
    return "\n".join(lines) + "\n"
