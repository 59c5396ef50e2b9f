"""Single-character control protocol between gateway and controller node.

Each supervisor command and each input-signal edge is one ASCII byte on
the line: commands actuate output signals, status bytes report input
edges. Four assignments are fixed by the original installation and every
generated codebook must reproduce them:

    'a' (97)  start command        'y' (121) pump-overload asserted
    'b' (98)  stop command         'z' (122) pump-running asserted

The rest of the codebook is generated deterministically from the signal
map. Push buttons get a single momentary byte. Selector switches and the
emergency stop are latching: the lowercase byte latches the output high,
its partner (uppercase, or the next free character for non-letters)
latches it low. Input signals get an asserted byte plus a cleared partner
so indicator lamps can be driven edge-wise with no polling.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from enum import Enum

from .signal_map import Direction, Kind, SignalDef, SignalMap

ANCHOR_START = ord("a")
ANCHOR_STOP = ord("b")
ANCHOR_PUMP_OVERLOAD = ord("y")
ANCHOR_PUMP_RUNNING = ord("z")

# Deterministic assignment pool. Uppercase letters are excluded: they are
# reserved as clear/cleared partners of lowercase assignments.
_POOL = string.ascii_lowercase + string.digits + "!$%&'()*+,-./:;<=>?@[]^_`{|}~"


class Pulse(Enum):
    MOMENTARY = "momentary"
    LATCHING = "latching"


class Edge(Enum):
    ASSERTED = "asserted"
    CLEARED = "cleared"


class CodecError(Exception):
    pass


class UnknownActionError(CodecError):
    pass


class UnknownSignalError(CodecError):
    pass


class AlphabetExhaustedError(CodecError):
    pass


@dataclass(frozen=True)
class CommandCode:
    char: int
    signal: SignalDef
    pulse: Pulse
    level: bool | None = None    # latching: True=set, False=clear; momentary: None


@dataclass(frozen=True)
class StatusCode:
    char: int
    signal: SignalDef
    edge: Edge


class Codebook:
    def __init__(self, commands: list[CommandCode], statuses: list[StatusCode]):
        self.commands: dict[int, CommandCode] = {c.char: c for c in commands}
        self.statuses: dict[int, StatusCode] = {s.char: s for s in statuses}
        if len(self.commands) != len(commands) or len(self.statuses) != len(statuses):
            raise CodecError("duplicate character assignment")
        overlap = set(self.commands) & set(self.statuses)
        if overlap:
            raise CodecError(f"alphabets overlap on {sorted(map(chr, overlap))}")
        self._cmd_by_signal: dict[tuple[str, bool | None], int] = {
            (c.signal.description, c.level): c.char for c in commands
        }
        self._status_by_signal: dict[tuple[str, Edge], int] = {
            (s.signal.description, s.edge): s.char for s in statuses
        }

    # -- commands ----------------------------------------------------------
    def encode_command(self, action: SignalDef | str, level: bool = True) -> int:
        """Byte for an output action. `level` picks set/clear on latching
        actions and is ignored for momentary ones."""
        name = action.description if isinstance(action, SignalDef) else action
        char = self._cmd_by_signal.get((name, None))
        if char is not None:
            return char
        char = self._cmd_by_signal.get((name, level))
        if char is None:
            raise UnknownActionError(f"no command byte for {name!r}")
        return char

    def decode_command(self, byte: int) -> CommandCode | None:
        """Matching command, or None: unknown bytes are ignored, not errors."""
        return self.commands.get(byte)

    # -- statuses ----------------------------------------------------------
    def encode_status(self, signal: SignalDef | str, edge: Edge) -> int:
        name = signal.description if isinstance(signal, SignalDef) else signal
        char = self._status_by_signal.get((name, edge))
        if char is None:
            raise UnknownSignalError(f"no status byte for {name!r} {edge.value}")
        return char

    def decode_status(self, byte: int) -> StatusCode | None:
        return self.statuses.get(byte)

    # -- reporting ---------------------------------------------------------
    def dump_rows(self) -> list[tuple[str, int, str, str, str]]:
        """(char, decimal, binary, role, signal) rows; the four fixed
        assignments come first, then commands, then statuses."""
        anchors = [ANCHOR_START, ANCHOR_STOP, ANCHOR_PUMP_OVERLOAD, ANCHOR_PUMP_RUNNING]

        def row(char: int) -> tuple[str, int, str, str, str]:
            if char in self.commands:
                c = self.commands[char]
                role = "command"
                detail = c.signal.description
                if c.pulse is Pulse.LATCHING:
                    detail += " (set)" if c.level else " (clear)"
            else:
                s = self.statuses[char]
                role = "status"
                detail = f"{s.signal.description} ({s.edge.value})"
            return (chr(char), char, format(char, "b"), role, detail)

        ordered = [c for c in anchors if c in self.commands or c in self.statuses]
        for char in sorted(self.commands):
            if char not in ordered:
                ordered.append(char)
        for char in sorted(self.statuses):
            if char not in ordered:
                ordered.append(char)
        return [row(c) for c in ordered]

    def dump_text(self) -> str:
        lines = ["char decimal binary  role     signal"]
        for char, dec, binary, role, detail in self.dump_rows():
            lines.append(f"{char:4s} {dec:7d} {binary:7s} {role:8s} {detail}")
        return "\n".join(lines) + "\n"


def _partner_char(char: int, pool: "_Pool") -> int:
    ch = chr(char)
    if ch in string.ascii_lowercase:
        return ord(ch.upper())
    return pool.take()


class _Pool:
    def __init__(self, reserved: set[int]):
        self._chars = [ord(c) for c in _POOL if ord(c) not in reserved]
        self._i = 0

    def take(self) -> int:
        if self._i >= len(self._chars):
            raise AlphabetExhaustedError("signal map too large for one-byte protocol")
        char = self._chars[self._i]
        self._i += 1
        return char


def generate_codebook(smap: SignalMap) -> Codebook:
    """Deterministic codebook for a signal map.

    Entries that pin a character keep it; everything else draws from the
    pool in map order, commands first (so the default map yields commands
    'a'..'k' and statuses 'l'..'x' around the fixed 'y'/'z').
    """
    pinned = {e.proto_char for e in smap.entries if e.proto_char is not None}
    pool = _Pool(reserved=pinned)

    actuators = (Kind.PUSH_BUTTON, Kind.SELECTOR_SWITCH, Kind.EMERGENCY_STOP)
    commands: list[CommandCode] = []
    for sig in smap.entries:
        if sig.direction is not Direction.DIGITAL_OUT or sig.kind not in actuators:
            continue
        char = sig.proto_char if sig.proto_char is not None else pool.take()
        if sig.kind in (Kind.SELECTOR_SWITCH, Kind.EMERGENCY_STOP):
            commands.append(CommandCode(char, sig, Pulse.LATCHING, level=True))
            commands.append(
                CommandCode(_partner_char(char, pool), sig, Pulse.LATCHING, level=False))
        else:
            commands.append(CommandCode(char, sig, Pulse.MOMENTARY))

    statuses: list[StatusCode] = []
    for sig in smap.entries:
        if sig.kind is not Kind.INDICATOR:
            continue
        char = sig.proto_char if sig.proto_char is not None else pool.take()
        statuses.append(StatusCode(char, sig, Edge.ASSERTED))
        statuses.append(StatusCode(_partner_char(char, pool), sig, Edge.CLEARED))

    return Codebook(commands, statuses)
