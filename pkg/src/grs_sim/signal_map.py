"""Panel signal registry: signals, controller pins, colors and roles.

Single source of truth for the association between the 30 panel signals,
the controller's port pins, the indicator lamp colors and the protocol
characters. Everything else in the package (codec, plant, firmware,
gateway, UI) keys off this map. The map is immutable after construction
and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Iterator

MAP_FORMAT_VERSION = "1"


class Port(Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"


@dataclass(frozen=True, order=True)
class PinId:
    """One controller pin, e.g. RA0. Ports A..E, index 0..7."""

    port: Port
    index: int

    def __post_init__(self) -> None:
        if not 0 <= self.index <= 7:
            raise ValueError(f"pin index out of range: {self.index}")

    def __str__(self) -> str:
        return f"R{self.port.value}{self.index}"

    @classmethod
    def parse(cls, text: str) -> "PinId":
        text = text.strip().upper()
        if len(text) != 3 or text[0] != "R" or text[1] not in "ABCDE" or not text[2].isdigit():
            raise ValueError(f"not a pin name: {text!r}")
        return cls(Port(text[1]), int(text[2]))


class Direction(Enum):
    DIGITAL_IN = "Digital in"
    DIGITAL_OUT = "Digital out"


class Kind(Enum):
    INDICATOR = "indicator"
    PUSH_BUTTON = "pushbutton"
    SELECTOR_SWITCH = "selector"
    EMERGENCY_STOP = "estop"
    DEVICE = "device"        # pinless plant devices carried as metadata
    RESERVED = "reserved"    # wired but unassigned output pins


class Color(Enum):
    GREEN = "green"
    RED = "red"
    YELLOW = "yellow"
    NONE = "none"


class FaultClass(Enum):
    """Red indicators split into hard trips and non-tripping alarms."""

    TRIP = "trip"
    ALARM = "alarm"
    NONE = "none"


@dataclass(frozen=True)
class SignalDef:
    signal_no: str                 # identification number, e.g. "4A"
    pin: PinId | None
    label: str                     # panel component label, e.g. "LED4A"
    indication: str                # annunciator legend, e.g. "Fault", "Run OK"
    direction: Direction
    kind: Kind
    color: Color
    description: str               # canonical signal name used everywhere
    tag: str = ""                  # device tag, e.g. "H11", "S2"
    fault_class: FaultClass = FaultClass.NONE
    proto_char: int | None = None  # pinned protocol character, if any

    def __str__(self) -> str:
        return f"{self.description} ({self.pin or 'no pin'})"


# Pin ranges the two signal directions are allowed to occupy.
INPUT_PINS = tuple(
    [PinId(Port.A, i) for i in range(6)]
    + [PinId(Port.B, i) for i in range(8)]
    + [PinId(Port.E, 0)]
)
OUTPUT_PINS = tuple(
    [PinId(Port.C, i) for i in range(8)] + [PinId(Port.D, i) for i in range(7)]
)

# Canonical signal names referenced by the plant, gateway and tests.
PUMP_OVERLOAD = "CIRCULATION PUMP OVERLOAD"
PUMP_IN_OPERATION = "CIRCULATION PUMP IN OPERATION"
IGNITION_GAS = "IGNITION GAS"
LEAKAGE_ALARM = "LEAKAGE ALARM GAS VALVE AA005"
BURNER_MOTOR_OVERLOAD = "BURNER MOTOR OVERLOAD"
BURNER_START = "BURNER START"
BURNER_DISTURB = "BURNER DISTURB"
BURNER_IN_OPERATION = "BURNER IN OPERATION"
LEVEL_ALARM_LOW = "LSA-00EKT21CL081"
PRESSURE_ALARM_LOW = "PSA-00EKT21CP083"
PRESSURE_ALARM_HIGH = "PSA+00EKT21CP082"
SAFETY_CIRCUIT = "SAFETY CIRCUIT BURNER CONTROL"
LOW_GAS_PRESSURE = "LOW GAS PRESSURE"
TEMP_SWITCH_HIGH_HIGH = "TS+00EKT21CT081"
TEMP_ALARM_HIGH_HIGH = "TA+00EKT21CT082"

SELECTOR_LOCAL_REMOTE = "SELECTOR SWITCH LOCAL/REMOTE"
BURNER_START_BUTTON = "BURNER START LOCAL"
BURNER_STOP_BUTTON = "BURNER STOP LOCAL"
RESET_BUTTON = "RESET BURNER CONTROL"
BURNER_OP_LOCAL_REMOTE = "BURNER OPERATION LOCAL REMOTE"
TEST_FLAME_DETECTOR = "TEST FLAME DETECTOR"
BURNER_OPERATION_MODE = "BURNER OPERATION MODE"
ALARM_RECEIPT = "ALARM RECEIPT"
TEST_TEMP_ALARM = "TEST TA+00EKT21CT082"
LAMP_TEST = "LAMP TEST"
EMERGENCY_STOP = "EMERGENCY STOP"


class MapError(Exception):
    pass


@dataclass(frozen=True)
class Violation:
    rule: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.rule}] {self.subject}: {self.message}"


class SignalMap:
    """Ordered, immutable collection of signal definitions."""

    def __init__(self, entries: Iterable[SignalDef], version: str = MAP_FORMAT_VERSION):
        self.entries: tuple[SignalDef, ...] = tuple(entries)
        self.version = version
        self._by_pin = {e.pin: e for e in self.entries if e.pin is not None}
        self._by_description = {e.description: e for e in self.entries}

    def __iter__(self) -> Iterator[SignalDef]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SignalMap):
            return NotImplemented
        return self.entries == other.entries and self.version == other.version

    def lookup_by_pin(self, pin: PinId) -> SignalDef | None:
        """Entry on that pin, or None for reserved and unused pins."""
        entry = self._by_pin.get(pin)
        if entry is None or entry.kind is Kind.RESERVED:
            return None
        return entry

    def find(self, description: str) -> SignalDef:
        try:
            return self._by_description[description]
        except KeyError:
            raise MapError(f"no signal named {description!r}") from None

    def get(self, description: str) -> SignalDef | None:
        return self._by_description.get(description)

    def inputs(self) -> tuple[SignalDef, ...]:
        """The pinned digital inputs, in map order."""
        return tuple(
            e for e in self.entries
            if e.direction is Direction.DIGITAL_IN and e.pin is not None
        )

    def outputs(self) -> tuple[SignalDef, ...]:
        """The pinned, non-reserved digital outputs, in map order."""
        return tuple(
            e for e in self.entries
            if e.direction is Direction.DIGITAL_OUT
            and e.pin is not None
            and e.kind is not Kind.RESERVED
        )

    def output_pins(self) -> tuple[PinId, ...]:
        """All wired output pins, reserved ones included."""
        return tuple(
            e.pin for e in self.entries
            if e.direction is Direction.DIGITAL_OUT and e.pin is not None
        )

    def validate(self) -> list[Violation]:
        return validate_map(self)


def _in(no: str, pin: PinId, label: str, indication: str, color: Color,
        description: str, tag: str, fault_class: FaultClass,
        proto_char: int | None = None) -> SignalDef:
    return SignalDef(no, pin, label, indication, Direction.DIGITAL_IN,
                     Kind.INDICATOR, color, description, tag, fault_class, proto_char)


def _out(no: str, pin: PinId, label: str, indication: str, kind: Kind,
         description: str, tag: str, proto_char: int | None = None) -> SignalDef:
    return SignalDef(no, pin, label, indication, Direction.DIGITAL_OUT,
                     kind, Color.NONE, description, tag, FaultClass.NONE, proto_char)


def _reserved(no: str, pin: PinId) -> SignalDef:
    return SignalDef(no, pin, "", "", Direction.DIGITAL_OUT, Kind.RESERVED,
                     Color.NONE, "", "", FaultClass.NONE, None)


def _device(no: str, description: str, tag: str) -> SignalDef:
    return SignalDef(no, None, "", "", Direction.DIGITAL_OUT, Kind.DEVICE,
                     Color.NONE, description, tag, FaultClass.NONE, None)


def _pin(name: str) -> PinId:
    return PinId.parse(name)


def build_default_map() -> SignalMap:
    """The as-built panel map: 15 inputs, 11 named outputs, 4 reserved
    output pins, plus five pinless plant devices kept as metadata.

    Lamp colors follow the three-color annunciator convention: red for
    fault and alarm, green for running-state confirmations, yellow for
    operating events (gas admission and the start sequence).
    """
    e = [
        _in("1", _pin("RA0"), "LED1", "Fault", Color.RED,
            PUMP_OVERLOAD, "H11", FaultClass.TRIP, ord("y")),
        _in("2", _pin("RA1"), "LED2", "Run OK", Color.GREEN,
            PUMP_IN_OPERATION, "H5", FaultClass.NONE, ord("z")),
        _in("4A", _pin("RA2"), "LED4A", "Run", Color.YELLOW,
            IGNITION_GAS, "H1", FaultClass.NONE),
        _in("4B", _pin("RA3"), "LED4B", "Fault", Color.RED,
            LEAKAGE_ALARM, "H15", FaultClass.TRIP),
        _in("4", _pin("RA4"), "LED4", "Fault", Color.RED,
            BURNER_MOTOR_OVERLOAD, "H12", FaultClass.TRIP),
        _in("5", _pin("RA5"), "LED5", "Run", Color.YELLOW,
            BURNER_START, "H3", FaultClass.NONE),
        _in("6", _pin("RB0"), "LED6", "Fault", Color.RED,
            BURNER_DISTURB, "H13", FaultClass.TRIP),
        _in("7", _pin("RB1"), "LED7", "Run", Color.GREEN,
            BURNER_IN_OPERATION, "H4", FaultClass.NONE),
        _in("15", _pin("RB2"), "LED15", "Fault", Color.RED,
            LEVEL_ALARM_LOW, "H7", FaultClass.ALARM),
        _in("16", _pin("RB3"), "LED16", "Fault", Color.RED,
            PRESSURE_ALARM_LOW, "H10", FaultClass.ALARM),
        _in("17", _pin("RB4"), "LED17", "Fault", Color.RED,
            PRESSURE_ALARM_HIGH, "H9", FaultClass.ALARM),
        _in("18", _pin("RB5"), "LED18", "Fault", Color.RED,
            SAFETY_CIRCUIT, "H14", FaultClass.TRIP),
        _in("20", _pin("RB6"), "LED20", "Fault", Color.RED,
            LOW_GAS_PRESSURE, "H2", FaultClass.ALARM),
        _in("21", _pin("RB7"), "LED21", "Fault", Color.RED,
            TEMP_SWITCH_HIGH_HIGH, "H6", FaultClass.TRIP),
        _in("22", _pin("RE0"), "LED22", "Fault", Color.RED,
            TEMP_ALARM_HIGH_HIGH, "H8", FaultClass.TRIP),
        _out("3", _pin("RC0"), "SWITCH3", "SELECTOR", Kind.SELECTOR_SWITCH,
             SELECTOR_LOCAL_REMOTE, ""),
        _reserved("", _pin("RC1")),
        _out("8", _pin("RC2"), "Buttom8", "start", Kind.PUSH_BUTTON,
             BURNER_START_BUTTON, "S2", ord("a")),
        _out("9", _pin("RC3"), "Buttom9", "stop", Kind.PUSH_BUTTON,
             BURNER_STOP_BUTTON, "S3", ord("b")),
        _out("10", _pin("RC4"), "Buttom10", "RESET", Kind.PUSH_BUTTON,
             RESET_BUTTON, "S8"),
        _out("11", _pin("RC5"), "SWITCH11", "SELECTOR", Kind.SELECTOR_SWITCH,
             BURNER_OP_LOCAL_REMOTE, "S9"),
        _reserved("", _pin("RC6")),
        _out("13", _pin("RC7"), "Buttom13", "TEST", Kind.PUSH_BUTTON,
             TEST_FLAME_DETECTOR, "S10"),
        _out("14", _pin("RD0"), "SWITCH14", "SELECTOR", Kind.SELECTOR_SWITCH,
             BURNER_OPERATION_MODE, "S11"),
        _reserved("", _pin("RD1")),
        _out("19", _pin("RD2"), "Buttom19", "RESET", Kind.PUSH_BUTTON,
             ALARM_RECEIPT, "S7"),
        _reserved("", _pin("RD3")),
        _out("23", _pin("RD4"), "Buttom23", "TEST", Kind.PUSH_BUTTON,
             TEST_TEMP_ALARM, "S5"),
        _out("25", _pin("RD5"), "Buttom25", "TEST", Kind.PUSH_BUTTON,
             LAMP_TEST, "S12"),
        _out("26", _pin("RD6"), "SWITCH26", "EMERGENCY STOP", Kind.EMERGENCY_STOP,
             EMERGENCY_STOP, "S6"),
        # Plant devices identified on the panel but wired to no pin.
        _device("12", "TEMPERATUR CONTROL", "N1"),
        _device("27", "MAIN SWITCH", "Q1"),
        _device("28", "THERMOSTAT (INSIDE DOOR)", "S1"),
        _device("29", "SWITCHBOARD FAN + AIR INLET", "M1"),
        _device("30", "AIR OUTLET FILTER", ""),
    ]
    return SignalMap(e)


def validate_map(smap: SignalMap) -> list[Violation]:
    """Check every map invariant; an empty list means the map is sound."""
    violations: list[Violation] = []

    def bad(rule: str, subject: str, message: str) -> None:
        violations.append(Violation(rule, subject, message))

    seen_pins: dict[PinId, SignalDef] = {}
    seen_chars: dict[int, SignalDef] = {}
    pinned_inputs = 0
    total_pins = 0
    for entry in smap.entries:
        subject = entry.description or entry.label or str(entry.pin)
        if entry.direction is Direction.DIGITAL_IN:
            if entry.kind is not Kind.INDICATOR:
                bad("input-kind", subject, "digital inputs must be indicators")
            if entry.color is Color.NONE:
                bad("input-color", subject, "digital inputs must carry a lamp color")
            if entry.pin is not None:
                pinned_inputs += 1
                if entry.pin not in INPUT_PINS:
                    bad("input-pin-range", subject,
                        f"{entry.pin} is outside the input pin range")
        else:
            if entry.color is not Color.NONE:
                bad("color-on-output", subject, "outputs carry no lamp color")
            if entry.pin is not None and entry.pin not in OUTPUT_PINS:
                bad("output-pin-range", subject,
                    f"{entry.pin} is outside ports C/D")
        if entry.pin is not None:
            total_pins += 1
            if entry.pin in seen_pins:
                bad("duplicate-pin", subject,
                    f"{entry.pin} already used by {seen_pins[entry.pin].description!r}")
            else:
                seen_pins[entry.pin] = entry
        if entry.proto_char is not None:
            if entry.proto_char in seen_chars:
                bad("duplicate-char", subject,
                    f"character {chr(entry.proto_char)!r} already used")
            else:
                seen_chars[entry.proto_char] = entry
    if pinned_inputs != 15:
        bad("input-count", "map", f"expected 15 pinned inputs, found {pinned_inputs}")
    if total_pins > 30:
        bad("pin-count", "map", f"{total_pins} pins mapped, limit is 30")
    return violations


# ---------------------------------------------------------------------------
# On-disk format: one pipe-separated record per signal, '#' comments allowed.
# Grammar documented in docs/formats.md. The first six fields follow the
# panel papers' column order so operators can audit the file side by side
# with the machine documentation.
# ---------------------------------------------------------------------------

_COLUMNS = ("no", "pin", "label", "indication", "type", "description",
            "kind", "color", "class", "tag", "char")


def render_map(smap: SignalMap) -> str:
    lines = [
        f"map-version: {smap.version}",
        "# " + " | ".join(_COLUMNS),
    ]
    for e in smap.entries:
        char = chr(e.proto_char) if e.proto_char is not None else ""
        fields = (
            e.signal_no,
            str(e.pin) if e.pin else "",
            e.label,
            e.indication,
            e.direction.value,
            e.description,
            e.kind.value,
            e.color.value if e.color is not Color.NONE else "",
            e.fault_class.value if e.fault_class is not FaultClass.NONE else "",
            e.tag,
            char,
        )
        lines.append(" | ".join(fields).rstrip())
    return "\n".join(lines) + "\n"


def parse_map(text: str) -> SignalMap:
    version = MAP_FORMAT_VERSION
    entries: list[SignalDef] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("map-version:"):
            version = line.split(":", 1)[1].strip()
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != len(_COLUMNS):
            raise MapError(
                f"line {lineno}: expected {len(_COLUMNS)} fields, got {len(parts)}")
        (no, pin_s, label, indication, type_s, description,
         kind_s, color_s, class_s, tag, char_s) = parts
        try:
            entries.append(SignalDef(
                signal_no=no,
                pin=PinId.parse(pin_s) if pin_s else None,
                label=label,
                indication=indication,
                direction=Direction(type_s),
                kind=Kind(kind_s),
                color=Color(color_s) if color_s else Color.NONE,
                description=description,
                tag=tag,
                fault_class=FaultClass(class_s) if class_s else FaultClass.NONE,
                proto_char=ord(char_s) if char_s else None,
            ))
        except ValueError as exc:
            raise MapError(f"line {lineno}: {exc}") from None
    return SignalMap(entries, version=version)


def load_map(path: str) -> SignalMap:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_map(fh.read())


def save_map(smap: SignalMap, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_map(smap))


def with_entry(smap: SignalMap, entry: SignalDef) -> SignalMap:
    """Copy of the map with one additional entry (test plumbing)."""
    return SignalMap(smap.entries + (entry,), version=smap.version)


def replace_entry(smap: SignalMap, description: str, **changes) -> SignalMap:
    entries = tuple(
        replace(e, **changes) if e.description == description else e
        for e in smap.entries
    )
    return SignalMap(entries, version=smap.version)
