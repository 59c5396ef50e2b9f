"""Controller-node emulation: a transparent bridge between serial bytes
and panel pins.

The node owns the pin image and nothing else: command bytes from the
supervisor actuate output pins (momentary buttons pulse, selectors
latch), and input-signal edges from the plant are reported as status
bytes, one byte per observed edge, in order. All control intelligence
lives in the plant and the supervisor; the bridge never decides anything.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .clock import Scheduler
from .codec import Codebook, Edge as ProtoEdge, Pulse
from .link import Delivery, Endpoint
from .plant import BoilerPlant, Edge
from .signal_map import PinId, SignalMap

DEFAULT_CYCLE_S = 0.005
DEFAULT_PULSE_S = 0.2
DEFAULT_DEBOUNCE_S = 0.05


@dataclass
class PinImage:
    """Last known level and change time of every mapped pin."""

    levels: dict[str, bool] = field(default_factory=dict)
    last_change: dict[str, float] = field(default_factory=dict)

    def set(self, pin: str, level: bool, t: float) -> bool:
        """Record a level; returns True when it actually changed."""
        if self.levels.get(pin, False) == level:
            return False
        self.levels[pin] = level
        self.last_change[pin] = t
        return True


@dataclass
class Counters:
    rx_bytes: int = 0
    tx_bytes: int = 0
    unknown_bytes: int = 0
    framing_errors: int = 0
    edges_seen: int = 0
    actuations: int = 0

    def to_dict(self) -> dict:
        return {
            "rx_bytes": self.rx_bytes,
            "tx_bytes": self.tx_bytes,
            "unknown_bytes": self.unknown_bytes,
            "framing_errors": self.framing_errors,
            "edges_seen": self.edges_seen,
            "actuations": self.actuations,
        }


class FirmwareNode:
    def __init__(self, smap: SignalMap, codebook: Codebook, endpoint: Endpoint,
                 plant: BoilerPlant, scheduler: Scheduler,
                 cycle_s: float = DEFAULT_CYCLE_S,
                 pulse_s: float = DEFAULT_PULSE_S,
                 debounce_s: float = DEFAULT_DEBOUNCE_S):
        self.smap = smap
        self.codebook = codebook
        self.endpoint = endpoint
        self.plant = plant
        self.scheduler = scheduler
        self.cycle_s = cycle_s
        self.pulse_s = pulse_s
        self.debounce_s = debounce_s

        self.pins = PinImage()
        for sig in smap.inputs():
            self.pins.levels[str(sig.pin)] = False
        for pin in smap.output_pins():
            self.pins.levels[str(pin)] = False

        self.counters = Counters()
        self.running = False
        self._rx: list[Delivery] = []
        self._edge_queue: list[tuple[float, Edge]] = []
        # Debounce bookkeeping, keyed by pin name.
        self._emitted_level: dict[str, bool] = {
            str(s.pin): False for s in smap.inputs()}
        self._emit_time: dict[str, float] = {}
        self._pending: dict[str, tuple[float, Edge]] = {}
        self._cycle_handle = None
        endpoint.on_receive = self._on_delivery

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        if self.running:
            return
        self.running = True
        self._cycle_handle = self.scheduler.call_repeating(self.cycle_s, self.run_cycle)

    def stop(self) -> None:
        self.running = False
        if self._cycle_handle is not None:
            self.scheduler.cancel(self._cycle_handle)
            self._cycle_handle = None

    # -- ingress -------------------------------------------------------------

    def _on_delivery(self, delivery: Delivery) -> None:
        if not self.running:
            return
        self._rx.append(delivery)

    def feed_edges(self, edges: tuple[Edge, ...] | list[Edge]) -> None:
        """Queue plant input edges for the next polling cycle."""
        now = self.scheduler.now
        for edge in edges:
            self._edge_queue.append((now, edge))

    # -- main loop -----------------------------------------------------------

    def run_cycle(self) -> None:
        """Drain pending serial bytes, then report plant edges."""
        rx, self._rx = self._rx, []
        for delivery in rx:
            if delivery.error is not None:
                self.counters.framing_errors += 1
                continue
            self.counters.rx_bytes += 1
            self.on_serial_byte(delivery.data)  # type: ignore[arg-type]

        queue, self._edge_queue = self._edge_queue, []
        for t_arrival, edge in queue:
            self.counters.edges_seen += 1
            pin = str(edge.signal.pin)
            self.pins.set(pin, edge.level, t_arrival)
            self._debounced_emit(pin, edge)
        self._flush_pending()

    # -- serial command handling ----------------------------------------------

    def on_serial_byte(self, byte: int) -> bool:
        """Actuate the matching output, or ignore unknown bytes."""
        cmd = self.codebook.decode_command(byte)
        if cmd is None:
            self.counters.unknown_bytes += 1
            return False
        self.counters.actuations += 1
        pin = cmd.signal.pin
        assert pin is not None
        if cmd.pulse is Pulse.MOMENTARY:
            self._actuate(pin, True)
            self.scheduler.call_later(self.pulse_s, self._actuate, pin, False)
        else:
            self._actuate(pin, bool(cmd.level))
        return True

    def _actuate(self, pin: PinId, level: bool) -> None:
        self.pins.set(str(pin), level, self.scheduler.now)
        result = self.plant.apply_output(pin, level)
        if result.edges:
            self.feed_edges(result.edges)

    # -- status reporting with debounce ---------------------------------------

    def on_input_edge(self, pin: str, level: bool) -> None:
        """Send exactly one status byte for an observed edge."""
        sig = self.smap.lookup_by_pin(PinId.parse(pin))
        assert sig is not None
        byte = self.codebook.encode_status(
            sig, ProtoEdge.ASSERTED if level else ProtoEdge.CLEARED)
        self.endpoint.send(byte)
        self.counters.tx_bytes += 1
        self._emitted_level[pin] = level
        self._emit_time[pin] = self.scheduler.now

    def _debounced_emit(self, pin: str, edge: Edge) -> None:
        now = self.scheduler.now
        if edge.level == self._emitted_level.get(pin, False) and pin not in self._pending:
            return
        last = self._emit_time.get(pin)
        if last is not None and now - last < self.debounce_s:
            # Within the debounce window: remember only the final level.
            self._pending[pin] = (now, edge)
            return
        self._pending.pop(pin, None)
        self.on_input_edge(pin, edge.level)

    def _flush_pending(self) -> None:
        now = self.scheduler.now
        for pin in list(self._pending):
            last = self._emit_time.get(pin, 0.0)
            if now - last < self.debounce_s:
                continue
            _, edge = self._pending.pop(pin)
            if edge.level != self._emitted_level.get(pin, False):
                self.on_input_edge(pin, edge.level)
