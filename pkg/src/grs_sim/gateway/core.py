"""Supervisory gateway core: panel registry, command forwarding, automatic
operation, general reset and the snapshot/event stream.

The gateway talks to each panel only through its serial link: accepted
operator commands become single protocol bytes, received status bytes
become audit events and stream deltas. Panel snapshots (temperature,
phase, lamp levels) are read from the co-hosted plant model and pushed to
subscribers on every status edge plus a periodic heartbeat.

Automatic operation drives the plant like an operator would: reset when
faulted, start when ready and cold, stop at the setpoint, with the plant's
own hysteresis band closing the loop. After a high-high shutdown the auto
loop goes silent until a human resets the plant. While a panel is in Auto
the only human command forwarded to the link is the emergency stop.
"""

from __future__ import annotations

import queue
from dataclasses import dataclass
from enum import Enum

from ..clock import Scheduler
from ..codec import Codebook
from ..firmware import FirmwareNode
from ..link import Delivery, LinkClosedError, SerialLink
from ..plant import BoilerPlant, PanelSnapshot, Phase, SETPOINT_MAX, SETPOINT_MIN
from ..signal_map import (
    ALARM_RECEIPT,
    BURNER_START_BUTTON,
    BURNER_STOP_BUTTON,
    Color,
    EMERGENCY_STOP,
    Kind,
    RESET_BUTTON,
    SignalDef,
)
from .audit import AuditLog, EventKind
from .auth import Authenticator, AuthError, Session, UnauthorizedError

DEFAULT_HEARTBEAT_S = 1.0
AUTO_RETRY_S = 5.0


class GatewayError(Exception):
    pass


class UnknownPanelError(GatewayError):
    pass


class UnknownButtonError(GatewayError):
    pass


class UnknownSelectorError(GatewayError):
    pass


class ModeLockedError(GatewayError):
    pass


class PanelOfflineError(GatewayError):
    pass


class SetpointOutOfRange(GatewayError):
    pass


class Mode(Enum):
    MANUAL = "Manual"
    AUTO = "Auto"


class Subscription:
    """One client's ordered view of a panel's stream."""

    def __init__(self, panel_id: str):
        self.panel_id = panel_id
        self.queue: "queue.Queue[dict]" = queue.Queue()
        self.closed = False

    def push(self, event: dict) -> None:
        if not self.closed:
            self.queue.put(event)

    def get(self, timeout: float | None = None) -> dict | None:
        try:
            return self.queue.get(timeout=timeout)
        except queue.Empty:
            return None


@dataclass
class AutoState:
    setpoint: float
    last_action: str | None = None
    last_phase: Phase | None = None
    last_sent: float = -1e9


class PanelRuntime:
    """Everything belonging to one panel: plant, link, controller node."""

    def __init__(self, panel_id: str, name: str, plant: BoilerPlant,
                 link: SerialLink, firmware: FirmwareNode, codebook: Codebook):
        self.id = panel_id
        self.name = name
        self.plant = plant
        self.link = link
        self.firmware = firmware
        self.codebook = codebook
        self.mode = Mode.MANUAL
        self.auto: AutoState | None = None
        self.seq = 0
        self.online = True
        self.subscribers: list[Subscription] = []

    # The gateway sits on side "a" of the link; the controller on side "b".
    @property
    def endpoint(self):
        return self.link.a

    def snapshot(self) -> PanelSnapshot:
        return self.plant.snapshot()

    def inject_fault(self, name: str) -> None:
        self.firmware.feed_edges(self.plant.inject_fault(name))

    def clear_fault_cause(self, name: str) -> None:
        self.firmware.feed_edges(self.plant.clear_fault_cause(name))

    def force_input(self, name: str, level: bool | None) -> None:
        self.firmware.feed_edges(self.plant.force_input(name, level))


class GatewayCore:
    def __init__(self, scheduler: Scheduler, auth: Authenticator, audit: AuditLog,
                 heartbeat_s: float = DEFAULT_HEARTBEAT_S):
        self.scheduler = scheduler
        self.auth = auth
        self.audit = audit
        self.heartbeat_s = heartbeat_s
        self.panels: dict[str, PanelRuntime] = {}

    # -- wiring ---------------------------------------------------------------

    def add_panel(self, panel: PanelRuntime) -> None:
        if panel.id in self.panels:
            raise GatewayError(f"duplicate panel id {panel.id!r}")
        self.panels[panel.id] = panel
        panel.endpoint.on_receive = lambda d: self._on_delivery(panel, d)
        self.scheduler.call_repeating(self.heartbeat_s, self._heartbeat, panel)

    # -- authentication -------------------------------------------------------

    def authenticate(self, username: str, password: str) -> Session:
        try:
            return self.auth.authenticate(username, password)
        except AuthError as exc:
            self.audit.append(EventKind.AUTH_FAILURE, "-",
                              {"user": username, "error": type(exc).__name__})
            raise

    def _session(self, token: str | None) -> Session:
        try:
            return self.auth.lookup(token)
        except UnauthorizedError:
            self.audit.append(EventKind.AUTH_FAILURE, "-", {"error": "unauthorized"})
            raise

    def _panel(self, session: Session, panel_id: str) -> PanelRuntime:
        panel = self.panels.get(panel_id)
        if panel is None:
            raise UnknownPanelError(f"no panel {panel_id!r}")
        if not session.permits(panel_id):
            raise UnauthorizedError(f"panel {panel_id!r} not permitted")
        return panel

    # -- read surface -----------------------------------------------------------

    def list_panels(self, token: str | None) -> list[dict]:
        session = self._session(token)
        out = []
        for panel in self.panels.values():
            if not session.permits(panel.id):
                continue
            snap = panel.snapshot()
            out.append({
                "id": panel.id,
                "name": panel.name,
                "mode": panel.mode.value,
                "phase": snap.phase.value,
                "online": panel.online,
            })
        return out

    def get_state(self, token: str | None, panel_id: str) -> dict:
        session = self._session(token)
        panel = self._panel(session, panel_id)
        return self._state_payload(panel)

    def _state_payload(self, panel: PanelRuntime) -> dict:
        snap = panel.snapshot()
        signals = [
            {
                "no": s.signal_no,
                "pin": str(s.pin) if s.pin else None,
                "label": s.label,
                "description": s.description,
                "kind": s.kind.value,
                "color": s.color.value,
                "direction": s.direction.value,
            }
            for s in panel.plant.smap.entries
            if s.kind not in (Kind.RESERVED, Kind.DEVICE)
        ]
        return {
            "id": panel.id,
            "name": panel.name,
            "seq": panel.seq,
            "mode": panel.mode.value,
            "online": panel.online,
            "auto": {"on": panel.mode is Mode.AUTO,
                     "setpoint": panel.auto.setpoint if panel.auto else None},
            "snapshot": snap.to_dict(),
            "signals": signals,
            "counters": panel.firmware.counters.to_dict(),
        }

    # -- command surface --------------------------------------------------------

    def press_button(self, token: str | None, panel_id: str, signal: str) -> dict:
        session = self._session(token)
        panel = self._panel(session, panel_id)
        sig = panel.plant.smap.get(signal)
        if sig is None or sig.kind not in (Kind.PUSH_BUTTON, Kind.EMERGENCY_STOP):
            raise UnknownButtonError(f"{signal!r} is not a push button")
        if panel.mode is Mode.AUTO and sig.kind is not Kind.EMERGENCY_STOP:
            raise ModeLockedError("panel is in automatic mode")
        if sig.kind is Kind.EMERGENCY_STOP:
            # The stop engages when released and disengages when engaged,
            # like twisting a physical latching head.
            engaged = panel.snapshot().output_map().get(str(sig.pin), False)
            byte = panel.codebook.encode_command(sig, level=not engaged)
        else:
            byte = panel.codebook.encode_command(sig)
        self._send(panel, byte, sig, source=session.user)
        return {"accepted": True, "seq": panel.seq}

    def set_selector(self, token: str | None, panel_id: str, signal: str,
                     position: bool | str) -> dict:
        session = self._session(token)
        panel = self._panel(session, panel_id)
        sig = panel.plant.smap.get(signal)
        if sig is None or sig.kind is not Kind.SELECTOR_SWITCH:
            raise UnknownSelectorError(f"{signal!r} is not a selector switch")
        if panel.mode is Mode.AUTO:
            raise ModeLockedError("panel is in automatic mode")
        level = _parse_position(position)
        byte = panel.codebook.encode_command(sig, level=level)
        self._send(panel, byte, sig, source=session.user,
                   extra={"position": "on" if level else "off"})
        return {"accepted": True, "seq": panel.seq}

    def set_auto_mode(self, token: str | None, panel_id: str, on: bool,
                      setpoint: float | None = None) -> dict:
        session = self._session(token)
        panel = self._panel(session, panel_id)
        if on:
            sp = setpoint if setpoint is not None else panel.plant.state.setpoint
            if not SETPOINT_MIN <= sp <= SETPOINT_MAX:
                raise SetpointOutOfRange(
                    f"setpoint {sp} outside [{SETPOINT_MIN:g}, {SETPOINT_MAX:g}]")
            panel.mode = Mode.AUTO
            panel.auto = AutoState(setpoint=float(sp))
            self.audit.append(EventKind.MODE_CHANGE, panel.id,
                              {"mode": "Auto", "setpoint": sp, "user": session.user})
            self._evaluate_auto(panel)
        else:
            panel.mode = Mode.MANUAL
            panel.auto = None
            self.audit.append(EventKind.MODE_CHANGE, panel.id,
                              {"mode": "Manual", "user": session.user})
        self._publish(panel, {"type": "mode", "mode": panel.mode.value})
        return {"accepted": True, "mode": panel.mode.value, "seq": panel.seq}

    def general_reset(self, token: str | None, panel_id: str) -> dict:
        """One click: burner-control reset followed by alarm receipt, so
        every latched fault and alarm whose cause is gone drops out."""
        session = self._session(token)
        panel = self._panel(session, panel_id)
        if panel.mode is Mode.AUTO:
            raise ModeLockedError("panel is in automatic mode")
        for name in (RESET_BUTTON, ALARM_RECEIPT):
            sig = panel.plant.smap.find(name)
            byte = panel.codebook.encode_command(sig)
            self._send(panel, byte, sig, source=session.user,
                       extra={"via": "general-reset"})
        return {"accepted": True, "seq": panel.seq}

    def subscribe(self, token: str | None, panel_id: str) -> Subscription:
        session = self._session(token)
        panel = self._panel(session, panel_id)
        if not panel.online:
            raise PanelOfflineError(f"panel {panel_id!r} is offline")
        sub = Subscription(panel.id)
        panel.subscribers.append(sub)
        panel.seq += 1
        sub.push({"type": "snapshot", "seq": panel.seq,
                  "state": self._state_payload(panel)})
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        sub.closed = True
        panel = self.panels.get(sub.panel_id)
        if panel and sub in panel.subscribers:
            panel.subscribers.remove(sub)

    # -- internals ----------------------------------------------------------------

    def _send(self, panel: PanelRuntime, byte: int, sig: SignalDef, source: str,
              extra: dict | None = None) -> None:
        payload = {"signal": sig.description, "char": chr(byte), "source": source}
        if extra:
            payload.update(extra)
        try:
            panel.endpoint.send(byte)
        except LinkClosedError:
            self._mark_offline(panel)
            raise PanelOfflineError(f"panel {panel.id!r} link is closed") from None
        self.audit.append(EventKind.COMMAND, panel.id, payload)

    def _publish(self, panel: PanelRuntime, event: dict) -> None:
        panel.seq += 1
        event = dict(event)
        event["seq"] = panel.seq
        for sub in list(panel.subscribers):
            sub.push(event)

    def _on_delivery(self, panel: PanelRuntime, delivery: Delivery) -> None:
        if delivery.error is not None:
            self.audit.append(EventKind.LINK_FAULT, panel.id,
                              {"error": delivery.error, "bits": "".join(
                                  str(b) for b in delivery.bits)})
            return
        status = panel.codebook.decode_status(delivery.data)  # type: ignore[arg-type]
        if status is None:
            self.audit.append(EventKind.LINK_FAULT, panel.id,
                              {"error": "unknown-byte", "byte": delivery.data})
            return
        sig = status.signal
        level = status.edge.name == "ASSERTED"
        self.audit.append(EventKind.STATUS_EDGE, panel.id, {
            "signal": sig.description,
            "char": chr(status.char),
            "edge": status.edge.value,
        })
        snap = panel.snapshot()
        self._publish(panel, {
            "type": "delta",
            "signal": sig.description,
            "pin": str(sig.pin),
            "level": level,
            "color": sig.color.value if sig.color is not Color.NONE else None,
            "phase": snap.phase.value,
            "temperature": round(snap.temperature, 6),
            "sim_time": round(snap.sim_time, 6),
        })
        if panel.mode is Mode.AUTO:
            self._evaluate_auto(panel)

    def _heartbeat(self, panel: PanelRuntime) -> None:
        if panel.online and not panel.link.open:
            self._mark_offline(panel)
            return
        if not panel.online:
            return
        snap = panel.snapshot()
        self._publish(panel, {
            "type": "heartbeat",
            "phase": snap.phase.value,
            "temperature": round(snap.temperature, 6),
            "setpoint": snap.setpoint,
            "mode": panel.mode.value,
            "sim_time": round(snap.sim_time, 6),
        })
        if panel.mode is Mode.AUTO:
            self._evaluate_auto(panel)

    def _mark_offline(self, panel: PanelRuntime) -> None:
        if not panel.online:
            return
        panel.online = False
        self.audit.append(EventKind.LINK_FAULT, panel.id, {"error": "link-closed"})
        self._publish(panel, {"type": "offline"})

    # -- automatic operation ---------------------------------------------------

    def _evaluate_auto(self, panel: PanelRuntime) -> None:
        auto = panel.auto
        if auto is None or not panel.online:
            return
        snap = panel.snapshot()
        phase = snap.phase
        temp = snap.temperature
        params = panel.plant.params
        h = params.hysteresis
        # Restart early enough that one heartbeat of command latency cannot
        # cool the plant below the bottom of the setpoint band.
        margin = min(h / 2, params.k_cool * (self.heartbeat_s + 2 * params.dt))

        action: str | None = None
        if phase in (Phase.HIGH_HIGH_SHUTDOWN, Phase.EMERGENCY_STOPPED):
            # Silent after a hard shutdown: a human must reset first.
            action = None
        elif phase in (Phase.POWERED_DOWN, Phase.FAULTED):
            action = RESET_BUTTON
        elif phase is Phase.READY and temp <= auto.setpoint - h + margin:
            action = BURNER_START_BUTTON
        elif phase in (Phase.IGNITING, Phase.HEATING, Phase.AT_SETPOINT) \
                and temp >= auto.setpoint:
            action = BURNER_STOP_BUTTON
        if action is None:
            return

        now = self.scheduler.now
        if action == auto.last_action and phase == auto.last_phase \
                and now - auto.last_sent < AUTO_RETRY_S:
            return
        sig = panel.plant.smap.find(action)
        try:
            self._send(panel, panel.codebook.encode_command(sig), sig, source="auto")
        except PanelOfflineError:
            return
        auto.last_action = action
        auto.last_phase = phase
        auto.last_sent = now


def _parse_position(position: bool | str) -> bool:
    if isinstance(position, bool):
        return position
    mapping = {"on": True, "off": False, "high": True, "low": False,
               "remote": True, "local": False, "auto": True, "manual": False,
               "1": True, "0": False}
    try:
        return mapping[str(position).strip().lower()]
    except KeyError:
        raise UnknownSelectorError(f"bad selector position {position!r}") from None
