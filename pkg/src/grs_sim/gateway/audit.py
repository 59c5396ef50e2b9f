"""Append-only audit trail of everything the supervisor does and sees.

One JSON object per line, sequence numbers strictly increasing, times
from the simulation clock — two runs with the same inputs produce
byte-identical files. When the live file exceeds the size limit it is
renamed to `<path>.1`, `<path>.2`, ... so no record is ever discarded.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

from ..clock import VirtualClock


class EventKind:
    COMMAND = "Command"
    STATUS_EDGE = "StatusEdge"
    MODE_CHANGE = "ModeChange"
    AUTH_FAILURE = "AuthFailure"
    LINK_FAULT = "LinkFault"


@dataclass(frozen=True)
class SupervisorEvent:
    seq: int
    time: float
    panel: str
    kind: str
    payload: dict

    def line(self) -> str:
        return json.dumps(
            {"seq": self.seq, "time": self.time, "panel": self.panel,
             "kind": self.kind, "payload": self.payload},
            sort_keys=True, separators=(",", ":"))


class AuditLog:
    def __init__(self, clock: VirtualClock, path: str | None = None,
                 max_bytes: int | None = None):
        self.clock = clock
        self.path = path
        self.max_bytes = max_bytes
        self.events: list[SupervisorEvent] = []
        self._seq = 0
        self._rotations = 0
        self._fh = open(path, "a", encoding="utf-8") if path else None

    def append(self, kind: str, panel: str, payload: dict) -> SupervisorEvent:
        self._seq += 1
        event = SupervisorEvent(self._seq, self.clock.now, panel, kind, dict(payload))
        self.events.append(event)
        if self._fh is not None:
            self._fh.write(event.line() + "\n")
            self._fh.flush()
            if self.max_bytes is not None and self._fh.tell() > self.max_bytes:
                self._rotate()
        return event

    def _rotate(self) -> None:
        assert self._fh is not None and self.path is not None
        self._fh.close()
        self._rotations += 1
        os.replace(self.path, f"{self.path}.{self._rotations}")
        self._fh = open(self.path, "a", encoding="utf-8")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def of_kind(self, kind: str) -> list[SupervisorEvent]:
        return [e for e in self.events if e.kind == kind]

    def count(self, kind: str) -> int:
        return sum(1 for e in self.events if e.kind == kind)

    def text(self) -> str:
        return "".join(e.line() + "\n" for e in self.events)
