"""Virtual clock and deterministic event scheduler.

All timing in the simulation (frame times, controller cycles, plant ticks,
session expiry) runs on one logical clock advanced by the scheduler, never
on wall time. Two runs that schedule the same callbacks in the same order
produce identical timelines.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable


class VirtualClock:
    """Monotone logical time in seconds. Only the scheduler advances it."""

    def __init__(self) -> None:
        self._now = 0.0

    @property
    def now(self) -> float:
        return self._now

    def _advance_to(self, t: float) -> None:
        if t < self._now:
            raise ValueError(f"clock cannot move backwards ({t} < {self._now})")
        self._now = t


@dataclass(order=True)
class _Event:
    time: float
    seq: int
    fn: Callable[..., Any] = field(compare=False)
    args: tuple = field(compare=False, default=())
    cancelled: bool = field(compare=False, default=False)


class Scheduler:
    """Min-heap scheduler; ties broken by insertion order for determinism."""

    def __init__(self, clock: VirtualClock | None = None) -> None:
        self.clock = clock if clock is not None else VirtualClock()
        self._heap: list[_Event] = []
        self._seq = itertools.count()

    @property
    def now(self) -> float:
        return self.clock.now

    def call_at(self, t: float, fn: Callable[..., Any], *args: Any) -> _Event:
        if t < self.clock.now:
            raise ValueError(f"cannot schedule in the past ({t} < {self.clock.now})")
        ev = _Event(t, next(self._seq), fn, args)
        heapq.heappush(self._heap, ev)
        return ev

    def call_later(self, delay: float, fn: Callable[..., Any], *args: Any) -> _Event:
        return self.call_at(self.clock.now + delay, fn, *args)

    def call_repeating(self, period: float, fn: Callable[..., Any], *args: Any) -> _Event:
        """Schedule fn every `period` seconds, first run one period from now."""
        if period <= 0:
            raise ValueError("period must be positive")

        def tick() -> None:
            fn(*args)
            if not handle.cancelled:    # fn may have cancelled its own timer
                handle.inner = self.call_later(period, tick)

        handle = _RepeatingHandle(self.call_later(period, tick))
        return handle  # type: ignore[return-value]

    def cancel(self, ev: _Event) -> None:
        ev.cancelled = True

    def next_event_time(self) -> float | None:
        while self._heap and self._heap[0].cancelled:
            heapq.heappop(self._heap)
        return self._heap[0].time if self._heap else None

    def run_next(self) -> bool:
        """Execute the earliest pending event. Returns False if queue empty."""
        while self._heap:
            ev = heapq.heappop(self._heap)
            if ev.cancelled:
                continue
            self.clock._advance_to(ev.time)
            ev.fn(*ev.args)
            return True
        return False

    def run_until(self, t: float) -> None:
        """Run all events with time <= t, then set the clock to exactly t."""
        while True:
            nxt = self.next_event_time()
            if nxt is None or nxt > t:
                break
            self.run_next()
        if t > self.clock.now:
            self.clock._advance_to(t)

    def run_for(self, dt: float) -> None:
        self.run_until(self.clock.now + dt)

    def drain(self, limit: int = 1_000_000) -> int:
        """Run until no events remain; guards against runaway self-scheduling."""
        n = 0
        while self.run_next():
            n += 1
            if n >= limit:
                raise RuntimeError("scheduler drain exceeded event limit")
        return n


class _RepeatingHandle:
    """Cancellable handle for call_repeating (the live event rotates)."""

    def __init__(self, inner: _Event) -> None:
        self.inner = inner

    @property
    def cancelled(self) -> bool:
        return self.inner.cancelled

    @cancelled.setter
    def cancelled(self, value: bool) -> None:
        self.inner.cancelled = value
