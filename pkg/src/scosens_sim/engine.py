"""Deterministic discrete-event engine with an integer microsecond clock."""

from __future__ import annotations

import heapq
import itertools
import random
from dataclasses import dataclass
from typing import Any, Callable, Optional


class SchedulingError(ValueError):
    """Raised when an event is scheduled before the current clock."""


class SimulationFault(RuntimeError):
    """A handler failed; carries the offending event id and time."""

    def __init__(self, event_id: int, time_us: int, kind: str, cause: BaseException):
        super().__init__(f"event {event_id} ({kind}) at t={time_us} us failed: {cause!r}")
        self.event_id = event_id
        self.time_us = time_us
        self.kind = kind
        self.__cause__ = cause


@dataclass
class Event:
    due: int
    seq: int
    id: int
    action: Optional[Callable[[], Any]]
    target: Any = None
    kind: str = "call"
    payload: Any = None


def quantize_up(t: int, resolution: int) -> int:
    """Smallest multiple of ``resolution`` that is >= ``t``."""
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    return -(-t // resolution) * resolution


def node_rng(seed: int, node_id: int) -> random.Random:
    """Per-node Mersenne Twister stream derived from (scenario seed, node id).

    Seeding from the pair keeps each node's draws independent of how many
    other nodes exist in the scenario.
    """
    return random.Random((int(seed) << 20) ^ (int(node_id) & 0xFFFFF))


class Simulator:
    """Event loop; ties on ``due`` fire in insertion (FIFO) order."""

    def __init__(self, record: bool = False):
        self.now = 0
        self._queue: list[tuple[int, int, Event]] = []  # (due, seq, event)
        self._pending: dict[int, Event] = {}
        self._ids = itertools.count(1)
        self._seq = itertools.count()
        self.record = record
        self.executed: list[tuple[int, int, Any, str]] = []

    def schedule(self, due: int, action: Callable[[], Any], target: Any = None,
                 kind: str = "call", payload: Any = None) -> int:
        if due < self.now:
            raise SchedulingError(f"cannot schedule at t={due}, clock is at t={self.now}")
        eid = next(self._ids)
        ev = Event(due, next(self._seq), eid, action, target, kind, payload)
        heapq.heappush(self._queue, (due, ev.seq, ev))
        self._pending[eid] = ev
        return eid

    def schedule_in(self, delay: int, action: Callable[[], Any], **kw: Any) -> int:
        return self.schedule(self.now + delay, action, **kw)

    def cancel(self, event_id: Optional[int]) -> bool:
        ev = self._pending.pop(event_id, None) if event_id is not None else None
        if ev is None:
            return False
        ev.action = None
        return True

    def pending(self, event_id: Optional[int]) -> bool:
        return event_id in self._pending

    def run_until(self, t_end: int) -> int:
        if t_end < self.now:
            raise SchedulingError(f"t_end={t_end} is before clock t={self.now}")
        count = 0
        queue = self._queue
        while queue and queue[0][0] <= t_end:
            ev = heapq.heappop(queue)[2]
            if ev.action is None:
                continue
            del self._pending[ev.id]
            self.now = ev.due
            if self.record:
                self.executed.append((ev.id, ev.due, ev.target, ev.kind))
            try:
                ev.action()
            except SimulationFault:
                raise
            except Exception as exc:
                raise SimulationFault(ev.id, ev.due, ev.kind, exc) from exc
            count += 1
        self.now = t_end
        return count


@dataclass
class NodeClock:
    """Hardware-timer model: wake-ups land on this node's tick grid.

    ``phase`` offsets the grid so independent nodes do not share tick edges.
    A quantum of 1 disables quantization.
    """
    quantum: int = 1
    phase: int = 0

    def align(self, t: int) -> int:
        if self.quantum == 1:
            return t
        return self.phase + quantize_up(max(t - self.phase, 0), self.quantum)
