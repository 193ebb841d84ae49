from collections import deque

import pytest

from scosens_sim.engine import Simulator
from scosens_sim.radio import Medium
from scosens_sim.trace import TraceRecorder


class ScriptedRng:
    """Stands in for random.Random: returns scripted draws, then ``default``."""

    def __init__(self, values=(), default=0):
        self.values = deque(values)
        self.default = default
        self.calls = []

    def randrange(self, n):
        v = self.values.popleft() if self.values else self.default
        assert 0 <= v < n, f"scripted draw {v} outside [0, {n})"
        self.calls.append((n, v))
        return v


@pytest.fixture
def world():
    """Simulator + traced medium with nodes 1..4 attached, all radios off."""
    sim = Simulator()
    trace = TraceRecorder()
    medium = Medium(sim, trace)
    for n in (1, 2, 3, 4):
        medium.attach(n)
    return sim, medium, trace


class MiniPan:
    """Router 1, leaves 2..n+1, sink n+2 wired by hand, with optional scripted RNGs."""

    def __init__(self, n_leaves=2, params=None, rngs=None, quantum=1, phases=None,
                 data_len=51, csma=None):
        import random

        from scosens_sim.csma import CsmaMac, CsmaParams
        from scosens_sim.engine import NodeClock
        from scosens_sim.harness.scenario import Sink
        from scosens_sim.packets import PacketLedger
        from scosens_sim.scosens import ScosensLeaf, ScosensParams, ScosensRouter

        self.sim = Simulator()
        self.trace = TraceRecorder()
        self.medium = Medium(self.sim, self.trace)
        self.ledger = PacketLedger()
        self.params = params or ScosensParams()
        csma = csma or CsmaParams()
        rngs = rngs or {}
        phases = phases or {}
        self.leaf_ids = list(range(2, 2 + n_leaves))
        self.sink_id = 2 + n_leaves
        nodes = [1, *self.leaf_ids, self.sink_id]
        for n in nodes:
            self.medium.attach(n)
        self.macs = {n: CsmaMac(self.sim, self.medium, n, rngs.get(n, random.Random(n)), csma)
                     for n in nodes}
        clock = lambda n: NodeClock(quantum, phases.get(n, 0))
        self.sink = Sink(self.medium, self.macs[self.sink_id], self.sink_id, self.ledger)
        self.router = ScosensRouter(self.sim, self.medium, self.macs[1], 1, self.params,
                                    self.sink_id, self.ledger, clock=clock(1),
                                    data_len=data_len)
        self.leaves = {n: ScosensLeaf(self.sim, self.medium, self.macs[n], n, self.params, 1,
                                      self.ledger, clock=clock(n), data_len=data_len)
                       for n in self.leaf_ids}

    def packet_at(self, t, leaf):
        def arrive():
            self.leaves[leaf].on_packet_arrival(self.ledger.new_packet(leaf, self.sim.now))
        self.sim.schedule(t, arrive)


# acceptance verdicts, echoed in the terminal summary so they survive output capture
ACCEPTANCE: list[str] = []


def verdict(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
