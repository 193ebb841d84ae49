"""S-CoSenS duty cycling: beacon, sleep period, waiting period, burst transmission.

The router announces each cycle's SP and WP in a beacon. The WP length follows
a clamped exponential moving average of the WP demand measured in previous
cycles; the SP fills the rest of the fixed-length subframe.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .csma import CsmaMac, TxJob, TxOutcome
from .engine import NodeClock, Simulator
from .packets import PacketLedger, PacketRecord
from .radio import (BEACON_LEN, BROADCAST, DATA_OVERHEAD, Frame, FrameKind, Medium, Power,
                    TransmissionRecord, frame_airtime)
from .trace import TraceRecorder


@dataclass
class ScosensParams:
    subframe: int = 100_000
    alpha: float = 0.9
    wp_min: int = 10_000
    wp_max: int = 90_000
    wp_initial: int = 80_000
    tp_enabled: bool = True
    # report wp_max when the WP had no room left after its last reception
    saturation_boost: bool = True
    leaf_burst_cap: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0 <= self.wp_min <= self.wp_max <= self.subframe:
            raise ValueError("need 0 <= wp_min <= wp_max <= subframe")
        if not 0 <= self.wp_initial <= self.subframe:
            raise ValueError("wp_initial must lie in [0, subframe]")
        if self.leaf_burst_cap is not None and self.leaf_burst_cap < 1:
            raise ValueError("leaf_burst_cap must be >= 1")


@dataclass
class ScosensWpState:
    avg_wp: int
    last_actual_wp: int
    cycle_index: int = 0

    @classmethod
    def initial(cls, params: ScosensParams) -> "ScosensWpState":
        return cls(params.wp_initial, params.wp_initial, 0)


def blend(avg_prev: int, actual_prev: int, alpha: float) -> int:
    """alpha*avg_prev + (1-alpha)*actual_prev in whole microseconds.

    Written as ``actual + alpha*(avg - actual)`` with the history term
    truncated toward zero, exactly. Half-up rounding would stall the average
    a few microseconds away from a constant demand.
    """
    num, den = float(alpha).as_integer_ratio()
    diff = avg_prev - actual_prev
    step = abs(diff) * num // den
    return actual_prev + (step if diff >= 0 else -step)


def next_wp(state: ScosensWpState, params: ScosensParams) -> tuple[int, int]:
    """Return (new average WP, clamped WP to schedule) for the next cycle."""
    avg = blend(state.avg_wp, state.last_actual_wp, params.alpha)
    return avg, max(params.wp_min, min(avg, params.wp_max))


def sp_for(wp: int, params: ScosensParams) -> int:
    if wp > params.subframe:
        raise ValueError(f"WP {wp} exceeds subframe {params.subframe}")
    return params.subframe - wp


def measure_wp_demand(wp_start: int, last_rx_end: Optional[int], params: ScosensParams,
                      wp_end: Optional[int] = None, guard: int = 0) -> int:
    """WP time actually used: up to the end of the last intact data reception.

    Idle waiting periods report ``wp_min`` so the average decays toward it.
    With ``guard > 0``, a reception ending less than ``guard`` before
    ``wp_end`` means another frame could not have fit; the WP is then
    saturated and reports ``wp_max`` so the average can grow.
    """
    if last_rx_end is None:
        return params.wp_min
    if guard > 0 and wp_end is not None and last_rx_end + guard > wp_end:
        return params.wp_max
    return last_rx_end - wp_start


class RouterPhase(str, Enum):
    BEACON = "beacon"
    SP = "SP"
    WP = "WP"
    TP = "TP"


class LeafPhase(str, Enum):
    SLEEP = "Sleep"
    AWAIT_BEACON = "AwaitBeacon"
    SLEEP_UNTIL_WP = "SleepUntilWp"
    CONTEND = "Contend"


class ScosensRouter:
    def __init__(self, sim: Simulator, medium: Medium, mac: CsmaMac, node: int,
                 params: ScosensParams, sink: int, ledger: PacketLedger,
                 clock: Optional[NodeClock] = None, data_len: int = 50):
        self.sim = sim
        self.medium = medium
        self.mac = mac
        self.node = node
        self.p = params
        self.sink = sink
        self.ledger = ledger
        self.clock = clock or NodeClock()
        self.data_len = data_len
        self.trace: TraceRecorder = medium.trace
        self.wp_state = ScosensWpState.initial(params)
        self.phase = RouterPhase.BEACON
        self.queue: deque[PacketRecord] = deque()
        self.sp = 0
        self.wp = 0
        self.wp_start = 0
        self.wp_end = 0
        self._last_rx_end: Optional[int] = None
        self._beacon_seq = 0
        # (cycle, beacon_end, wp_start, wp_end, wp_scheduled, demand)
        self.cycles: list[tuple[int, int, int, int, int, int]] = []
        self._beacon_end = 0
        medium.radios[node].on_frame = self.on_frame

    def start(self, t: int = 0) -> None:
        self.sim.schedule(t, self.run_cycle, target=self.node, kind="cycle")

    def _set_phase(self, phase: RouterPhase) -> None:
        self.phase = phase
        self.trace.emit(self.sim.now, self.node, "state", what="phase", phase=phase.value)

    def run_cycle(self) -> None:
        avg, wp = next_wp(self.wp_state, self.p)
        self.wp_state.avg_wp = avg
        self.wp_state.cycle_index += 1
        self.wp = wp
        self.sp = sp_for(wp, self.p)
        self._set_phase(RouterPhase.BEACON)
        self.medium.set_radio(self.node, Power.LISTENING)
        self._try_beacon()

    def _try_beacon(self) -> None:
        # One CCA, no backoff escalation: a busy channel just delays the beacon.
        if not self.medium.cca(self.node):
            self.sim.schedule(self.sim.now + self.mac.p.backoff_period, self._try_beacon,
                              target=self.node, kind="beacon_retry")
            return
        self._beacon_seq = (self._beacon_seq + 1) & 0xFF
        beacon = Frame(FrameKind.BEACON, self.node, BROADCAST, BEACON_LEN, self._beacon_seq,
                       beacon_payload=(self.sp, self.wp))
        self.trace.emit(self.sim.now, self.node, "beacon", cycle=self.wp_state.cycle_index,
                        sp_us=self.sp, wp_us=self.wp)
        self.medium.begin_tx(self.node, beacon, on_end=self._beacon_done)

    def _beacon_done(self, rec: TransmissionRecord) -> None:
        self._beacon_end = self.sim.now
        if self.sp > 0:
            self.medium.set_radio(self.node, Power.OFF)
        self._set_phase(RouterPhase.SP)
        wake = self.clock.align(self.sim.now + self.sp)
        self.sim.schedule(wake, self._wp_start, target=self.node, kind="wp_start")

    def _wp_start(self) -> None:
        self.medium.set_radio(self.node, Power.LISTENING)
        self.wp_start = self.sim.now
        self.wp_end = self.sim.now + self.wp
        self._last_rx_end = None
        self._set_phase(RouterPhase.WP)
        self.sim.schedule(self.wp_end, self._wp_over, target=self.node, kind="wp_end")

    def on_frame(self, frame: Frame, rec: TransmissionRecord) -> None:
        if frame.kind is FrameKind.ACK:
            self.mac.on_ack(frame)
            return
        if frame.kind is not FrameKind.DATA or frame.dst != self.node:
            return
        if self.phase is not RouterPhase.WP or self.sim.now > self.wp_end:
            return
        if self.mac.on_unicast_received(frame):
            self._last_rx_end = rec.end
            pkt = frame.packet
            if pkt is not None:
                self.ledger.router_rx(pkt, self.sim.now, terminal=not self.p.tp_enabled)
                if self.p.tp_enabled:
                    self.queue.append(pkt)

    def _wp_over(self) -> None:
        if self.mac.ack_busy_until > self.sim.now:
            self.sim.schedule(self.mac.ack_busy_until, self._wp_over, target=self.node,
                              kind="wp_end")
            return
        guard = 0
        if self.p.saturation_boost:
            guard = frame_airtime(self.data_len) + self.mac.p.ack_wait
        demand = measure_wp_demand(self.wp_start, self._last_rx_end, self.p, self.wp_end, guard)
        self.wp_state.last_actual_wp = demand
        self.cycles.append((self.wp_state.cycle_index, self._beacon_end, self.wp_start,
                            self.wp_end, self.wp, demand))
        self.trace.emit(self.sim.now, self.node, "state", what="wp_demand", demand_us=demand,
                        avg_us=self.wp_state.avg_wp)
        if self.p.tp_enabled and self.queue:
            self._set_phase(RouterPhase.TP)
            self._forward_next()
        else:
            self.queue.clear()
            self.run_cycle()

    def _forward_next(self) -> None:
        if not self.queue:
            self.run_cycle()
            return
        pkt = self.queue[0]
        frame = Frame(FrameKind.DATA, self.node, self.sink, self.data_len,
                      self.mac.next_seq(), packet=pkt)
        self.mac.send(frame, self._forwarded)

    def _forwarded(self, outcome: TxOutcome, job: TxJob) -> None:
        pkt = self.queue.popleft()
        if outcome is not TxOutcome.DELIVERED:
            self.ledger.dropped(pkt, f"router_{outcome.value}", at_router=True)
        self._forward_next()


class ScosensLeaf:
    def __init__(self, sim: Simulator, medium: Medium, mac: CsmaMac, node: int,
                 params: ScosensParams, router: int, ledger: PacketLedger,
                 clock: Optional[NodeClock] = None, data_len: int = 50,
                 queue_capacity: Optional[int] = None):
        self.sim = sim
        self.medium = medium
        self.mac = mac
        self.node = node
        self.p = params
        self.router = router
        self.ledger = ledger
        self.clock = clock or NodeClock()
        self.data_len = data_len
        self.queue_capacity = queue_capacity
        self.trace: TraceRecorder = medium.trace
        self.phase = LeafPhase.SLEEP
        self.pending: deque[PacketRecord] = deque()
        self.wp_window: tuple[int, int] = (0, 0)
        self._sent_this_window = 0
        self.wake_log: list[tuple[int, int]] = []  # (announced WP start, radio-on instant)
        medium.radios[node].on_frame = self.on_frame

    def _set_phase(self, phase: LeafPhase) -> None:
        self.phase = phase
        self.trace.emit(self.sim.now, self.node, "state", what="phase", phase=phase.value)

    def on_packet_arrival(self, pkt: PacketRecord) -> None:
        if self.queue_capacity is not None and len(self.pending) >= self.queue_capacity:
            self.ledger.dropped(pkt, "leaf_queue_full")
            return
        self.pending.append(pkt)
        if self.phase is LeafPhase.SLEEP:
            self.medium.set_radio(self.node, Power.LISTENING)
            self._set_phase(LeafPhase.AWAIT_BEACON)

    def on_frame(self, frame: Frame, rec: TransmissionRecord) -> None:
        if frame.kind is FrameKind.ACK:
            self.mac.on_ack(frame)
        elif frame.kind is FrameKind.BEACON and self.phase is LeafPhase.AWAIT_BEACON:
            self.on_beacon(frame)

    def on_beacon(self, beacon: Frame) -> None:
        sp, wp = beacon.beacon_payload
        now = self.sim.now
        self.wp_window = (now + sp, now + sp + wp)
        self.medium.set_radio(self.node, Power.OFF)
        self._set_phase(LeafPhase.SLEEP_UNTIL_WP)
        wake = self.clock.align(self.wp_window[0])
        self.sim.schedule(wake, self._wake, target=self.node, kind="leaf_wake",
                          payload=now)

    def _wake(self) -> None:
        self.medium.set_radio(self.node, Power.LISTENING)
        self.wake_log.append((self.wp_window[0], self.sim.now))
        self._set_phase(LeafPhase.CONTEND)
        self._sent_this_window = 0
        self.contend()

    def contend(self) -> None:
        if not self.pending:
            self.medium.set_radio(self.node, Power.OFF)
            self._set_phase(LeafPhase.SLEEP)
            return
        cap = self.p.leaf_burst_cap
        if cap is not None and self._sent_this_window >= cap:
            self._hold()
            return
        pkt = self.pending[0]
        if pkt.job is None:
            pkt.seq = self.mac.next_seq()
            frame = Frame(FrameKind.DATA, self.node, self.router, self.data_len, pkt.seq,
                          packet=pkt)
            pkt.job = TxJob(frame)
        self.mac.send(pkt.job.frame, self._sent, deadline=self.wp_window[1], job=pkt.job)

    def _hold(self) -> None:
        # Remaining packets ride on the next beacon; keep listening for it.
        self._set_phase(LeafPhase.AWAIT_BEACON)

    def _sent(self, outcome: TxOutcome, job: TxJob) -> None:
        if outcome is TxOutcome.DEFERRED:
            self._hold()
            return
        pkt = self.pending.popleft()
        self._sent_this_window += 1
        if outcome is TxOutcome.DELIVERED:
            self.ledger.leaf_tx_done(pkt, self.sim.now)
        else:
            self.ledger.dropped(pkt, f"leaf_{outcome.value}")
        self.contend()
