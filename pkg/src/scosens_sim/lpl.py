"""Simplified ContikiMAC-style low-power listening, used as a baseline.

Receivers wake every ``check_interval`` for ``check_duration``; a sender
repeats the whole frame with short gaps for one check interval (plus one
airtime) so that some copy lands in the receiver's check. There is no
phase-lock optimisation, so results are "LPL-like" rather than ContikiMAC.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

from .csma import CsmaMac, CsmaParams, MacFault, TxJob, TxOutcome
from .engine import Simulator
from .packets import PacketLedger, PacketRecord
from .radio import Frame, FrameKind, Medium, Power, TransmissionRecord, frame_airtime


@dataclass
class LplParams:
    check_interval: int = 125_000
    check_duration: int = 1_000
    strobe_gap: int = 400
    max_frame_attempts: int = 8
    detect_timeout: int = 10_000  # stay-on after energy with no frame addressed to us
    # Pause before a retry: unit + uniform[0, min(attempts, 3) * unit), as the
    # Contiki CSMA layer does with unit = one check interval. 0 retries at once.
    retry_unit: int = 125_000

    def __post_init__(self):
        if not 0 < self.check_duration < self.check_interval:
            raise ValueError("need 0 < check_duration < check_interval")
        if self.retry_unit < 0:
            raise ValueError("retry_unit must be >= 0")
        if self.strobe_gap <= 0 or self.detect_timeout <= 0:
            raise ValueError("strobe_gap and detect_timeout must be positive")
        if self.max_frame_attempts < 1:
            raise ValueError("max_frame_attempts must be >= 1")


class LplNode:
    """One radio running LPL; may act as periodic receiver, sender, or both.

    ``mac`` supplies sequence numbers and the ack responder; the strobe train
    replaces its CSMA transmit path.
    """

    def __init__(self, sim: Simulator, medium: Medium, mac: CsmaMac, node: int,
                 params: LplParams, csma: CsmaParams, rng: random.Random,
                 receiver: bool = False,
                 on_data: Optional[Callable[[Frame], None]] = None):
        self.sim = sim
        self.medium = medium
        self.mac = mac
        self.node = node
        self.p = params
        self.csma = csma
        self.rng = rng
        self.receiver = receiver
        self.on_data = on_data
        self.trace = medium.trace
        self.checking = False
        self.holding = False
        self.job: Optional[TxJob] = None
        self._on_done = None
        self._timer: Optional[int] = None
        self._hold_timer: Optional[int] = None
        self._train_start = 0
        self._awaiting_ack = False
        self.checks = 0
        medium.radios[node].on_frame = self.on_frame

    # radio ownership -------------------------------------------------------

    @property
    def sending(self) -> bool:
        return self.job is not None

    def _release_radio(self) -> None:
        if not (self.sending or self.checking or self.holding):
            power = self.medium.power(self.node)
            if self.mac.ack_busy_until > self.sim.now or power is Power.TRANSMITTING:
                # the ack's own end event is queued first at the same instant
                self.sim.schedule(max(self.sim.now, self.mac.ack_busy_until),
                                  self._release_radio, target=self.node, kind="release")
                return
            if power is Power.LISTENING:
                self.medium.set_radio(self.node, Power.OFF)

    # receiver --------------------------------------------------------------

    def start_checks(self, first: int) -> None:
        self.receiver = True
        self.sim.schedule(first, self._check, target=self.node, kind="lpl_check")

    def _check(self) -> None:
        now = self.sim.now
        self.sim.schedule(now + self.p.check_interval, self._check, target=self.node,
                          kind="lpl_check")
        if self.sending or self.holding or self.medium.power(self.node) is not Power.OFF:
            return
        self.checks += 1
        self.checking = True
        self.medium.set_radio(self.node, Power.LISTENING)
        self.sim.schedule(now + self.p.check_duration, lambda: self._check_end(now),
                          target=self.node, kind="lpl_check_end")

    def _check_end(self, started: int) -> None:
        self.checking = False
        if self.medium.activity_since(started):
            self._hold()
        self._release_radio()

    def _hold(self) -> None:
        self.holding = True
        self.sim.cancel(self._hold_timer)
        self._hold_timer = self.sim.schedule(self.sim.now + self.p.detect_timeout,
                                             self._hold_expired, target=self.node,
                                             kind="lpl_hold")

    def _hold_expired(self) -> None:
        self._hold_timer = None
        if self.medium.busy():
            self._hold()
            return
        self.holding = False
        self._release_radio()

    def on_frame(self, frame: Frame, rec: TransmissionRecord) -> None:
        if frame.kind is FrameKind.ACK:
            self._on_ack(frame)
            return
        if frame.kind is not FrameKind.DATA or frame.dst != self.node or self.sending:
            return
        is_new = self.mac.on_unicast_received(frame)
        self.sim.cancel(self._hold_timer)
        self._hold_timer = None
        self.holding = False
        if is_new and self.on_data is not None:
            self.on_data(frame)
        self._release_radio()

    # sender ----------------------------------------------------------------

    def send(self, frame: Frame, on_done: Callable[[TxOutcome, TxJob], None]) -> TxJob:
        if self.job is not None:
            raise MacFault(f"node {self.node}: LPL send while another is in flight")
        self.job = TxJob(frame)
        self._on_done = on_done
        self.sim.cancel(self._hold_timer)
        self._hold_timer = None
        self.holding = False
        self.medium.set_radio(self.node, Power.LISTENING)
        self._start_attempt()
        return self.job

    def _start_attempt(self) -> None:
        self.job.nb = 0
        self.job.be = self.csma.min_be
        self._backoff()

    def _backoff(self) -> None:
        delay = self.rng.randrange(1 << self.job.be) * self.csma.backoff_period
        self.trace.emit(self.sim.now, self.node, "state", what="backoff", be=self.job.be,
                        nb=self.job.nb, delay=delay)
        self._timer = self.sim.schedule(self.sim.now + delay, self._cca, target=self.node,
                                        kind="backoff")

    def _cca(self) -> None:
        self._timer = None
        if self.medium.power(self.node) is Power.TRANSMITTING:
            # an ack we owed is on air; treat it as a busy channel
            clear = False
        else:
            clear = self.medium.cca(self.node)
        self.trace.emit(self.sim.now, self.node, "state", what="cca",
                        result="clear" if clear else "busy")
        if clear:
            self._train_start = self.sim.now + self.csma.cca_to_tx
            self.trace.emit(self.sim.now, self.node, "state", what="attempt",
                            attempt=self.job.attempts + 1, seq=self.job.frame.seq)
            self._timer = self.sim.schedule(self._train_start, self._strobe, target=self.node,
                                            kind="turnaround")
            return
        self.job.nb += 1
        self.job.be = min(self.job.be + 1, self.csma.max_be)
        if self.job.nb > self.csma.max_csma_backoffs:
            self._attempt_failed(TxOutcome.CHANNEL_ACCESS_FAILURE)
        else:
            self._backoff()

    def _strobe(self) -> None:
        self._timer = None
        self.job.transmissions += 1
        self.medium.begin_tx(self.node, self.job.frame, on_end=self._strobe_end)

    def _strobe_end(self, rec: TransmissionRecord) -> None:
        if self.job is None or rec.frame is not self.job.frame:
            return
        nxt = self.sim.now + self.p.strobe_gap
        if self.job.frame.broadcast:
            if nxt <= self._train_start + self.p.check_interval:
                self._timer = self.sim.schedule(nxt, self._strobe, target=self.node,
                                                kind="strobe")
            else:
                self.job.attempts += 1
                self._finish(TxOutcome.DELIVERED)
            return
        self._awaiting_ack = True
        self._timer = self.sim.schedule(nxt, self._gap_end, target=self.node, kind="strobe_gap")

    def _gap_end(self) -> None:
        self._timer = None
        active = [r.end for r in self.medium.active if r.end > self.sim.now]
        if active:
            # something (maybe our ack) is on air: wait for it before strobing on
            self._timer = self.sim.schedule(max(active), self._gap_end, target=self.node,
                                            kind="strobe_gap")
            return
        if self.sim.now <= self._train_start + self.p.check_interval:
            self._awaiting_ack = False
            self._strobe()
        else:
            self._awaiting_ack = False
            self._attempt_failed(TxOutcome.NO_ACK)

    def _on_ack(self, frame: Frame) -> None:
        job = self.job
        if (job is None or not self._awaiting_ack or frame.dst != self.node
                or frame.seq != job.frame.seq or frame.src != job.frame.dst):
            return
        job.attempts += 1
        self._finish(TxOutcome.DELIVERED)

    def _attempt_failed(self, outcome: TxOutcome) -> None:
        self.job.attempts += 1
        if self.job.attempts >= self.p.max_frame_attempts:
            self._finish(outcome)
            return
        unit = self.p.retry_unit
        if unit == 0:
            self._start_attempt()
            return
        pause = unit + self.rng.randrange(min(self.job.attempts, 3) * unit)
        self.medium.set_radio(self.node, Power.OFF)
        self._timer = self.sim.schedule(self.sim.now + pause, self._resume, target=self.node,
                                        kind="lpl_retry")

    def _resume(self) -> None:
        self._timer = None
        self.medium.set_radio(self.node, Power.LISTENING)
        self._start_attempt()

    def _finish(self, outcome: TxOutcome) -> None:
        job, cb = self.job, self._on_done
        self.sim.cancel(self._timer)
        self._timer = None
        self._awaiting_ack = False
        self.job = None
        self._on_done = None
        self.trace.emit(self.sim.now, self.node, "state", what="outcome",
                        outcome=outcome.value, attempts=job.attempts, seq=job.frame.seq)
        self._release_radio()
        if cb is not None:
            cb(outcome, job)


class LplLeaf:
    """Packet source: radio off except while strobing a packet out."""

    def __init__(self, lpl: LplNode, router: int, ledger: PacketLedger, data_len: int,
                 queue_capacity: Optional[int] = None):
        self.lpl = lpl
        self.router = router
        self.ledger = ledger
        self.data_len = data_len
        self.queue_capacity = queue_capacity
        self.pending: deque[PacketRecord] = deque()

    def on_packet_arrival(self, pkt: PacketRecord) -> None:
        if self.queue_capacity is not None and len(self.pending) >= self.queue_capacity:
            self.ledger.dropped(pkt, "leaf_queue_full")
            return
        self.pending.append(pkt)
        if not self.lpl.sending:
            self._next()

    def _next(self) -> None:
        if not self.pending:
            return
        pkt = self.pending[0]
        pkt.seq = self.lpl.mac.next_seq()
        frame = Frame(FrameKind.DATA, self.lpl.node, self.router, self.data_len, pkt.seq,
                      packet=pkt)
        self.lpl.send(frame, self._sent)

    def _sent(self, outcome: TxOutcome, job: TxJob) -> None:
        pkt = self.pending.popleft()
        if outcome is TxOutcome.DELIVERED:
            self.ledger.leaf_tx_done(pkt, self.lpl.sim.now)
        else:
            self.ledger.dropped(pkt, f"leaf_{outcome.value}")
        self._next()


class LplRouter:
    """Duty-cycled receiver that relays every new packet to the sink."""

    def __init__(self, lpl: LplNode, sink: int, ledger: PacketLedger, data_len: int,
                 forward: bool = True):
        self.lpl = lpl
        self.sink = sink
        self.ledger = ledger
        self.data_len = data_len
        self.forward = forward
        self.queue: deque[PacketRecord] = deque()
        lpl.on_data = self._received

    def _received(self, frame: Frame) -> None:
        pkt = frame.packet
        if pkt is None:
            return
        sim = self.lpl.sim
        self.ledger.router_rx(pkt, sim.now, terminal=not self.forward)
        if not self.forward:
            return
        self.queue.append(pkt)
        if not self.lpl.sending and len(self.queue) == 1:
            sim.schedule(max(sim.now, self.lpl.mac.ack_busy_until), self._pump,
                         target=self.lpl.node, kind="relay")

    def _pump(self) -> None:
        if self.lpl.sending or not self.queue:
            return
        if self.lpl.mac.ack_busy_until > self.lpl.sim.now:
            self.lpl.sim.schedule(self.lpl.mac.ack_busy_until, self._pump,
                                  target=self.lpl.node, kind="relay")
            return
        pkt = self.queue[0]
        frame = Frame(FrameKind.DATA, self.lpl.node, self.sink, self.data_len,
                      self.lpl.mac.next_seq(), packet=pkt)
        self.lpl.send(frame, self._forwarded)

    def _forwarded(self, outcome: TxOutcome, job: TxJob) -> None:
        pkt = self.queue.popleft()
        if outcome is not TxOutcome.DELIVERED:
            self.ledger.dropped(pkt, f"router_{outcome.value}", at_router=True)
        self._pump()


def idle_duty_cycle(params: LplParams) -> float:
    return params.check_duration / params.check_interval


def rendezvous_bound(params: LplParams, mpdu_len: int) -> int:
    """Worst-case first-attempt delivery time for a lone sender."""
    return params.check_interval + frame_airtime(mpdu_len)
