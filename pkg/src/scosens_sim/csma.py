"""Unslotted CSMA/CA with binary exponential backoff, acks and retries."""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .engine import Simulator
from .radio import ACK_LEN, Frame, FrameKind, Medium, Power, TransmissionRecord, frame_airtime
from .trace import TraceRecorder


class MacFault(RuntimeError):
    pass


class TxOutcome(str, Enum):
    DELIVERED = "delivered"
    CHANNEL_ACCESS_FAILURE = "channel_access_failure"
    NO_ACK = "no_ack"
    DEFERRED = "deferred"  # did not fit before the caller's deadline


@dataclass
class CsmaParams:
    backoff_period: int = 320
    min_be: int = 3
    max_be: int = 5
    max_csma_backoffs: int = 4
    max_frame_attempts: int = 8
    ack_wait: int = 864
    turnaround: int = 192
    # RX->TX switch between a clear CCA and the first symbol; 0 sends at the CCA instant
    cca_to_tx: int = 192
    # False: a channel access failure ends the send without retrying.
    caf_consumes_attempt: bool = True

    def __post_init__(self):
        if not 0 <= self.min_be <= self.max_be:
            raise ValueError("need 0 <= min_be <= max_be")
        if min(self.backoff_period, self.ack_wait, self.turnaround) <= 0:
            raise ValueError("CSMA durations must be positive")
        if self.max_frame_attempts < 1:
            raise ValueError("max_frame_attempts must be >= 1")
        if self.max_csma_backoffs < 0:
            raise ValueError("max_csma_backoffs must be >= 0")
        if self.cca_to_tx < 0:
            raise ValueError("cca_to_tx must be >= 0")


@dataclass(eq=False)
class TxJob:
    """A frame plus its attempt budget; survives across deferred sends."""
    frame: Frame
    attempts: int = 0
    transmissions: int = 0
    be: int = 0
    nb: int = 0


DoneCallback = Callable[[TxOutcome, TxJob], None]


class CsmaMac:
    """Per-node channel access and ack handling.

    The caller keeps the radio listening for the whole send; the MAC never
    powers it off.
    """

    def __init__(self, sim: Simulator, medium: Medium, node: int, rng: random.Random,
                 params: CsmaParams, trace: Optional[TraceRecorder] = None):
        self.sim = sim
        self.medium = medium
        self.node = node
        self.rng = rng
        self.p = params
        self.trace = trace if trace is not None else medium.trace
        self.job: Optional[TxJob] = None
        self._on_done: Optional[DoneCallback] = None
        self._deadline: Optional[int] = None
        self._timer: Optional[int] = None
        self._awaiting_ack = False
        self._seen: dict[int, int] = {}
        self.ack_busy_until = 0
        self._seq = rng.randrange(256)
        self.backoff_log: Optional[list[tuple[int, int]]] = None  # (be, delay) when enabled

    @property
    def busy(self) -> bool:
        return self.job is not None

    def next_seq(self) -> int:
        self._seq = (self._seq + 1) & 0xFF
        return self._seq

    # sender side -----------------------------------------------------------

    def send(self, frame: Frame, on_done: DoneCallback, deadline: Optional[int] = None,
             job: Optional[TxJob] = None) -> TxJob:
        if self.job is not None:
            raise MacFault(f"node {self.node}: send while another send is in flight")
        if self.medium.power(self.node) is Power.OFF:
            raise MacFault(f"node {self.node}: send with radio off")
        job = job or TxJob(frame)
        if job.attempts >= self.p.max_frame_attempts:
            raise MacFault(f"node {self.node}: job already used all attempts")
        self.job = job
        self._on_done = on_done
        self._deadline = deadline
        self._start_attempt()
        return job

    def abort(self) -> Optional[TxJob]:
        """Drop the in-flight send silently (no callback)."""
        job = self.job
        self.sim.cancel(self._timer)
        self._timer = None
        self._awaiting_ack = False
        self.job = None
        self._on_done = None
        return job

    def _fits(self) -> bool:
        if self._deadline is None:
            return True
        frame = self.job.frame
        need = (self.p.cca_to_tx + frame_airtime(frame.mpdu_len)
                + (0 if frame.broadcast else self.p.ack_wait))
        return self.sim.now + need <= self._deadline

    def _start_attempt(self) -> None:
        job = self.job
        job.nb = 0
        job.be = self.p.min_be
        self._backoff()

    def _backoff(self) -> None:
        if not self._fits():
            self._finish(TxOutcome.DEFERRED)
            return
        job = self.job
        delay = self.rng.randrange(1 << job.be) * self.p.backoff_period
        if self.backoff_log is not None:
            self.backoff_log.append((job.be, delay))
        self.trace.emit(self.sim.now, self.node, "state", what="backoff", be=job.be,
                        nb=job.nb, delay=delay)
        self._timer = self.sim.schedule(self.sim.now + delay, self._cca, target=self.node,
                                        kind="backoff")

    def _cca(self) -> None:
        self._timer = None
        if not self._fits():
            self._finish(TxOutcome.DEFERRED)
            return
        job = self.job
        clear = self.medium.cca(self.node)
        self.trace.emit(self.sim.now, self.node, "state", what="cca",
                        result="clear" if clear else "busy")
        if clear:
            if self.p.cca_to_tx:
                self._timer = self.sim.schedule(self.sim.now + self.p.cca_to_tx, self._transmit,
                                                target=self.node, kind="turnaround")
            else:
                self._transmit()
            return
        job.nb += 1
        job.be = min(job.be + 1, self.p.max_be)
        if job.nb > self.p.max_csma_backoffs:
            if self.p.caf_consumes_attempt:
                self._attempt_failed(TxOutcome.CHANNEL_ACCESS_FAILURE)
            else:
                self._finish(TxOutcome.CHANNEL_ACCESS_FAILURE)
        else:
            self._backoff()

    def _transmit(self) -> None:
        self._timer = None
        job = self.job
        job.transmissions += 1
        self.trace.emit(self.sim.now, self.node, "state", what="attempt",
                        attempt=job.attempts + 1, seq=job.frame.seq)
        self.medium.begin_tx(self.node, job.frame, on_end=self._tx_done)

    def _tx_done(self, rec: TransmissionRecord) -> None:
        if self.job is None or rec.frame is not self.job.frame:
            return
        if rec.frame.broadcast:
            self.job.attempts += 1
            self._finish(TxOutcome.DELIVERED)
            return
        self._awaiting_ack = True
        self._timer = self.sim.schedule(self.sim.now + self.p.ack_wait, self._ack_timeout,
                                        target=self.node, kind="ack_wait")

    def _ack_timeout(self) -> None:
        self._timer = None
        self._awaiting_ack = False
        self._attempt_failed(TxOutcome.NO_ACK)

    def _attempt_failed(self, outcome: TxOutcome) -> None:
        job = self.job
        job.attempts += 1
        if job.attempts >= self.p.max_frame_attempts:
            self._finish(outcome)
        else:
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
        if cb is not None:
            cb(outcome, job)

    def on_ack(self, frame: Frame) -> bool:
        """Feed an intact ack frame; True if it completed the pending send."""
        job = self.job
        if (not self._awaiting_ack or job is None or frame.dst != self.node
                or frame.seq != job.frame.seq or frame.src != job.frame.dst):
            return False
        self.sim.cancel(self._timer)
        self._timer = None
        self._awaiting_ack = False
        job.attempts += 1
        self._finish(TxOutcome.DELIVERED)
        return True

    # receiver side ---------------------------------------------------------

    def on_unicast_received(self, frame: Frame) -> bool:
        """Schedule the ack; return True when the frame is new (not a duplicate)."""
        if frame.dst != self.node or frame.kind is FrameKind.ACK:
            return False
        ack = Frame(FrameKind.ACK, self.node, frame.src, ACK_LEN, frame.seq)
        start = self.sim.now + self.p.turnaround
        self.ack_busy_until = start + frame_airtime(ACK_LEN)
        self.sim.schedule(start, lambda: self._send_ack(ack), target=self.node, kind="ack")
        is_new = self._seen.get(frame.src) != frame.seq
        self._seen[frame.src] = frame.seq
        return is_new

    def _send_ack(self, ack: Frame) -> None:
        if self.medium.power(self.node) is not Power.LISTENING:
            return
        self.trace.emit(self.sim.now, self.node, "ack", seq=ack.seq, dst=ack.dst)
        self.medium.begin_tx(self.node, ack)
