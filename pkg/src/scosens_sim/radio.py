"""Single-collision-domain 802.15.4 radio medium.

Zero propagation delay, no path loss; a frame is lost only when another
transmission overlaps it or the receiver was not listening for its whole
airtime. Transmission intervals are half-open ``[start, end)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional

from .engine import Simulator
from .trace import TraceRecorder

BROADCAST = 0xFFFF
MAX_MPDU = 127
PHY_HEADER_BYTES = 6  # preamble (4) + SFD (1) + length (1)
BYTE_US = 32  # 250 kbit/s
ACK_LEN = 5
BEACON_LEN = 13
DATA_OVERHEAD = 11  # FCF, seq, PAN id, dst, src, FCS


class RadioFault(RuntimeError):
    """Protocol code drove the radio into an impossible state."""


class FrameKind(str, Enum):
    DATA = "data"
    ACK = "ack"
    BEACON = "beacon"
    STROBE = "strobe"


class Power(str, Enum):
    OFF = "off"
    LISTENING = "listening"
    TRANSMITTING = "transmitting"


def frame_airtime(mpdu_len: int) -> int:
    """On-air duration in microseconds of an MPDU of ``mpdu_len`` bytes."""
    if not 0 <= mpdu_len <= MAX_MPDU:
        raise ValueError(f"MPDU length {mpdu_len} outside 0..{MAX_MPDU}")
    return (PHY_HEADER_BYTES + mpdu_len) * BYTE_US


def encode_beacon(src: int, seq: int, sp_us: int, wp_us: int) -> bytes:
    """13-byte beacon MPDU: FCF, seq, source address, then SP and WP as u32 LE."""
    return struct.pack("<HBHII", 0x0000, seq & 0xFF, src & 0xFFFF, sp_us, wp_us)


def decode_beacon(raw: bytes) -> tuple[int, int, int, int]:
    """Inverse of :func:`encode_beacon`; returns (src, seq, sp_us, wp_us)."""
    if len(raw) != BEACON_LEN:
        raise ValueError(f"beacon must be {BEACON_LEN} bytes, got {len(raw)}")
    _fcf, seq, src, sp_us, wp_us = struct.unpack("<HBHII", raw)
    return src, seq, sp_us, wp_us


@dataclass(eq=False)
class Frame:
    kind: FrameKind
    src: int
    dst: int
    mpdu_len: int
    seq: int = 0
    beacon_payload: Optional[tuple[int, int]] = None
    packet: Any = None  # harness-level packet carried by data frames

    def __post_init__(self):
        if not 0 <= self.mpdu_len <= MAX_MPDU:
            raise ValueError(f"MPDU length {self.mpdu_len} outside 0..{MAX_MPDU}")
        self.seq &= 0xFF
        if self.kind is FrameKind.BEACON and self.beacon_payload is None:
            raise ValueError("beacon frames carry (sp_us, wp_us)")
        if self.kind is FrameKind.ACK and self.mpdu_len != ACK_LEN:
            raise ValueError("ack frames are 5 bytes")

    @property
    def broadcast(self) -> bool:
        return self.dst == BROADCAST

    def to_bytes(self) -> bytes:
        if self.kind is not FrameKind.BEACON:
            raise NotImplementedError("only beacons have a wire encoding")
        return encode_beacon(self.src, self.seq, *self.beacon_payload)


@dataclass(eq=False)
class TransmissionRecord:
    uid: int
    frame: Frame
    start: int
    end: int
    collided: bool = False


@dataclass(eq=False)
class RadioState:
    node: int
    power: Power = Power.OFF
    on_since: int = 0
    accumulated_on: int = 0
    receiving: set = field(default_factory=set)
    on_frame: Optional[Callable[[Frame, TransmissionRecord], None]] = None
    delivered: int = 0
    corrupted: int = 0
    missed: int = 0

    def on_time(self, now: int) -> int:
        if self.power is Power.OFF:
            return self.accumulated_on
        return self.accumulated_on + now - self.on_since


class Medium:
    """Broadcast medium shared by every node of one PAN."""

    def __init__(self, sim: Simulator, trace: Optional[TraceRecorder] = None):
        self.sim = sim
        self.trace = trace if trace is not None else TraceRecorder(enabled=False)
        self.radios: dict[int, RadioState] = {}
        self.active: list[TransmissionRecord] = []
        self.transmissions = 0
        self.collided_transmissions = 0
        self._uid = 0
        self._last_end = -1

    def attach(self, node: int, on_frame: Optional[Callable] = None) -> RadioState:
        if node in self.radios:
            raise ValueError(f"node {node} already attached")
        radio = RadioState(node, on_frame=on_frame)
        self.radios[node] = radio
        return radio

    def power(self, node: int) -> Power:
        return self.radios[node].power

    def set_radio(self, node: int, power: Power) -> None:
        radio = self.radios[node]
        old = radio.power
        if old is power:
            return
        now = self.sim.now
        if old is Power.OFF:
            radio.on_since = now
            self.trace.emit(now, node, "radio_on")
        elif power is Power.OFF:
            radio.accumulated_on += now - radio.on_since
            self.trace.emit(now, node, "radio_off")
        if old is Power.LISTENING:
            radio.receiving.clear()
        radio.power = power

    def busy(self) -> bool:
        now = self.sim.now
        return any(r.start <= now < r.end for r in self.active)

    def cca(self, node: int) -> bool:
        """True when the channel is clear at this instant."""
        if self.radios[node].power is not Power.LISTENING:
            raise RadioFault(f"CCA on node {node} whose radio is {self.radios[node].power.value}")
        return not self.busy()

    def activity_since(self, t0: int) -> bool:
        """Whether any transmission overlapped ``[t0, now]``."""
        return self._last_end > t0 or bool(self.active)

    def begin_tx(self, node: int, frame: Frame,
                 on_end: Optional[Callable[[TransmissionRecord], None]] = None) -> TransmissionRecord:
        radio = self.radios[node]
        if radio.power is Power.OFF:
            raise RadioFault(f"node {node} transmits with radio off")
        if radio.power is Power.TRANSMITTING:
            raise RadioFault(f"node {node} is already transmitting")
        now = self.sim.now
        self._uid += 1
        rec = TransmissionRecord(self._uid, frame, now, now + frame_airtime(frame.mpdu_len))
        for other in self.active:
            if other.end > now:
                other.collided = True
                rec.collided = True
        self.set_radio(node, Power.TRANSMITTING)
        for r in self.radios.values():
            if r.power is Power.LISTENING:
                r.receiving.add(rec.uid)
        self.active.append(rec)
        self.transmissions += 1
        self.trace.emit(now, node, "tx_start", uid=rec.uid, frame=frame.kind.value,
                        dst=frame.dst, seq=frame.seq, len=frame.mpdu_len)
        self.sim.schedule(rec.end, lambda: self._end_tx(rec, on_end), target=node, kind="tx_end")
        return rec

    def _end_tx(self, rec: TransmissionRecord, on_end) -> None:
        now = self.sim.now
        src = rec.frame.src
        self.active.remove(rec)
        self._last_end = max(self._last_end, now)
        if rec.collided:
            self.collided_transmissions += 1
        self.trace.emit(now, src, "tx_end", uid=rec.uid)
        sender = self.radios[src]
        if sender.power is Power.TRANSMITTING:
            self.set_radio(src, Power.LISTENING)
        deliveries = []
        for node, r in self.radios.items():
            if node == src:
                continue
            if rec.uid in r.receiving:
                r.receiving.discard(rec.uid)
                if rec.collided:
                    r.corrupted += 1
                    self.trace.emit(now, node, "rx_collision", uid=rec.uid)
                else:
                    r.delivered += 1
                    self.trace.emit(now, node, "rx_ok", uid=rec.uid, src=src)
                    if r.on_frame is not None:
                        deliveries.append(r.on_frame)
            else:
                r.missed += 1
        for cb in deliveries:
            cb(rec.frame, rec)
        if on_end is not None:
            on_end(rec)
