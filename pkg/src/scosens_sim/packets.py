"""Application packets and their end-to-end bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional


class Outcome(str, Enum):
    QUEUED = "queued"
    AT_ROUTER = "at_router"
    AT_SINK = "at_sink"
    DROPPED = "dropped"


@dataclass(eq=False)
class PacketRecord:
    uid: int
    origin: int
    t_generated: int
    t_leaf_tx_done: Optional[int] = None
    t_router_rx: Optional[int] = None
    t_sink_rx: Optional[int] = None
    outcome: Outcome = Outcome.QUEUED
    drop_reason: Optional[str] = None
    job: object = None  # MAC attempt state carried across cycles
    seq: Optional[int] = None


class PacketLedger:
    """Records every packet's life; protocols report milestones here."""

    def __init__(self):
        self.packets: list[PacketRecord] = []

    def new_packet(self, origin: int, t: int) -> PacketRecord:
        pkt = PacketRecord(len(self.packets) + 1, origin, t)
        self.packets.append(pkt)
        return pkt

    def leaf_tx_done(self, pkt: PacketRecord, t: int) -> None:
        if pkt.t_leaf_tx_done is None:
            pkt.t_leaf_tx_done = t

    def router_rx(self, pkt: PacketRecord, t: int, terminal: bool) -> None:
        if pkt.t_router_rx is None:
            pkt.t_router_rx = t
            if pkt.outcome is Outcome.QUEUED:
                pkt.outcome = Outcome.AT_ROUTER if terminal else Outcome.QUEUED

    def sink_rx(self, pkt: PacketRecord, t: int) -> None:
        if pkt.t_sink_rx is None:
            pkt.t_sink_rx = t
            pkt.outcome = Outcome.AT_SINK

    def dropped(self, pkt: PacketRecord, reason: str, at_router: bool = False) -> None:
        # A lost ack can make a leaf give up on a packet the router already holds.
        if pkt.outcome is not Outcome.QUEUED:
            return
        if not at_router and pkt.t_router_rx is not None:
            return
        pkt.outcome = Outcome.DROPPED
        pkt.drop_reason = reason
