"""Star-topology PAN: one router, N leaves, one always-listening sink."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

from ..csma import CsmaMac
from ..engine import NodeClock, Simulator, node_rng
from ..lpl import LplLeaf, LplNode, LplRouter
from ..packets import Outcome, PacketLedger
from ..radio import Frame, FrameKind, Medium, Power, TransmissionRecord
from ..scosens import ScosensLeaf, ScosensRouter
from ..trace import TraceRecorder
from .config import ScenarioConfig
from .metrics import MetricsReport, accounting, compute_delays, compute_prr

ROUTER_ID = 1


class Sink:
    def __init__(self, medium: Medium, mac: CsmaMac, node: int, ledger: PacketLedger):
        self.medium = medium
        self.mac = mac
        self.node = node
        self.ledger = ledger
        medium.radios[node].on_frame = self.on_frame
        medium.set_radio(node, Power.LISTENING)

    def on_frame(self, frame: Frame, rec: TransmissionRecord) -> None:
        if frame.kind is FrameKind.DATA and frame.dst == self.node:
            if self.mac.on_unicast_received(frame) and frame.packet is not None:
                self.ledger.sink_rx(frame.packet, self.medium.sim.now)


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    metrics: MetricsReport
    trace: TraceRecorder
    ledger: PacketLedger
    medium: Medium
    nodes: dict

    @property
    def counted(self):
        return [p for p in self.ledger.packets if p.t_generated >= self.config.warmup]


class Scenario:
    """Builds and wires a PAN; ``run`` executes it to ``config.duration``."""

    def __init__(self, config: ScenarioConfig):
        self.cfg = config.validate()
        self.sim = Simulator()
        self.trace = TraceRecorder(enabled=config.trace)
        self.medium = Medium(self.sim, self.trace)
        self.ledger = PacketLedger()
        self.leaf_ids = list(range(ROUTER_ID + 1, ROUTER_ID + 1 + config.n_leaves))
        self.sink_id = ROUTER_ID + config.n_leaves + 1
        self.rngs = {n: node_rng(config.seed, n)
                     for n in [ROUTER_ID, *self.leaf_ids, self.sink_id]}
        for n in self.rngs:
            self.medium.attach(n)
        self.macs = {n: CsmaMac(self.sim, self.medium, n, self.rngs[n], config.csma)
                     for n in self.rngs}
        self.sink = Sink(self.medium, self.macs[self.sink_id], self.sink_id, self.ledger)
        self.leaves: dict[int, object] = {}
        if config.protocol == "scosens":
            self._build_scosens()
        else:
            self._build_lpl()
        self._traffic_rngs = {n: node_rng(config.seed ^ 0x5EED, n) for n in self.leaf_ids}
        for n in self.leaf_ids:
            self._start_traffic(n)

    def _clock(self, node: int) -> NodeClock:
        q = self.cfg.quantization
        return NodeClock(q, self.rngs[node].randrange(q) if q > 1 else 0)

    def _build_scosens(self) -> None:
        cfg = self.cfg
        params = dataclasses.replace(cfg.scosens, tp_enabled=cfg.tp_enabled)
        self.router = ScosensRouter(self.sim, self.medium, self.macs[ROUTER_ID], ROUTER_ID,
                                    params, self.sink_id, self.ledger,
                                    clock=self._clock(ROUTER_ID), data_len=cfg.mpdu_len)
        for n in self.leaf_ids:
            self.leaves[n] = ScosensLeaf(self.sim, self.medium, self.macs[n], n, params,
                                         ROUTER_ID, self.ledger, clock=self._clock(n),
                                         data_len=cfg.mpdu_len,
                                         queue_capacity=cfg.leaf_queue_capacity)
        self.router.start(0)

    def _build_lpl(self) -> None:
        cfg = self.cfg
        lpl = dataclasses.replace(cfg.lpl, max_frame_attempts=cfg.csma.max_frame_attempts)
        rnode = LplNode(self.sim, self.medium, self.macs[ROUTER_ID], ROUTER_ID, lpl, cfg.csma,
                        self.rngs[ROUTER_ID], receiver=True)
        self.router = LplRouter(rnode, self.sink_id, self.ledger, cfg.mpdu_len,
                                forward=cfg.tp_enabled)
        rnode.start_checks(self.rngs[ROUTER_ID].randrange(lpl.check_interval))
        for n in self.leaf_ids:
            node = LplNode(self.sim, self.medium, self.macs[n], n, lpl, cfg.csma, self.rngs[n])
            self.leaves[n] = LplLeaf(node, ROUTER_ID, self.ledger, cfg.mpdu_len,
                                     queue_capacity=cfg.leaf_queue_capacity)

    def _start_traffic(self, node: int) -> None:
        cfg = self.cfg
        if cfg.traffic == "none":
            return
        rng = self._traffic_rngs[node]
        first = rng.randrange(cfg.pai)
        if first < cfg.duration:
            self.sim.schedule(first, lambda: self._generate(node), target=node, kind="traffic")

    def _generate(self, node: int) -> None:
        cfg = self.cfg
        now = self.sim.now
        pkt = self.ledger.new_packet(node, now)
        self.trace.emit(now, node, "state", what="packet", uid=pkt.uid)
        self.leaves[node].on_packet_arrival(pkt)
        if cfg.traffic == "periodic":
            gap = cfg.pai
        else:
            gap = max(1, round(self._traffic_rngs[node].expovariate(1.0 / cfg.pai)))
        if now + gap < cfg.duration:
            self.sim.schedule(now + gap, lambda: self._generate(node), target=node,
                              kind="traffic")

    def run(self) -> ScenarioResult:
        cfg = self.cfg
        self.sim.run_until(cfg.duration)
        return ScenarioResult(cfg, self._metrics(), self.trace, self.ledger, self.medium,
                              {"router": self.router, "leaves": self.leaves, "sink": self.sink})

    def held_packets(self) -> set[int]:
        """UIDs of packets physically waiting in some node's queue."""
        held = set()
        for leaf in self.leaves.values():
            held.update(p.uid for p in leaf.pending)
        held.update(p.uid for p in getattr(self.router, "queue", ()))
        return held

    def _metrics(self) -> MetricsReport:
        cfg = self.cfg
        counted = [p for p in self.ledger.packets if p.t_generated >= cfg.warmup]
        delays = compute_delays(counted, cfg.tp_enabled)
        prr = compute_prr(counted, cfg.tp_enabled)
        duty = {n: r.on_time(cfg.duration) / cfg.duration for n, r in self.medium.radios.items()}
        reasons = [p.drop_reason for p in counted if p.outcome is Outcome.DROPPED]
        outcomes = dict(accounting(counted))
        totals = accounting(self.ledger.packets)
        # a sender that missed the ack may still hold a copy of a delivered packet,
        # so held can exceed queued; every queued packet must sit in some queue though
        queued = {p.uid for p in self.ledger.packets if p.outcome is Outcome.QUEUED}
        balanced = (len(self.ledger.packets) == sum(totals.values())
                    and queued <= self.held_packets())
        return MetricsReport(
            protocol=cfg.protocol, seed=cfg.seed, pai_us=cfg.pai,
            generated=len(counted), delivered=delays.count, prr=prr,
            delay_mean_us=delays.mean, delay_median_us=delays.median, delay_p95_us=delays.p95,
            leaf_duty_cycle=sum(duty[n] for n in self.leaf_ids) / len(self.leaf_ids),
            router_duty_cycle=duty[ROUTER_ID], sink_duty_cycle=duty[self.sink_id],
            collisions=self.medium.collided_transmissions,
            transmissions=self.medium.transmissions,
            csma_failures=sum(r.endswith("channel_access_failure") for r in reasons),
            no_ack_drops=sum(r.endswith("no_ack") for r in reasons),
            queue_drops=sum(r == "leaf_queue_full" for r in reasons),
            still_queued=outcomes.get(Outcome.QUEUED.value, 0),
            accounting_ok=balanced, outcomes=outcomes, duty_cycles=duty)


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    return Scenario(config).run()
