"""PRR, end-to-end delay and duty-cycle aggregation."""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

import numpy as np

from ..packets import Outcome, PacketRecord


def _endpoint(pkt: PacketRecord, tp_enabled: bool) -> Optional[int]:
    return pkt.t_sink_rx if tp_enabled else pkt.t_router_rx


def compute_prr(records: Iterable[PacketRecord], tp_enabled: bool = True) -> Optional[float]:
    """Delivered over generated; ``None`` when nothing was generated."""
    generated = delivered = 0
    for pkt in records:
        generated += 1
        if _endpoint(pkt, tp_enabled) is not None:
            delivered += 1
    if generated == 0:
        return None
    return delivered / generated


@dataclass
class DelaySummary:
    count: int
    mean: Optional[float]
    median: Optional[float]
    p95: Optional[float]

    @property
    def absent(self) -> bool:
        return self.count == 0


def compute_delays(records: Iterable[PacketRecord], tp_enabled: bool = True) -> DelaySummary:
    delays = [end - pkt.t_generated for pkt in records
              if (end := _endpoint(pkt, tp_enabled)) is not None]
    if not delays:
        return DelaySummary(0, None, None, None)
    arr = np.asarray(delays, dtype=float)
    return DelaySummary(len(delays), float(arr.mean()), float(np.median(arr)),
                        float(np.percentile(arr, 95)))


def accounting(records: Iterable[PacketRecord]) -> Counter:
    return Counter(pkt.outcome.value for pkt in records)


@dataclass
class MetricsReport:
    protocol: str
    seed: int
    pai_us: int
    generated: int
    delivered: int
    prr: Optional[float]
    delay_mean_us: Optional[float]
    delay_median_us: Optional[float]
    delay_p95_us: Optional[float]
    leaf_duty_cycle: float
    router_duty_cycle: float
    sink_duty_cycle: float
    collisions: int
    transmissions: int
    csma_failures: int
    no_ack_drops: int
    queue_drops: int
    still_queued: int
    accounting_ok: bool = True
    outcomes: dict[str, int] = field(default_factory=dict)
    duty_cycles: dict[int, float] = field(default_factory=dict)

    def to_kv(self) -> str:
        lines = []
        for key, value in asdict(self).items():
            if isinstance(value, dict):
                for k, v in sorted(value.items()):
                    lines.append(f"{key}.{k}={_fmt(v)}")
            else:
                lines.append(f"{key}={_fmt(value)}")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)
